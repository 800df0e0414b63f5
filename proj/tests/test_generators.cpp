#include <gtest/gtest.h>

#include <cmath>

#include "ltvid/diagnostics.hpp"
#include "ltvid/generators.hpp"
#include "ltvid/kalman.hpp"
#include "ltvid/lti.hpp"

using namespace ltvid;

TEST(Generators, StandardSpecHasPaperValues) {
    const auto spec = JumpLinearSpec::standard();
    MatrixXd A1(2, 2), A2(2, 2), B(2, 1);
    A1 << 0.95, 0.1, 0.0, 0.95;
    A2 << 0.5, 0.05, 0.0, 0.5;
    B << 0.2, 1.0;
    EXPECT_EQ(spec.A_before, A1);
    EXPECT_EQ(spec.A_after, A2);
    EXPECT_EQ(spec.B_before, B);
    EXPECT_EQ(spec.B_after, B);
    EXPECT_EQ(spec.switch_time, 200);
    EXPECT_EQ(spec.length, 500);
    EXPECT_EQ(spec.process_noise, 0.2);
    EXPECT_EQ(spec.measurement_noise, 0.2);
    EXPECT_EQ(spec.input_scale, 1.0);
}

TEST(Generators, SeededRunsAreBitIdentical) {
    auto spec = JumpLinearSpec::standard();
    spec.seed = 42;
    const auto a = generate_jump_linear(spec);
    const auto b = generate_jump_linear(spec);
    EXPECT_EQ(a.recorded.states, b.recorded.states);
    EXPECT_EQ(a.recorded.inputs, b.recorded.inputs);
    spec.seed = 43;
    const auto c = generate_jump_linear(spec);
    EXPECT_NE(a.recorded.states, c.recorded.states);
}

TEST(Generators, ReplayReproducesStates) {
    const auto data = generate_jump_linear(JumpLinearSpec::standard());
    const Index N = data.truth.steps();
    const auto replay = simulate(to_model(data.truth), data.clean.states.col(0),
                                 data.clean.inputs.leftCols(N), data.process_noise);
    EXPECT_EQ(replay.states, data.clean.states);
    EXPECT_EQ(data.recorded.states, data.clean.states + data.measurement_noise);
    EXPECT_EQ(data.recorded.inputs, data.clean.inputs);
}

TEST(Generators, TruthSwitchesAtSwitchTime) {
    const auto spec = JumpLinearSpec::standard();
    const auto data = generate_jump_linear(spec);
    ASSERT_EQ(data.truth.steps(), 499);
    EXPECT_EQ(data.truth.at(199), to_parameters(spec.A_before, spec.B_before));
    EXPECT_EQ(data.truth.at(200), to_parameters(spec.A_after, spec.B_after));
    EXPECT_TRUE(data.clean.states.col(0).isZero());
}

TEST(Generators, NoiselessIdenticalMatricesGiveLti) {
    auto spec = JumpLinearSpec::standard();
    spec.A_after = spec.A_before;
    spec.B_after = spec.B_before;
    spec.process_noise = 0.0;
    spec.measurement_noise = 0.0;
    spec.length = 100;
    spec.switch_time = 50;
    const auto model = fit_lti(build_regressor(generate_jump_linear(spec).recorded));
    EXPECT_LT((model.A - spec.A_before).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((model.B - spec.B_before).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Generators, NoiseStreamMoments) {
    NoiseStream s(7, NoiseStream::Input);
    const MatrixXd x = s.normal(1, 200000);
    const double mean = x.mean();
    const double var = (x.array() - mean).square().mean();
    EXPECT_NEAR(mean, 0.0, 0.01);
    EXPECT_NEAR(var, 1.0, 0.02);
    NoiseStream a(7, NoiseStream::Process);
    NoiseStream b(7, NoiseStream::Measurement);
    EXPECT_NE(a.normal(1, 10), b.normal(1, 10));
    for (int i = 0; i < 1000; ++i) {
        const double u = s.uniform();
        EXPECT_GT(u, 0.0);
        EXPECT_LT(u, 1.0);
    }
}

TEST(Generators, UnstableRolloutRejected) {
    auto spec = JumpLinearSpec::standard();
    spec.A_before = 3.0 * MatrixXd::Identity(2, 2);
    spec.A_after = spec.A_before;
    spec.initial_state = VectorXd::Ones(2);
    EXPECT_THROW(generate_jump_linear(spec), InstabilityError);
}

TEST(Generators, SpecValidation) {
    auto spec = JumpLinearSpec::standard();
    spec.switch_time = 0;
    EXPECT_THROW(generate_jump_linear(spec), ConfigError);
    spec = JumpLinearSpec::standard();
    spec.switch_time = 600;
    EXPECT_THROW(generate_jump_linear(spec), ConfigError);
    spec = JumpLinearSpec::standard();
    spec.B_after = MatrixXd::Zero(3, 1);
    EXPECT_THROW(generate_jump_linear(spec), DimensionError);
    spec = JumpLinearSpec::standard();
    spec.process_noise = -1.0;
    EXPECT_THROW(generate_jump_linear(spec), ConfigError);
}

TEST(Generators, ConstantScalarDriftIsGeometric) {
    DriftSpec spec;
    spec.n = 1;
    spec.m = 0;
    spec.drift = Drift::Constant;
    spec.length = 30;
    const auto data = generate_drifting(spec);
    const double a = data.truth.at(0)(0);
    EXPECT_LT(std::abs(a), 1.0);
    for (Index t = 0; t + 1 < 30; ++t) {
        EXPECT_NEAR(data.recorded.states(0, t + 1), a * data.recorded.states(0, t), 1e-15);
    }
}

TEST(Generators, LinearDriftHasZeroSecondDifference) {
    DriftSpec spec;
    spec.drift = Drift::Linear;
    const auto data = generate_drifting(spec);
    EXPECT_LT(difference_norms(data.truth, 2).maxCoeff(), 1e-12);
    EXPECT_GT(difference_norms(data.truth, 1).minCoeff(), 0.0);
}

TEST(Generators, DriftStaysStable) {
    for (Drift drift : {Drift::Linear, Drift::Sinusoidal}) {
        DriftSpec spec;
        spec.drift = drift;
        spec.n = 3;
        spec.m = 2;
        spec.seed = 9;
        const auto data = generate_drifting(spec);
        for (const auto& A : to_model(data.truth).A) {
            EXPECT_LE(Eigen::EigenSolver<MatrixXd>(A, false).eigenvalues().cwiseAbs().maxCoeff(),
                      0.98 + 1e-12);
        }
    }
}

TEST(Generators, SinusoidalErrorFallsTowardSelectedLambda) {
    DriftSpec spec;
    spec.drift = Drift::Sinusoidal;
    spec.length = 300;
    spec.process_noise = 0.05;
    spec.seed = 4;
    const auto data = generate_drifting(spec);
    const auto prob = build_regressor(data.recorded);
    const auto lc = lcurve_sweep(prob, {1, Norm::Squared, 1.0, std::nullopt},
                                 log_grid(1e-2, 1e3, 11));
    auto error = [&](double lambda) {
        return (fit_slow(prob, lambda).parameters.coefficients - data.truth.coefficients).norm();
    };
    const double e_small = error(1e-2);
    const double e_selected = error(lc.selected_lambda);
    EXPECT_LT(e_selected, e_small);
}
