#include <gtest/gtest.h>

#include <random>

#include "ltvid/admm.hpp"
#include "ltvid/generators.hpp"
#include "ltvid/lti.hpp"
#include "oracles.hpp"

using namespace ltvid;

namespace {

AdmmConfig tight() {
    AdmmConfig cfg;
    cfg.primal_tolerance = 1e-10;
    cfg.dual_tolerance = 1e-10;
    cfg.absolute_tolerance = 1e-12;
    cfg.max_iterations = 50000;
    return cfg;
}

}  // namespace

TEST(Admm, SoftThresholds) {
    VectorXd v(3);
    v << 3, -0.5, -2;
    VectorXd expected(3);
    expected << 2, 0, -1;
    EXPECT_EQ(soft_threshold(v, 1.0), expected);
    VectorXd g(2);
    g << 3, 4;
    EXPECT_EQ(group_soft_threshold(g, 5.0), VectorXd::Zero(2));
    EXPECT_LT((group_soft_threshold(g, 2.5) - 0.5 * g).norm(), 1e-15);
}

TEST(Admm, DifferenceAdjoint) {
    std::mt19937_64 rng(1);
    for (int d : {1, 2}) {
        const MatrixXd k = oracle::gaussian(rng, 3, 12);
        const MatrixXd z = oracle::gaussian(rng, 3, 12 - d);
        const double lhs = (apply_difference(k, d).array() * z.array()).sum();
        const double rhs = (k.array() * difference_adjoint(z, d, 12).array()).sum();
        EXPECT_NEAR(lhs, rhs, 1e-12);
    }
}

TEST(Admm, NormBoundHolds) {
    for (int d : {1, 2}) {
        const MatrixXd D = oracle::difference_matrix(oracle::difference(d), 1, 60);
        const double sigma = Eigen::JacobiSVD<MatrixXd>(D).singularValues()(0);
        EXPECT_LE(sigma * sigma, difference_norm_bound(d));
    }
}

TEST(Admm, MatchesPrimalDualOracle) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const auto prob = oracle::random_problem(seed + 500, 2, 1, 40, 0.2);
        for (int d : {1, 2}) {
            for (bool group : {true, false}) {
                const double lambda = 0.5;
                const RegularizerSpec reg{d, group ? Norm::Group : Norm::Elementwise, lambda,
                                          std::nullopt};
                const auto fit = fit_sparse(prob, reg, tight());
                EXPECT_TRUE(fit.report.converged);
                const MatrixXd ref = oracle::primal_dual(prob, d, group, lambda);
                const double f_ref = oracle::sparse_objective(prob, ref, d, group, lambda);
                const double f = oracle::sparse_objective(prob, fit.parameters.coefficients, d,
                                                          group, lambda);
                EXPECT_LT(std::abs(f - f_ref) / f_ref, 1e-6) << "seed " << seed << " d " << d;
                EXPECT_NEAR(fit.report.objective, f, 1e-9 * f);
            }
        }
    }
}

TEST(Admm, NoiselessConstantDynamicsFlat) {
    const auto prob = oracle::random_problem(601, 2, 1, 60, 0.0);
    const auto fit = fit_pwconstant(prob, 1.0, tight());
    EXPECT_LE(difference_norms(fit.parameters, 1).maxCoeff(), 1e-8);
    const VectorXd lti = fit_lti(prob).parameters();
    EXPECT_LT((fit.parameters.at(0) - lti).norm(), 1e-8);
}

TEST(Admm, NoiselessLinearDriftStraight) {
    DriftSpec spec;
    spec.length = 80;
    spec.drift = Drift::Linear;
    spec.seed = 5;
    const auto data = generate_drifting(spec);
    const auto fit = fit_pwlinear(build_regressor(data.recorded), 0.5, tight());
    EXPECT_LE(difference_norms(fit.parameters, 2).maxCoeff(), 1e-8);
}

TEST(Admm, JumpLinearLargestDifferenceAtSwitch) {
    const auto data = generate_jump_linear(JumpLinearSpec::standard());
    const auto prob = build_regressor(data.recorded);
    const auto fit = fit_pwconstant(prob, 30.0);
    EXPECT_TRUE(fit.report.converged);
    Index j = 0;
    difference_norms(fit.parameters, 1).maxCoeff(&j);
    EXPECT_LE(std::abs(j + 1 - 200), 5);
}

TEST(Admm, SlopeChangeGivesOneDominantBend) {
    // k_t flat, then rising linearly from t = 60 on.
    const Index T = 121, N = T - 1, bend = 60;
    MatrixXd A0(2, 2), B0(2, 1), dA(2, 2);
    A0 << 0.5, 0.1, 0.0, 0.4;
    B0 << 1.0, 0.5;
    dA << 0.004, 0.0, 0.0, 0.004;
    LtvModel model;
    for (Index t = 0; t < N; ++t) {
        model.A.push_back(A0 + static_cast<double>(std::max<Index>(0, t - bend)) * dA);
        model.B.push_back(B0);
    }
    std::mt19937_64 rng(11);
    const MatrixXd u = oracle::gaussian(rng, 1, N);
    auto traj = simulate(model, VectorXd::Zero(2), u);
    traj.states += oracle::gaussian(rng, 2, T, 1e-3);
    const auto fit = fit_pwlinear(build_regressor(traj), 0.05);
    const VectorXd a = difference_norms(fit.parameters, 2);
    Index j = 0;
    const double top = a.maxCoeff(&j);
    EXPECT_LE(std::abs(j + 1 - bend), 2);
    for (Index i = 0; i < a.size(); ++i) {
        if (std::abs(i - j) > 2) {
            EXPECT_LT(a(i), 0.1 * top) << "at " << i;
        }
    }
}

TEST(Admm, ObjectiveBelowInitialization) {
    const auto prob = oracle::random_problem(602, 2, 1, 50, 0.3);
    const RegularizerSpec reg{1, Norm::Group, 0.3, std::nullopt};
    const auto fit = fit_sparse(prob, reg);
    const auto init = ParameterTrajectory::broadcast(fit_lti(prob).parameters(), 2, 1, prob.steps());
    EXPECT_LE(fit.report.objective, objective_value(prob, init, reg));
}

TEST(Admm, NonConvergenceIsReported) {
    const auto prob = oracle::random_problem(603, 2, 1, 50, 0.3);
    AdmmConfig cfg;
    cfg.max_iterations = 2;
    const auto fit = fit_pwconstant(prob, 0.3, cfg);
    EXPECT_FALSE(fit.report.converged);
    EXPECT_EQ(fit.report.iterations, 2);
    EXPECT_EQ(fit.report.status.rfind("warning", 0), 0u);
}

TEST(Admm, LinearizedVariantReachesSameObjective) {
    const auto prob = oracle::random_problem(604, 2, 1, 20, 0.2);
    const RegularizerSpec reg{1, Norm::Group, 0.5, std::nullopt};
    AdmmConfig lin = tight();
    lin.k_update = KUpdate::Linearized;
    lin.max_iterations = 200000;
    lin.primal_tolerance = lin.dual_tolerance = 1e-9;
    const auto a = fit_sparse(prob, reg, lin);
    const auto b = fit_sparse(prob, reg, tight());
    EXPECT_LT(std::abs(a.report.objective - b.report.objective) / b.report.objective, 1e-6);
}

TEST(Admm, LinearizedParallelMatchesSerial) {
    const auto prob = oracle::random_problem(605, 3, 2, 1500, 0.2);
    AdmmConfig cfg;
    cfg.k_update = KUpdate::Linearized;
    cfg.max_iterations = 30;
    cfg.parallel = false;
    const auto serial = fit_pwconstant(prob, 0.3, cfg);
    cfg.parallel = true;
    const auto parallel = fit_pwconstant(prob, 0.3, cfg);
    EXPECT_EQ(serial.parameters.coefficients, parallel.parameters.coefficients);
}

TEST(Admm, HugeLambdaGivesLti) {
    const auto prob = oracle::random_problem(606, 2, 1, 60, 0.3);
    const VectorXd lti = fit_lti(prob).parameters();
    const auto fit = fit_pwconstant(prob, 1e6);
    for (Index t = 0; t < prob.steps(); ++t) {
        EXPECT_LT((fit.parameters.at(t) - lti).cwiseAbs().maxCoeff(), 1e-3);
    }
}

// Second differences leave affine-in-time trajectories free, so the limit is
// the best affine fit, which the squared penalty shares.
TEST(Admm, HugeLambdaSecondOrderGivesAffineFit) {
    const auto prob = oracle::random_problem(606, 2, 1, 60, 0.3);
    const MatrixXd affine = oracle::closed_form(prob, oracle::difference(2), 1e4);
    const auto fit = fit_pwlinear(prob, 1e6);
    EXPECT_LT((fit.parameters.coefficients - affine).cwiseAbs().maxCoeff(), 1e-3);
    EXPECT_LT(difference_norms(fit.parameters, 2).maxCoeff(), 1e-6);
}

TEST(Admm, ConfigValidation) {
    const auto prob = oracle::random_problem(607, 2, 1, 20);
    AdmmConfig cfg;
    cfg.rho = 0.0;
    EXPECT_THROW(fit_pwconstant(prob, 1.0, cfg), ConfigError);
    cfg = {};
    cfg.step = 1.0;  // > rho / 4
    EXPECT_THROW(fit_pwconstant(prob, 1.0, cfg), ConfigError);
    cfg = {};
    cfg.relaxation = 2.0;
    EXPECT_THROW(fit_pwconstant(prob, 1.0, cfg), ConfigError);
    cfg = {};
    cfg.max_iterations = 0;
    EXPECT_THROW(fit_pwconstant(prob, 1.0, cfg), ConfigError);
    EXPECT_THROW(fit_sparse(prob, {1, Norm::Squared, 1.0, std::nullopt}), ConfigError);
}

TEST(Admm, OverRelaxationConverges) {
    const auto prob = oracle::random_problem(608, 2, 1, 40, 0.2);
    AdmmConfig cfg = tight();
    cfg.relaxation = 1.6;
    const auto a = fit_pwconstant(prob, 0.5, cfg);
    const auto b = fit_pwconstant(prob, 0.5, tight());
    EXPECT_TRUE(a.report.converged);
    EXPECT_LT(std::abs(a.report.objective - b.report.objective) / b.report.objective, 1e-7);
}
