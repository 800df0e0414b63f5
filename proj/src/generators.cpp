#include "ltvid/generators.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace ltvid {

namespace {

constexpr double kOverflowGuard = 1e100;

std::seed_seq make_seed(std::uint64_t seed, std::uint32_t stream) {
    return std::seed_seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                         static_cast<std::uint32_t>(seed >> 32), stream};
}

MatrixXd scaled_to_norm(MatrixXd A, double norm) {
    const double current = Eigen::JacobiSVD<MatrixXd>(A).singularValues()(0);
    if (current > 0.0) A *= norm / current;
    return A;
}

double spectral_radius(const MatrixXd& A) {
    return Eigen::EigenSolver<MatrixXd>(A, false).eigenvalues().cwiseAbs().maxCoeff();
}

GeneratedData rollout(const LtvModel& model, const VectorXd& x0, const MatrixXd& inputs,
                      double process_noise, double measurement_noise, std::uint64_t seed) {
    const Index n = model.n();
    const Index N = inputs.cols();
    NoiseStream process(seed, NoiseStream::Process);
    NoiseStream measurement(seed, NoiseStream::Measurement);

    GeneratedData data;
    data.process_noise = process.normal(n, N, process_noise);
    data.measurement_noise = measurement.normal(n, N + 1, measurement_noise);
    data.clean = simulate(model, x0, inputs, data.process_noise);
    if (!data.clean.states.allFinite() ||
        data.clean.states.cwiseAbs().maxCoeff() > kOverflowGuard) {
        throw InstabilityError(
            "simulated states exceed the overflow guard; use a shorter horizon or a stabler "
            "model");
    }
    data.recorded = data.clean;
    data.recorded.states += data.measurement_noise;
    data.truth = to_parameters(model);
    return data;
}

}  // namespace

NoiseStream::NoiseStream(std::uint64_t seed, std::uint32_t stream) {
    auto seq = make_seed(seed, stream);
    engine_.seed(seq);
}

double NoiseStream::uniform() {
    // 53 random bits mapped to (0, 1); zero is excluded for the logarithm.
    for (;;) {
        const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
        if (u > 0.0) return u;
    }
}

double NoiseStream::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double radius = std::sqrt(-2.0 * std::log(uniform()));
    const double angle = 2.0 * std::numbers::pi * uniform();
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

MatrixXd NoiseStream::normal(Index rows, Index cols, double scale) {
    MatrixXd out(rows, cols);
    for (Index c = 0; c < cols; ++c) {
        for (Index r = 0; r < rows; ++r) out(r, c) = scale * normal();
    }
    return out;
}

JumpLinearSpec JumpLinearSpec::standard() {
    JumpLinearSpec spec;
    spec.A_before = (MatrixXd(2, 2) << 0.95, 0.1, 0.0, 0.95).finished();
    spec.B_before = (MatrixXd(2, 1) << 0.2, 1.0).finished();
    spec.A_after = (MatrixXd(2, 2) << 0.5, 0.05, 0.0, 0.5).finished();
    spec.B_after = spec.B_before;
    return spec;
}

void JumpLinearSpec::validate() const {
    const Index n = A_before.rows();
    if (n < 1 || A_before.cols() != n || A_after.rows() != n || A_after.cols() != n ||
        B_before.rows() != n || B_after.rows() != n || B_before.cols() != B_after.cols()) {
        throw DimensionError("jump-linear matrices have inconsistent dimensions");
    }
    if (length < 3) throw DimensionError("jump-linear length must be at least 3");
    if (switch_time <= 0 || switch_time >= length - 1) {
        throw ConfigError("switch time " + std::to_string(switch_time) +
                          " must lie strictly inside (0, " + std::to_string(length - 1) + ")");
    }
    if (initial_state.size() != 0 && initial_state.size() != n) {
        throw DimensionError("initial state has the wrong dimension");
    }
    if (input_scale < 0.0 || process_noise < 0.0 || measurement_noise < 0.0) {
        throw ConfigError("noise scales must be non-negative");
    }
}

GeneratedData generate_jump_linear(const JumpLinearSpec& spec) {
    spec.validate();
    const Index n = spec.A_before.rows();
    const Index m = spec.B_before.cols();
    const Index N = spec.length - 1;

    LtvModel model;
    for (Index t = 0; t < N; ++t) {
        const bool after = t >= spec.switch_time;
        model.A.push_back(after ? spec.A_after : spec.A_before);
        model.B.push_back(after ? spec.B_after : spec.B_before);
    }
    NoiseStream input(spec.seed, NoiseStream::Input);
    const MatrixXd inputs = input.normal(m, N, spec.input_scale);
    const VectorXd x0 = spec.initial_state.size() ? spec.initial_state : VectorXd::Zero(n);
    return rollout(model, x0, inputs, spec.process_noise, spec.measurement_noise, spec.seed);
}

GeneratedData generate_drifting(const DriftSpec& spec) {
    if (spec.length < 3 || spec.n < 1 || spec.m < 0) {
        throw DimensionError("drifting generator needs length >= 3, n >= 1, m >= 0");
    }
    const Index n = spec.n;
    const Index m = spec.m;
    const Index N = spec.length - 1;
    NoiseStream draw(spec.seed, NoiseStream::Model);

    // Two extreme models; the trajectory interpolates between them.
    MatrixXd A0;
    MatrixXd A1;
    if (spec.drift == Drift::Sinusoidal) {
        A0 = scaled_to_norm(draw.normal(n, n), 0.6);
        A1 = scaled_to_norm(draw.normal(n, n), 0.25);
    } else {
        A0 = scaled_to_norm(draw.normal(n, n), 0.85);
        A1 = scaled_to_norm(draw.normal(n, n), 0.85);
    }
    const MatrixXd B0 = draw.normal(n, m);
    const MatrixXd B1 = draw.normal(n, m, 0.5);

    LtvModel model;
    for (Index t = 0; t < N; ++t) {
        MatrixXd A;
        MatrixXd B;
        switch (spec.drift) {
            case Drift::Constant:
                A = A0;
                B = B0;
                break;
            case Drift::Linear: {
                const double s = N > 1 ? static_cast<double>(t) / static_cast<double>(N - 1) : 0.0;
                A = (1.0 - s) * A0 + s * A1;
                B = (1.0 - s) * B0 + s * B1;
                break;
            }
            case Drift::Sinusoidal: {
                const double s = std::sin(2.0 * std::numbers::pi * static_cast<double>(t) /
                                          static_cast<double>(N));
                A = A0 + s * A1;
                B = B0 + s * B1;
                break;
            }
        }
        const double radius = spectral_radius(A);
        if (radius > 0.98) A *= 0.98 / radius;
        model.A.push_back(std::move(A));
        model.B.push_back(std::move(B));
    }
    NoiseStream input(spec.seed, NoiseStream::Input);
    const MatrixXd inputs = input.normal(m, N, spec.input_scale);
    VectorXd x0 = VectorXd::Zero(n);
    if (m == 0) x0.setOnes();  // autonomous systems need a non-zero start
    return rollout(model, x0, inputs, spec.process_noise, spec.measurement_noise, spec.seed);
}

}  // namespace ltvid
