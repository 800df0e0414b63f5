#pragma once

#include <cstdint>
#include <random>

#include "ltvid/core.hpp"

namespace ltvid {

// Gaussian noise source: std::mt19937_64 seeded with
// std::seed_seq{seed_lo, seed_hi, stream}, normals by Box-Muller on 53-bit
// uniforms. Both pieces have fully specified algorithms, so a (seed, stream)
// pair yields the same numbers on every conforming platform.
class NoiseStream {
public:
    enum Stream : std::uint32_t { Input = 0, Process = 1, Measurement = 2, Model = 3 };

    NoiseStream(std::uint64_t seed, std::uint32_t stream);

    double uniform();  // (0, 1)
    double normal();
    MatrixXd normal(Index rows, Index cols, double scale = 1.0);

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

struct GeneratedData {
    Trajectory recorded;        // what a fit sees: clean states + measurement noise
    Trajectory clean;           // noise-free record of the simulated states
    ParameterTrajectory truth;  // k_t per transition
    MatrixXd process_noise;     // n x (T-1), added in the rollout
    MatrixXd measurement_noise; // n x T, added to the record
};

struct JumpLinearSpec {
    MatrixXd A_before;
    MatrixXd B_before;
    MatrixXd A_after;
    MatrixXd B_after;
    Index switch_time = 200;  // first transition using the "after" matrices
    Index length = 500;       // T samples
    double input_scale = 1.0;
    double process_noise = 0.2;
    double measurement_noise = 0.2;
    std::uint64_t seed = 1;
    VectorXd initial_state;  // empty: zero vector

    // Two-state, one-input switching system: A = [0.95 0.1; 0 0.95] ->
    // [0.5 0.05; 0 0.5], B = [0.2; 1.0] throughout, switch at 200 of 500.
    static JumpLinearSpec standard();
    void validate() const;
};

GeneratedData generate_jump_linear(const JumpLinearSpec& spec);

enum class Drift { Constant, Linear, Sinusoidal };

struct DriftSpec {
    Index length = 200;
    Index n = 2;
    Index m = 1;
    Drift drift = Drift::Linear;
    double input_scale = 1.0;
    double process_noise = 0.0;
    double measurement_noise = 0.0;
    std::uint64_t seed = 1;
};

// Random model whose k_t follows the drift law. Endpoint/extreme matrices
// have spectral norm <= 0.85, so every convex combination is stable;
// a per-step spectral-radius clamp at 0.98 guards the rest.
GeneratedData generate_drifting(const DriftSpec& spec);

}  // namespace ltvid
