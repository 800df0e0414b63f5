#pragma once

// Data model shared by every solver.
//
// Index conventions (0-based throughout):
//   * a trajectory holds T samples x_0 .. x_{T-1} and u_0 .. u_{T-1};
//   * transition t maps (x_t, u_t) to x_{t+1}, t = 0 .. T-2, so there are
//     N = T-1 transitions and one parameter vector k_t per transition;
//   * k_t = vec([A_t^T B_t^T]), i.e. the rows of [A_t B_t] laid end to end,
//     K = n*(n+m) entries.

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "ltvid/error.hpp"

namespace ltvid {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Trajectory {
    MatrixXd states;  // n x T, one sample per column
    MatrixXd inputs;  // m x T; m may be 0

    Index n() const { return states.rows(); }
    Index m() const { return inputs.rows(); }
    Index length() const { return states.cols(); }

    // Throws DimensionError / DataError when the invariants do not hold.
    void validate() const;
};

// Targets y_t = x_{t+1} and regressors phi_t = [x_t; u_t]. The per-step
// regressor matrix C_t = I_n (x) phi_t^T is never formed; only phi_t is stored.
class RegressorProblem {
public:
    RegressorProblem() = default;

    // General linear-in-parameters problem: y_t = Theta_t phi_t with
    // Theta_t an n x p gain. `regressors.rows()` = n + m defines m.
    RegressorProblem(MatrixXd targets, MatrixXd regressors);

    Index n() const { return targets_.rows(); }
    Index m() const { return regressors_.rows() - targets_.rows(); }
    Index p() const { return regressors_.rows(); }
    Index K() const { return n() * p(); }
    Index steps() const { return targets_.cols(); }

    const MatrixXd& targets() const { return targets_; }
    const MatrixXd& regressors() const { return regressors_; }
    auto target(Index t) const { return targets_.col(t); }
    auto regressor(Index t) const { return regressors_.col(t); }

    // C_t k, evaluated through the Kronecker structure.
    VectorXd predict(Index t, const Eigen::Ref<const VectorXd>& k) const;

    // Dense n x K copy of C_t, for tests and diagnostics.
    MatrixXd regressor_block(Index t) const;

    // Sub-problem restricted to transitions [begin, end).
    RegressorProblem slice(Index begin, Index end) const;

private:
    MatrixXd targets_;     // n x N
    MatrixXd regressors_;  // p x N
};

// One parameter vector per transition, stored column-wise (K x N).
struct ParameterTrajectory {
    MatrixXd coefficients;
    Index n = 0;
    Index m = 0;

    Index K() const { return coefficients.rows(); }
    Index steps() const { return coefficients.cols(); }
    auto at(Index t) const { return coefficients.col(t); }

    // Same parameter vector repeated for `steps` transitions.
    static ParameterTrajectory broadcast(const VectorXd& k, Index n, Index m, Index steps);
};

struct LtvModel {
    std::vector<MatrixXd> A;  // n x n per step
    std::vector<MatrixXd> B;  // n x m per step

    Index n() const { return A.empty() ? 0 : A.front().rows(); }
    Index m() const { return B.empty() ? 0 : B.front().cols(); }
    Index steps() const { return static_cast<Index>(A.size()); }
};

// Gain [A B] (n x p) <-> parameter vector k.
MatrixXd to_gain(const Eigen::Ref<const VectorXd>& k, Index n, Index p);
VectorXd to_parameters(const Eigen::Ref<const MatrixXd>& A, const Eigen::Ref<const MatrixXd>& B);

LtvModel to_model(const ParameterTrajectory& k);
ParameterTrajectory to_parameters(const LtvModel& model);

enum class Norm {
    Squared,      // sum_t ||D k||^2 (or the Lambda-weighted quadratic form)
    Group,        // sum_t ||D k||_2
    Elementwise,  // sum_t ||D k||_1
};

struct RegularizerSpec {
    int order = 1;  // difference order, 1 or 2
    Norm norm = Norm::Squared;
    double lambda = 1.0;
    // Replaces lambda^2 I in the squared norm. Symmetric positive definite.
    std::optional<MatrixXd> weight;

    void validate(Index K) const;
};

// Finite-difference coefficients of order 1 (z - 1) and 2 (z^2 - 2z + 1),
// highest power first.
std::vector<double> difference_coefficients(int order);

// Column j holds sum_i c_i k_{j+d-i} for a degree-d polynomial c given with
// the highest power first. Output is K x (N - d).
MatrixXd apply_difference(const MatrixXd& k, const std::vector<double>& coefficients);
MatrixXd apply_difference(const MatrixXd& k, int order);

// a_j = ||(D_d k)_j||_2. Entry j corresponds to knot index j + 1.
VectorXd difference_norms(const ParameterTrajectory& k, int order);

// sum_t ||y_t - C_t k_t||^2
double loss_value(const RegressorProblem& prob, const ParameterTrajectory& k);
// Per-step residual vectors y_t - C_t k_t (n x N).
MatrixXd residuals(const RegressorProblem& prob, const ParameterTrajectory& k);
// Regularization term including lambda (lambda^2 or Lambda for Squared).
double regularizer_value(const ParameterTrajectory& k, const RegularizerSpec& reg);
double objective_value(const RegressorProblem& prob, const ParameterTrajectory& k,
                       const RegularizerSpec& reg);

RegressorProblem build_regressor(const Trajectory& traj);

// Rollout x_{t+1} = A_t x_t + B_t u_t (+ w_t when process noise is given).
// Produces one more state than there are inputs.
Trajectory simulate(const LtvModel& model, const VectorXd& x0, const MatrixXd& inputs,
                    const std::optional<MatrixXd>& process_noise = std::nullopt);

}  // namespace ltvid
