#pragma once

// Exact solvers for the squared-norm formulations
//
//   min_k  sum_t ||y_t - C_t k_t||^2 + lambda^2 sum_t ||P(z) k_t||^2
//
// by Rauch-Tung-Striebel smoothing of a Gaussian parameter random walk:
// emission covariance I, process covariance lambda^-2 I (or Lambda^-1) on the
// driven block. P(z) = z - 1 is the random walk, P(z) = (z - 1)^2 the
// integrated random walk [k; k'] -> [k + k'; k' + w], and any P with P(1) = 0
// a companion-form realization.
//
// The initial state gets a diffuse N(m, kappa I) prior. A first pass uses
// m = 0; a second pass re-centres m on the smoothed initial state, which
// removes the kappa bias to second order.

#include <optional>
#include <vector>

#include "ltvid/core.hpp"

namespace ltvid {

struct ParameterStateModel {
    Index parameter_dim = 0;  // K; the emission reads the first K state entries
    MatrixXd transition;      // S x S
    MatrixXd process_cov;     // S x S, may be singular
    MatrixXd emission_cov;    // n x n

    Index state_dim() const { return transition.rows(); }

    // k_{t+1} = k_t + w_t, cov(w) = lambda^-2 I or weight^-1.
    static ParameterStateModel random_walk(Index K, Index n, double lambda,
                                           const std::optional<MatrixXd>& weight = std::nullopt);
    // [k; k']_{t+1} = [I I; 0 I] [k; k']_t + [0; w_t].
    static ParameterStateModel integrated_random_walk(
        Index K, Index n, double lambda, const std::optional<MatrixXd>& weight = std::nullopt);
    // Companion realization of sum_i c_i k_{t+d-i} = w_t; c highest power
    // first with c_0 = 1. State is [k_t; k_{t+1}; ...; k_{t+d-1}].
    static ParameterStateModel difference_polynomial(
        Index K, Index n, const std::vector<double>& monic_coefficients, double lambda,
        const std::optional<MatrixXd>& weight = std::nullopt);
};

struct PriorStep {
    VectorXd mean;  // K
    MatrixXd cov;   // K x K, SPD
};

// Per-transition Gaussian prior over k_t; empty entries carry no prior.
struct GaussianPrior {
    std::vector<std::optional<PriorStep>> steps;

    void validate(Index K, Index N) const;
};

enum class PriorFusion {
    // Repeated correction step inside the forward filter. The smoother then
    // returns the exact minimizer of the prior-augmented objective.
    Filtered,
    // The same correction applied to the smoothed mean and covariance after
    // the backward pass.
    Smoothed,
};

struct SmootherOptions {
    // Diffuse initial variance; default 1e7 * median_t ||y_t||^2.
    std::optional<double> initial_variance;
    // The first pass starts from N(0, kappa I); each later pass re-centres on
    // the previous smoothed initial state, which removes the finite-kappa
    // bias geometrically. Passes stop once it moves less than
    // `diffuse_tolerance` (relative).
    int diffuse_passes = 30;
    double diffuse_tolerance = 1e-14;
    PriorFusion fusion = PriorFusion::Filtered;
};

struct SmootherResult {
    ParameterTrajectory means;              // k_{t|N}
    std::vector<MatrixXd> covariances;      // K x K block of P_{t|N}
    MatrixXd filtered_means;                // K x N, k_{t|t}
    std::vector<MatrixXd> filtered_covariances;
    MatrixXd state_means;                   // S x N smoothed augmented state
    double initial_variance = 0.0;
};

SmootherResult smooth(const ParameterStateModel& model, const RegressorProblem& prob,
                      const SmootherOptions& options = {});

SmootherResult smooth_with_prior(const ParameterStateModel& model, const RegressorProblem& prob,
                                 const GaussianPrior& prior, const SmootherOptions& options = {});

struct KalmanFit {
    ParameterTrajectory parameters;
    SmootherResult smoother;
};

// lambda^2 sum ||k_{t+1} - k_t||^2, or sum (dk)' weight (dk) when weight is set.
KalmanFit fit_slow(const RegressorProblem& prob, double lambda,
                   const std::optional<MatrixXd>& weight = std::nullopt,
                   const std::optional<GaussianPrior>& prior = std::nullopt,
                   const SmootherOptions& options = {});

// lambda^2 sum ||k_{t+2} - 2 k_{t+1} + k_t||^2 on the augmented state.
KalmanFit fit_smooth(const RegressorProblem& prob, double lambda,
                     const std::optional<MatrixXd>& weight = std::nullopt,
                     const std::optional<GaussianPrior>& prior = std::nullopt,
                     const SmootherOptions& options = {});

// lambda^2 sum ||P(z) k_t||^2 for a difference polynomial P given highest
// power first. P is rescaled to be monic (folding the scale into lambda);
// InvalidRegularizerError when deg P < 1 or P(1) != 0.
ParameterTrajectory fit_polynomial_regularizer(const RegressorProblem& prob,
                                               const std::vector<double>& coefficients,
                                               double lambda, const SmootherOptions& options = {});

// Default diffuse variance for a problem.
double default_initial_variance(const RegressorProblem& prob);

// One Joseph-form measurement update of (mean, cov) with observation
// y = H s + e, e ~ N(0, R). Exposed for the prior-fusion tests.
void correct(VectorXd& mean, MatrixXd& cov, const MatrixXd& H, const MatrixXd& R,
             const VectorXd& y);

}  // namespace ltvid
