#pragma once

// ADMM for
//
//   min_k  f(k) + lambda * sum_j g((D k)_j),  f(k) = sum_t ||y_t - C_t k_t||^2
//
// with g the Euclidean norm (group fused lasso) or the 1-norm, and D the
// first or second difference operator. Splitting z = D k, `rho` the proximal
// parameter (augmented-Lagrangian penalty 1/rho), scaled dual u:
//
//   k <- k-update (below)
//   z <- prox_{rho lambda g}(alpha D k + (1 - alpha) z + u)
//   u <- u + alpha D k + (1 - alpha) z_old - z
//
// Two k-updates are available. `Linearized` replaces the coupling term by
// its linearization with step mu <= rho / ||D||^2,
//
//   k <- prox_{mu f}(k - (mu / rho) D'(D k - z + u)),
//
// which splits into N independent K x K solves per iteration but propagates
// information along time like a diffusion, needing O(N^2) iterations.
// `Exact` minimizes f(k) + ||D k - z + u||^2 / (2 rho) + (eps/2)||k - k_prev||^2
// with one banded Cholesky factorization per solve; the tiny proximal term
// keeps the system definite on ill-posed data.

#include <string>

#include "ltvid/core.hpp"

namespace ltvid {

enum class KUpdate { Exact, Linearized };

struct AdmmConfig {
    int max_iterations = 20000;
    double primal_tolerance = 1e-6;  // relative
    double dual_tolerance = 1e-6;    // relative
    double absolute_tolerance = 1e-9;
    double rho = 1.0;
    // Linearization step; 0 selects rho / ||D||^2 from the analytic bound
    // ||D_1||^2 <= 4, ||D_2||^2 <= 16.
    double step = 0.0;
    double relaxation = 1.0;  // alpha in [1, 1.8]
    KUpdate k_update = KUpdate::Exact;
    // Residual balancing of rho (Exact only): every 10 iterations, when one
    // tolerance-normalized residual exceeds the other tenfold, scale rho by
    // sqrt(dual / primal) clipped to [0.01, 100]; frozen after half the
    // iteration budget.
    bool adaptive_rho = true;
    bool parallel = true;

    void validate(int order) const;
};

struct AdmmReport {
    int iterations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double objective = 0.0;
    bool converged = false;
    std::string status;  // "converged" or a warning
};

struct AdmmFit {
    ParameterTrajectory parameters;
    AdmmReport report;
};

// General entry point; reg.norm must be Group or Elementwise.
AdmmFit fit_sparse(const RegressorProblem& prob, const RegularizerSpec& reg,
                   const AdmmConfig& cfg = {});

AdmmFit fit_pwconstant(const RegressorProblem& prob, double lambda, const AdmmConfig& cfg = {});
AdmmFit fit_pwconstant_elementwise(const RegressorProblem& prob, double lambda,
                                   const AdmmConfig& cfg = {});
AdmmFit fit_pwlinear(const RegressorProblem& prob, double lambda, const AdmmConfig& cfg = {});

// prox of tau ||.||_2: zero inside the ball, radial shrink outside.
VectorXd group_soft_threshold(const VectorXd& v, double tau);
// prox of tau ||.||_1.
VectorXd soft_threshold(const VectorXd& v, double tau);

// Analytic bound on ||D_d||^2.
double difference_norm_bound(int order);

// D' z for the order-d difference operator, K x N from K x (N - d).
MatrixXd difference_adjoint(const MatrixXd& z, int order, Index steps);

}  // namespace ltvid
