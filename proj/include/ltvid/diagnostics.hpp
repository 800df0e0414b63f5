#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ltvid/fit.hpp"
#include "ltvid/lti.hpp"

namespace ltvid {

struct IdentifiabilityReport {
    int order = 1;
    Index data_rank = 0;     // rank of the N x (n+m) matrix of stacked [x_t; u_t]
    Index lti_rank = 0;      // rank of the stacked regressor Phi, n * data_rank
    double min_singular_value = 0.0;
    // Common null vector v of all [x_t; u_t][x_t; u_t]^T, if any.
    std::optional<VectorXd> null_vector;
    // Second-order formulations: a direction k_t = a + s_t b (s_t centred,
    // scaled time) with C_t k_t = 0 for all t, if any. Stored as [a; b] in
    // regressor coordinates (length 2(n+m)).
    std::optional<VectorXd> affine_direction;
    bool deficient = false;
    std::vector<std::string> warnings;
};

// Order 1: unique minimizer iff the time-invariant least-squares problem is
// unique, i.e. the stacked regressor has full column rank.
// Order 2: unique iff no non-zero affine-in-time parameter sequence is
// invisible in every C_t. A common null vector v of the C_t^{xu} is one
// such sequence (b = 0), reported separately.
IdentifiabilityReport well_posedness(const RegressorProblem& prob, const RegularizerSpec& reg,
                                     double rank_tolerance = kRankTolerance);

struct LCurvePoint {
    double lambda = 0.0;
    double loss = 0.0;         // sum_t ||y_t - C_t k_t||^2
    double regularizer = 0.0;  // unscaled: sum ||Dk|| (group), ||Dk||_1, or ||Dk||^2
    double curvature = 0.0;    // signed, log-log; 0 at the grid ends
};

struct LCurveResult {
    std::vector<LCurvePoint> points;  // ascending lambda
    double selected_lambda = 0.0;
    Index selected_index = 0;
    bool degenerate = false;
    std::vector<std::string> warnings;
};

// `count` logarithmically spaced values from lo to hi inclusive.
std::vector<double> log_grid(double lo, double hi, Index count);

// 1e-3 .. 1e3 times the variance of the targets.
std::vector<double> default_lambda_grid(const RegressorProblem& prob, Index count = 10);

// Unscaled regularizer value used on the L-curve.
double regularizer_seminorm(const ParameterTrajectory& k, const RegularizerSpec& reg);

struct SweepOptions {
    AdmmConfig admm;
    bool parallel = true;
};

// One fit per grid value; the corner is the interior point of maximum
// signed curvature of (log loss, log regularizer) by three-point finite
// differences in log lambda. Points whose regularizer is below 1e-6 of the
// largest (1e-12 for the squared seminorm) are time-invariant fits and not
// candidates.
LCurveResult lcurve_sweep(const RegressorProblem& prob, const RegularizerSpec& formulation,
                          const std::vector<double>& grid, const SweepOptions& options = {});

struct FitReport {
    MatrixXd residuals;         // n x N
    VectorXd residual_norms;    // ||y_t - C_t k_t||
    VectorXd difference_norms;  // a_j for the formulation's order
    double loss = 0.0;
    double regularizer = 0.0;   // including lambda
    double objective = 0.0;
};

FitReport fit_report(const RegressorProblem& prob, const ParameterTrajectory& k,
                     const RegularizerSpec& reg);

}  // namespace ltvid
