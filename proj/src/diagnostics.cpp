#include "ltvid/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <string>

namespace ltvid {

namespace {

Index numerical_rank(const VectorXd& sv, double tol) {
    if (sv.size() == 0 || sv(0) == 0.0) return 0;
    Index r = 0;
    while (r < sv.size() && sv(r) > tol * sv(0)) ++r;
    return r;
}

}  // namespace

IdentifiabilityReport well_posedness(const RegressorProblem& prob, const RegularizerSpec& reg,
                                     double rank_tolerance) {
    IdentifiabilityReport report;
    report.order = reg.order;
    const Index N = prob.steps();
    const Index p = prob.p();

    const MatrixXd data = prob.regressors().transpose();  // N x p
    Eigen::JacobiSVD<MatrixXd> svd(data, Eigen::ComputeFullV);
    const VectorXd& sv = svd.singularValues();
    report.data_rank = numerical_rank(sv, rank_tolerance);
    report.lti_rank = prob.n() * report.data_rank;
    report.min_singular_value = sv.size() == p ? sv(p - 1) : 0.0;
    if (report.data_rank < p) {
        report.null_vector = svd.matrixV().col(p - 1);
    }
    bool deficient = report.data_rank < p;

    if (reg.order >= 2) {
        // psi_t = [phi_t; s_t phi_t] with s_t centred and scaled to [-1, 1].
        MatrixXd psi(N, 2 * p);
        const double mid = 0.5 * static_cast<double>(N - 1);
        const double half = std::max(mid, 1.0);
        for (Index t = 0; t < N; ++t) {
            const double s = (static_cast<double>(t) - mid) / half;
            psi.row(t).head(p) = prob.regressor(t).transpose();
            psi.row(t).tail(p) = s * prob.regressor(t).transpose();
        }
        Eigen::JacobiSVD<MatrixXd> affine(psi, Eigen::ComputeFullV);
        const Index rank = numerical_rank(affine.singularValues(), rank_tolerance);
        if (rank < 2 * p) {
            report.affine_direction = affine.matrixV().col(2 * p - 1);
            deficient = true;
        }
    }
    report.deficient = deficient;

    if (!deficient && N < 2 * p) {
        report.warnings.push_back("only " + std::to_string(N) + " transitions for " +
                                  std::to_string(p) +
                                  " regressors per output: the time-invariant fit is barely "
                                  "determined");
    }
    if (report.null_vector) {
        report.warnings.push_back("regressor data span a " + std::to_string(report.data_rank) +
                                  "-dimensional subspace of R^" + std::to_string(p));
    }
    return report;
}

std::vector<double> log_grid(double lo, double hi, Index count) {
    if (!(lo > 0.0) || !(hi > lo) || count < 2) {
        throw ConfigError("log grid needs 0 < lo < hi and at least 2 points");
    }
    std::vector<double> grid(count);
    const double step = std::log(hi / lo) / static_cast<double>(count - 1);
    for (Index i = 0; i < count; ++i) grid[i] = lo * std::exp(step * static_cast<double>(i));
    grid.back() = hi;
    return grid;
}

std::vector<double> default_lambda_grid(const RegressorProblem& prob, Index count) {
    const MatrixXd& y = prob.targets();
    const MatrixXd centred = y.colwise() - y.rowwise().mean();
    const double variance = centred.squaredNorm() / static_cast<double>(std::max<Index>(y.size(), 1));
    const double scale = variance > 0.0 && std::isfinite(variance) ? variance : 1.0;
    return log_grid(1e-3 * scale, 1e3 * scale, count);
}

double regularizer_seminorm(const ParameterTrajectory& k, const RegularizerSpec& reg) {
    const MatrixXd diff = apply_difference(k.coefficients, reg.order);
    switch (reg.norm) {
        case Norm::Squared: return diff.squaredNorm();
        case Norm::Group: return diff.colwise().norm().sum();
        case Norm::Elementwise: return diff.cwiseAbs().sum();
    }
    return 0.0;
}

LCurveResult lcurve_sweep(const RegressorProblem& prob, const RegularizerSpec& formulation,
                          const std::vector<double>& grid, const SweepOptions& options) {
    if (grid.size() < 5) throw ConfigError("L-curve grid needs at least 5 points");
    std::vector<double> lambdas(grid);
    std::sort(lambdas.begin(), lambdas.end());
    if (!(lambdas.front() > 0.0)) throw ConfigError("L-curve grid must be positive");
    const double ratio = lambdas[1] / lambdas[0];
    for (std::size_t i = 1; i < lambdas.size(); ++i) {
        if (std::abs(std::log(lambdas[i] / lambdas[i - 1]) - std::log(ratio)) >
            1e-6 * std::abs(std::log(ratio)) + 1e-12) {
            throw ConfigError("L-curve grid must be logarithmically spaced");
        }
    }
    if (formulation.weight) throw ConfigError("L-curve sweeps take a scalar lambda");

    const Index count = static_cast<Index>(lambdas.size());
    LCurveResult result;
    result.points.resize(count);
    std::vector<std::exception_ptr> errors(count);
    AdmmConfig admm = options.admm;
    admm.parallel = false;  // parallelism is across grid points here

#pragma omp parallel for schedule(dynamic) if (options.parallel)
    for (Index i = 0; i < count; ++i) {
        try {
            RegularizerSpec reg = formulation;
            reg.lambda = lambdas[i];
            const FitResult fit = fit_formulation(prob, reg, admm);
            result.points[i] = {lambdas[i], loss_value(prob, fit.parameters),
                                regularizer_seminorm(fit.parameters, reg), 0.0};
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    double loss_max = 0.0;
    double loss_min = result.points.front().loss;
    double reg_max = 0.0;
    for (const auto& pt : result.points) {
        loss_max = std::max(loss_max, pt.loss);
        loss_min = std::min(loss_min, pt.loss);
        reg_max = std::max(reg_max, pt.regularizer);
    }
    const double energy = prob.targets().squaredNorm();
    if (loss_max <= 1e-12 * std::max(energy, 1e-300) ||
        loss_max - loss_min <= 1e-9 * loss_max || reg_max <= 0.0) {
        result.degenerate = true;
        result.selected_index = 0;
        result.selected_lambda = lambdas.front();
        result.warnings.push_back("degenerate L-curve (flat loss); selecting the smallest lambda");
        return result;
    }

    // Regularizer values at solver-tolerance level are time-invariant fits
    // (lambda past the point where every difference is shrunk to zero); their
    // logarithm is noise, so stencils touching them are not corner candidates.
    // The squared seminorm gets the squared threshold.
    const double reg_zero = (formulation.norm == Norm::Squared ? 1e-12 : 1e-6) * reg_max;
    const double loss_floor = 1e-14 * loss_max;
    std::vector<double> s(count), x(count), y(count);
    std::vector<bool> flat(count);
    for (Index i = 0; i < count; ++i) {
        s[i] = std::log(lambdas[i]);
        x[i] = std::log(std::max(result.points[i].loss, loss_floor));
        y[i] = std::log(std::max(result.points[i].regularizer, reg_zero));
        flat[i] = result.points[i].regularizer <= reg_zero;
    }
    Index best = -1;
    for (Index i = 1; i + 1 < count; ++i) {
        if (flat[i - 1] || flat[i] || flat[i + 1]) continue;
        const double h1 = s[i] - s[i - 1];
        const double h2 = s[i + 1] - s[i];
        const double dx = (x[i + 1] - x[i - 1]) / (h1 + h2);
        const double dy = (y[i + 1] - y[i - 1]) / (h1 + h2);
        const double ddx = 2.0 * ((x[i + 1] - x[i]) / h2 - (x[i] - x[i - 1]) / h1) / (h1 + h2);
        const double ddy = 2.0 * ((y[i + 1] - y[i]) / h2 - (y[i] - y[i - 1]) / h1) / (h1 + h2);
        const double speed = dx * dx + dy * dy;
        const double kappa = speed > 0.0 ? (dx * ddy - dy * ddx) / std::pow(speed, 1.5) : 0.0;
        result.points[i].curvature = kappa;
        if (best < 0 || kappa > result.points[best].curvature) best = i;
    }
    if (best < 0) {
        result.degenerate = true;
        result.selected_index = 0;
        result.selected_lambda = lambdas.front();
        result.warnings.push_back(
            "L-curve has fewer than three points with a non-zero regularizer; selecting the "
            "smallest lambda");
        return result;
    }
    if (result.points[best].curvature <= 0.0) {
        result.warnings.push_back("L-curve has no convex corner; selecting maximum curvature");
    }
    result.selected_index = best;
    result.selected_lambda = lambdas[best];
    return result;
}

FitReport fit_report(const RegressorProblem& prob, const ParameterTrajectory& k,
                     const RegularizerSpec& reg) {
    FitReport report;
    report.residuals = residuals(prob, k);
    report.residual_norms = report.residuals.colwise().norm().transpose();
    report.difference_norms = difference_norms(k, reg.order);
    report.loss = report.residuals.squaredNorm();
    report.regularizer = regularizer_value(k, reg);
    report.objective = report.loss + report.regularizer;
    return report;
}

}  // namespace ltvid
