#include "ltvid/admm.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "ltvid/kernels.hpp"
#include "ltvid/lti.hpp"

#include <optional>

namespace ltvid {

void AdmmConfig::validate(int order) const {
    if (max_iterations < 1) throw ConfigError("max_iterations must be positive");
    if (!(primal_tolerance > 0.0) || !(dual_tolerance > 0.0) || !(absolute_tolerance >= 0.0)) {
        throw ConfigError("ADMM tolerances must be positive");
    }
    if (!(rho > 0.0)) throw ConfigError("ADMM rho must be positive");
    if (step < 0.0) throw ConfigError("ADMM step must be non-negative");
    if (step > rho / difference_norm_bound(order)) {
        throw ConfigError("ADMM step exceeds rho / ||D||^2 = " +
                          std::to_string(rho / difference_norm_bound(order)));
    }
    if (relaxation < 1.0 || relaxation > 1.8) {
        throw ConfigError("ADMM relaxation must lie in [1, 1.8]");
    }
}

VectorXd group_soft_threshold(const VectorXd& v, double tau) {
    const double norm = v.norm();
    if (norm <= tau) return VectorXd::Zero(v.size());
    return (1.0 - tau / norm) * v;
}

VectorXd soft_threshold(const VectorXd& v, double tau) {
    return v.unaryExpr([tau](double x) {
        if (x > tau) return x - tau;
        if (x < -tau) return x + tau;
        return 0.0;
    });
}

double difference_norm_bound(int order) {
    switch (order) {
        case 1: return 4.0;
        case 2: return 16.0;
        default: throw ConfigError("difference order must be 1 or 2");
    }
}

MatrixXd difference_adjoint(const MatrixXd& z, int order, Index steps) {
    const auto c = difference_coefficients(order);
    const Index d = order;
    MatrixXd out = MatrixXd::Zero(z.rows(), steps);
    for (Index j = 0; j < z.cols(); ++j) {
        for (Index i = 0; i <= d; ++i) {
            out.col(j + d - i) += c[i] * z.col(j);
        }
    }
    return out;
}

namespace {

// Solves (2 blkdiag(phi_t phi_t') + (1/rho) D'D (x) I_p + eps I) theta = rhs
// for each of the n output rows of the gain; the rows share the matrix
// because C_t' C_t = I_n (x) phi_t phi_t'.
class CoupledLossSolver {
public:
    CoupledLossSolver(const RegressorProblem& prob, int order)
        : n_(prob.n()), p_(prob.p()), steps_(prob.steps()), order_(order) {
        const auto c = difference_coefficients(order);
        const Index N = steps_;
        const Index p = p_;
        // Banded D'D: (D'D)_{a,b} = sum_j D_{j,a} D_{j,b}, column b - a + order.
        band_ = MatrixXd::Zero(N, 2 * order + 1);
        for (Index j = 0; j + order < N; ++j) {
            for (int r = 0; r <= order; ++r) {
                for (int q = 0; q <= order; ++q) {
                    const Index a = j + order - r;
                    const Index b = j + order - q;
                    band_(a, b - a + order) += c[r] * c[q];
                }
            }
        }
        outer_.resize(N);
        for (Index t = 0; t < N; ++t) {
            const auto phi = prob.regressor(t);
            outer_[t] = 2.0 * phi * phi.transpose();
        }
        // 2 phi_t y_t' per output row, reused every iteration.
        data_rhs_.resize(n_);
        for (Index i = 0; i < n_; ++i) {
            data_rhs_[i].resize(N * p);
            for (Index t = 0; t < N; ++t) {
                data_rhs_[i].segment(t * p, p) = 2.0 * prob.target(t)(i) * prob.regressor(t);
            }
        }
    }

    void factorize(double rho) {
        const Index N = steps_;
        const Index p = p_;
        std::vector<Eigen::Triplet<double>> entries;
        double max_diag = 0.0;
        for (Index t = 0; t < N; ++t) {
            max_diag = std::max(max_diag, outer_[t].diagonal().maxCoeff() + band_(t, order_) / rho);
            for (Index a = 0; a < p; ++a) {
                for (Index b = 0; b <= a; ++b) {
                    entries.emplace_back(t * p + a, t * p + b, outer_[t](a, b));
                }
            }
        }
        for (Index a = 0; a < N; ++a) {
            for (int off = -order_; off <= 0; ++off) {
                const Index b = a + off;
                if (b < 0 || band_(a, off + order_) == 0.0) continue;
                for (Index j = 0; j < p; ++j) {
                    entries.emplace_back(a * p + j, b * p + j, band_(a, off + order_) / rho);
                }
            }
        }
        proximal_ = 1e-9 * std::max(max_diag, 1e-300);
        for (Index i = 0; i < N * p; ++i) entries.emplace_back(i, i, proximal_);
        Eigen::SparseMatrix<double> H(N * p, N * p);
        H.setFromTriplets(entries.begin(), entries.end());
        ldlt_.compute(H);
        if (ldlt_.info() != Eigen::Success) {
            throw Error("ADMM k-update factorization failed");
        }
        rho_ = rho;
    }

    // `coupling` is D'(z - u), K x N; `previous` the last iterate.
    void solve(const MatrixXd& coupling, const MatrixXd& previous, MatrixXd& out) const {
        VectorXd rhs(steps_ * p_);
        for (Index i = 0; i < n_; ++i) {
            for (Index t = 0; t < steps_; ++t) {
                rhs.segment(t * p_, p_) = coupling.col(t).segment(i * p_, p_) / rho_ +
                                          proximal_ * previous.col(t).segment(i * p_, p_);
            }
            rhs += data_rhs_[i];
            const VectorXd theta = ldlt_.solve(rhs);
            for (Index t = 0; t < steps_; ++t) {
                out.col(t).segment(i * p_, p_) = theta.segment(t * p_, p_);
            }
        }
    }

private:
    Index n_;
    Index p_;
    Index steps_;
    int order_;
    MatrixXd band_;
    std::vector<MatrixXd> outer_;
    std::vector<VectorXd> data_rhs_;
    double rho_ = 1.0;
    double proximal_ = 0.0;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower,
                          Eigen::NaturalOrdering<int>>
        ldlt_;
};

}  // namespace

AdmmFit fit_sparse(const RegressorProblem& prob, const RegularizerSpec& reg,
                   const AdmmConfig& cfg) {
    reg.validate(prob.K());
    cfg.validate(reg.order);
    if (reg.norm == Norm::Squared) {
        throw ConfigError("squared-norm formulations are solved by the Kalman smoother");
    }
    const Index N = prob.steps();
    const Index K = prob.K();
    const int d = reg.order;
    if (N <= d) {
        throw DimensionError("need more than " + std::to_string(d) + " transitions");
    }

    double rho = cfg.rho;
    const double mu = cfg.step > 0.0 ? cfg.step : rho / difference_norm_bound(d);
    const double alpha = cfg.relaxation;
    const auto prox_loss = cfg.parallel ? kernels::omp::prox_loss : kernels::serial::prox_loss;

    // Time-invariant start: feasible, and close to the optimum for large lambda.
    MatrixXd k = fit_lti_min_norm(prob).model.parameters().replicate(1, N);
    MatrixXd Dk = apply_difference(k, d);
    MatrixXd z = Dk;
    MatrixXd u = MatrixXd::Zero(K, N - d);
    MatrixXd anchor(K, N);
    std::optional<CoupledLossSolver> coupled;
    if (cfg.k_update == KUpdate::Exact) {
        coupled.emplace(prob, d);
        coupled->factorize(rho);
    }
    const bool adaptive = coupled && cfg.adaptive_rho;

    AdmmReport report;
    const double sqrt_primal = std::sqrt(static_cast<double>(K * (N - d)));
    const double sqrt_dual = std::sqrt(static_cast<double>(K * N));
    for (int it = 1; it <= cfg.max_iterations; ++it) {
        if (coupled) {
            anchor = k;
            coupled->solve(difference_adjoint(z - u, d, N), anchor, k);
        } else {
            anchor = k - (mu / rho) * difference_adjoint(Dk - z + u, d, N);
            prox_loss(prob.regressors(), prob.targets(), anchor, 1.0 / mu, k);
        }
        Dk = apply_difference(k, d);

        const MatrixXd relaxed = alpha * Dk + (1.0 - alpha) * z;
        const MatrixXd z_old = z;
        const MatrixXd w = relaxed + u;
        for (Index j = 0; j < z.cols(); ++j) {
            z.col(j) = reg.norm == Norm::Group ? group_soft_threshold(w.col(j), rho * reg.lambda)
                                               : soft_threshold(w.col(j), rho * reg.lambda);
        }
        u += relaxed - z;

        report.iterations = it;
        report.primal_residual = (Dk - z).norm();
        report.dual_residual = difference_adjoint(z - z_old, d, N).norm() / rho;
        const double eps_primal = sqrt_primal * cfg.absolute_tolerance +
                                  cfg.primal_tolerance * std::max(Dk.norm(), z.norm());
        const double eps_dual = sqrt_dual * cfg.absolute_tolerance +
                                cfg.dual_tolerance * difference_adjoint(u, d, N).norm() / rho;
        if (report.primal_residual <= eps_primal && report.dual_residual <= eps_dual) {
            report.converged = true;
            break;
        }
        // Residual balancing; rho is the inverse penalty and u = rho * y.
        if (adaptive && it % 10 == 0 && it <= cfg.max_iterations / 2) {
            // Normalized residuals, so the balance is scale-free.
            const double r = report.primal_residual / eps_primal;
            const double s = report.dual_residual / eps_dual;
            double scale = 1.0;
            if (r > 10.0 * s || s > 10.0 * r) scale = std::clamp(std::sqrt(s / r), 0.01, 100.0);
            if (scale != 1.0) {
                rho *= scale;
                u *= scale;
                coupled->factorize(rho);
            }
        }
    }

    AdmmFit fit;
    fit.parameters = {std::move(k), prob.n(), prob.m()};
    report.objective = objective_value(prob, fit.parameters, reg);
    report.status = report.converged
                        ? "converged"
                        : "warning: no convergence within " + std::to_string(cfg.max_iterations) +
                              " iterations";
    fit.report = std::move(report);
    return fit;
}

AdmmFit fit_pwconstant(const RegressorProblem& prob, double lambda, const AdmmConfig& cfg) {
    return fit_sparse(prob, {1, Norm::Group, lambda, std::nullopt}, cfg);
}

AdmmFit fit_pwconstant_elementwise(const RegressorProblem& prob, double lambda,
                                   const AdmmConfig& cfg) {
    return fit_sparse(prob, {1, Norm::Elementwise, lambda, std::nullopt}, cfg);
}

AdmmFit fit_pwlinear(const RegressorProblem& prob, double lambda, const AdmmConfig& cfg) {
    return fit_sparse(prob, {2, Norm::Group, lambda, std::nullopt}, cfg);
}

}  // namespace ltvid
