#pragma once

// Data-parallel inner loops. Every kernel has a serial reference in
// `kernels::serial` and an OpenMP version in `kernels::omp` with the same
// signature. The per-index arithmetic is identical, so the two agree
// bit-for-bit; tests and the benchmark rely on that.

#include <Eigen/Dense>

namespace ltvid::kernels {

using Eigen::Index;
using Eigen::MatrixXd;

// Batched proximal step of the least-squares loss:
//   k_t = argmin ||y_t - C_t k||^2 + (inv_step / 2) ||k - v_t||^2
// with C_t = I_n (x) phi_t^T. Each of the n output blocks solves
// (2 phi phi^T + inv_step I) theta = 2 phi y_i + inv_step v_i in closed form
// (Sherman-Morrison). `params` must be preallocated K x N.
using ProxLossFn = void (*)(const Eigen::Ref<const MatrixXd>& regressors,
                            const Eigen::Ref<const MatrixXd>& targets,
                            const Eigen::Ref<const MatrixXd>& anchor, double inv_step,
                            Eigen::Ref<MatrixXd> params);

// Least-squares residual of every interval of transitions [i, j), i < j,
// from accumulated Gram matrices. Entry (i, j) of the (N+1) x (N+1) result;
// intervals shorter than `min_length` and the lower triangle are +inf.
// Rank-deficient intervals use the pseudo-inverse (minimum-norm fit).
using SegmentCostFn = MatrixXd (*)(const Eigen::Ref<const MatrixXd>& regressors,
                                   const Eigen::Ref<const MatrixXd>& targets, Index min_length);

namespace serial {
void prox_loss(const Eigen::Ref<const MatrixXd>& regressors,
               const Eigen::Ref<const MatrixXd>& targets, const Eigen::Ref<const MatrixXd>& anchor,
               double inv_step, Eigen::Ref<MatrixXd> params);
MatrixXd segment_costs(const Eigen::Ref<const MatrixXd>& regressors,
                       const Eigen::Ref<const MatrixXd>& targets, Index min_length);
}  // namespace serial

namespace omp {
void prox_loss(const Eigen::Ref<const MatrixXd>& regressors,
               const Eigen::Ref<const MatrixXd>& targets, const Eigen::Ref<const MatrixXd>& anchor,
               double inv_step, Eigen::Ref<MatrixXd> params);
MatrixXd segment_costs(const Eigen::Ref<const MatrixXd>& regressors,
                       const Eigen::Ref<const MatrixXd>& targets, Index min_length);
}  // namespace omp

namespace detail {

// Shared per-index bodies; keep them inline so both variants compile the
// same arithmetic.
inline void prox_loss_step(const Eigen::Ref<const MatrixXd>& regressors,
                           const Eigen::Ref<const MatrixXd>& targets,
                           const Eigen::Ref<const MatrixXd>& anchor, double inv_step,
                           Eigen::Ref<MatrixXd> params, Index t) {
    const Index n = targets.rows();
    const Index p = regressors.rows();
    const auto phi = regressors.col(t);
    const double denom = inv_step + 2.0 * phi.squaredNorm();
    for (Index i = 0; i < n; ++i) {
        const Eigen::VectorXd rhs =
            (2.0 * targets(i, t)) * phi + inv_step * anchor.col(t).segment(i * p, p);
        const double proj = phi.dot(rhs);
        params.col(t).segment(i * p, p) = (rhs - (2.0 * proj / denom) * phi) / inv_step;
    }
}

void segment_cost_row(const Eigen::Ref<const MatrixXd>& regressors,
                      const Eigen::Ref<const MatrixXd>& targets, Index min_length, Index begin,
                      MatrixXd& costs);

}  // namespace detail

}  // namespace ltvid::kernels
