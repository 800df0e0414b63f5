#include <limits>

#include <omp.h>

#include "ltvid/kernels.hpp"

namespace ltvid::kernels::omp {

void prox_loss(const Eigen::Ref<const MatrixXd>& regressors,
               const Eigen::Ref<const MatrixXd>& targets, const Eigen::Ref<const MatrixXd>& anchor,
               double inv_step, Eigen::Ref<MatrixXd> params) {
    const Index N = regressors.cols();
#pragma omp parallel for schedule(static) if (N > 512)
    for (Index t = 0; t < N; ++t) {
        detail::prox_loss_step(regressors, targets, anchor, inv_step, params, t);
    }
}

MatrixXd segment_costs(const Eigen::Ref<const MatrixXd>& regressors,
                       const Eigen::Ref<const MatrixXd>& targets, Index min_length) {
    const Index N = regressors.cols();
    MatrixXd costs =
        MatrixXd::Constant(N + 1, N + 1, std::numeric_limits<double>::infinity());
    // Rows get shorter with `begin`; dynamic scheduling balances them.
#pragma omp parallel for schedule(dynamic, 8)
    for (Index begin = 0; begin < N; ++begin) {
        detail::segment_cost_row(regressors, targets, min_length, begin, costs);
    }
    return costs;
}

}  // namespace ltvid::kernels::omp
