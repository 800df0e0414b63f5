#include <algorithm>
#include <limits>

#include "ltvid/kernels.hpp"

namespace ltvid::kernels {

namespace detail {

void segment_cost_row(const Eigen::Ref<const MatrixXd>& regressors,
                      const Eigen::Ref<const MatrixXd>& targets, Index min_length, Index begin,
                      MatrixXd& costs) {
    const Index N = regressors.cols();
    const Index p = regressors.rows();
    const Index n = targets.rows();
    MatrixXd gram = MatrixXd::Zero(p, p);
    MatrixXd cross = MatrixXd::Zero(p, n);
    double energy = 0.0;
    for (Index end = begin + 1; end <= N; ++end) {
        const auto phi = regressors.col(end - 1);
        const auto y = targets.col(end - 1);
        gram.selfadjointView<Eigen::Lower>().rankUpdate(phi);
        cross.noalias() += phi * y.transpose();
        energy += y.squaredNorm();
        if (end - begin < min_length) continue;

        const MatrixXd full = gram.selfadjointView<Eigen::Lower>();
        Eigen::LDLT<MatrixXd> ldlt(full);
        MatrixXd theta;
        const double dmax = ldlt.vectorD().cwiseAbs().maxCoeff();
        const double dmin = ldlt.vectorD().minCoeff();
        if (ldlt.info() == Eigen::Success && dmin > 1e-12 * std::max(dmax, 1e-300)) {
            theta = ldlt.solve(cross);
        } else {
            Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod;
            cod.setThreshold(1e-10);
            cod.compute(full);
            theta = cod.solve(cross);
        }
        // ||Y - Phi^T theta||^2 = y'y - 2 tr(theta' cross) + tr(theta' G theta)
        const double fit = 2.0 * (theta.transpose() * cross).trace() -
                           (theta.transpose() * full * theta).trace();
        costs(begin, end) = std::max(energy - fit, 0.0);
    }
}

}  // namespace detail

namespace serial {

void prox_loss(const Eigen::Ref<const MatrixXd>& regressors,
               const Eigen::Ref<const MatrixXd>& targets, const Eigen::Ref<const MatrixXd>& anchor,
               double inv_step, Eigen::Ref<MatrixXd> params) {
    for (Index t = 0; t < regressors.cols(); ++t) {
        detail::prox_loss_step(regressors, targets, anchor, inv_step, params, t);
    }
}

MatrixXd segment_costs(const Eigen::Ref<const MatrixXd>& regressors,
                       const Eigen::Ref<const MatrixXd>& targets, Index min_length) {
    const Index N = regressors.cols();
    MatrixXd costs =
        MatrixXd::Constant(N + 1, N + 1, std::numeric_limits<double>::infinity());
    for (Index begin = 0; begin < N; ++begin) {
        detail::segment_cost_row(regressors, targets, min_length, begin, costs);
    }
    return costs;
}

}  // namespace serial

}  // namespace ltvid::kernels
