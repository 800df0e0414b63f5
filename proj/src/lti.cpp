#include "ltvid/lti.hpp"

#include <string>

namespace ltvid {

namespace {

// Null space of the p x N regressor, lifted to K = n*p through I_n (x) v.
MatrixXd lifted_null_space(const Eigen::JacobiSVD<MatrixXd>& svd, Index rank, Index n) {
    const MatrixXd& V = svd.matrixV();
    const Index p = V.rows();
    const Index nullity = p - rank;
    MatrixXd dirs = MatrixXd::Zero(n * p, n * nullity);
    for (Index j = 0; j < nullity; ++j) {
        for (Index i = 0; i < n; ++i) {
            dirs.block(i * p, i * nullity + j, p, 1) = V.col(rank + j);
        }
    }
    return dirs;
}

Index numerical_rank(const VectorXd& sv, double tol) {
    if (sv.size() == 0 || sv(0) == 0.0) return 0;
    Index r = 0;
    while (r < sv.size() && sv(r) > tol * sv(0)) ++r;
    return r;
}

}  // namespace

LtiModel LtiModel::from_parameters(const VectorXd& k, Index n, Index m) {
    MatrixXd gain = to_gain(k, n, n + m);
    return {gain.leftCols(n), gain.rightCols(m)};
}

LtiModel fit_lti(const RegressorProblem& prob, double rank_tolerance) {
    const MatrixXd design = prob.regressors().transpose();  // N x p
    Eigen::JacobiSVD<MatrixXd> svd(design, Eigen::ComputeFullV);
    const Index rank = numerical_rank(svd.singularValues(), rank_tolerance);
    if (rank < prob.p()) {
        throw IllPosedError("regressor has rank " + std::to_string(rank) + " < " +
                                std::to_string(prob.p()) +
                                "; the time-invariant least-squares problem has no unique "
                                "solution",
                            lifted_null_space(svd, rank, prob.n()));
    }
    Eigen::ColPivHouseholderQR<MatrixXd> qr(design);
    // Column i of the solution holds row i of [A B].
    const MatrixXd gain_t = qr.solve(prob.targets().transpose());
    const MatrixXd gain = gain_t.transpose();
    return {gain.leftCols(prob.n()), gain.rightCols(prob.m())};
}

MinNormFit fit_lti_min_norm(const RegressorProblem& prob, double rank_tolerance) {
    const MatrixXd design = prob.regressors().transpose();
    Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod;
    cod.setThreshold(rank_tolerance);
    cod.compute(design);
    const MatrixXd gain = cod.solve(prob.targets().transpose()).transpose();
    MinNormFit fit;
    fit.model = {gain.leftCols(prob.n()), gain.rightCols(prob.m())};
    Eigen::JacobiSVD<MatrixXd> svd(design);
    fit.rank = numerical_rank(svd.singularValues(), rank_tolerance);
    fit.deficient = fit.rank < prob.p();
    return fit;
}

}  // namespace ltvid
