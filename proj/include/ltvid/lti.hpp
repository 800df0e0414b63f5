#pragma once

#include "ltvid/core.hpp"

namespace ltvid {

struct LtiModel {
    MatrixXd A;  // n x n
    MatrixXd B;  // n x m

    VectorXd parameters() const { return to_parameters(A, B); }
    static LtiModel from_parameters(const VectorXd& k, Index n, Index m);
};

// Singular values of the stacked regressor below this fraction of the
// largest one are treated as zero.
inline constexpr double kRankTolerance = 1e-10;

// Unique least-squares model x_{t+1} = A x_t + B u_t over all transitions.
// Solved by column-pivoted QR of the N x (n+m) regressor; all n output rows
// share that factorization. Throws IllPosedError carrying a basis of the
// null space (K-dimensional directions) when the regressor is rank deficient.
LtiModel fit_lti(const RegressorProblem& prob, double rank_tolerance = kRankTolerance);

struct MinNormFit {
    LtiModel model;
    Index rank = 0;  // rank of the N x p regressor
    bool deficient = false;
};

// Minimum-norm least-squares model; never throws on rank deficiency.
MinNormFit fit_lti_min_norm(const RegressorProblem& prob,
                            double rank_tolerance = kRankTolerance);

}  // namespace ltvid
