#pragma once

#include <string>
#include <vector>

#include "ltvid/core.hpp"
#include "ltvid/lti.hpp"

namespace ltvid {

// Transitions [begin, end) share one time-invariant model.
struct Segment {
    Index begin = 0;
    Index end = 0;
    LtiModel model;
    double loss = 0.0;
    Index rank = 0;        // rank of the segment regressor
    bool flagged = false;  // under-identified: minimum-norm fit returned
};

// Breakpoint b starts a new segment at transition b, 0 < b < N.
struct SegmentedModel {
    std::vector<Index> breakpoints;
    std::vector<Segment> segments;
    std::vector<std::string> warnings;

    double total_loss() const;
    ParameterTrajectory parameters() const;
};

struct DpOptions {
    // Minimum number of transitions per segment; 0 means ceil(K / n) = n + m,
    // the shortest segment whose least-squares problem can be determined.
    Index min_length = 0;
    bool parallel = true;
};

// Globally optimal segmentation into at most M + 1 time-invariant pieces by
// dynamic programming over the table of interval least-squares costs.
// ConfigError when N < (M + 1) * min_length.
SegmentedModel fit_dp_segments(const RegressorProblem& prob, Index max_breakpoints,
                               const DpOptions& options = {});

// Minimum total cost with exactly s segments, s = 1 .. M + 1 (inf if
// infeasible). Exposed for monotonicity checks.
std::vector<double> dp_costs_by_segments(const RegressorProblem& prob, Index max_breakpoints,
                                         const DpOptions& options = {});

// Indices j + 1 where the difference norm a_j exceeds tau. For order 1 the
// index is the first transition of the new level, for order 2 the bend.
std::vector<Index> detect_knots(const ParameterTrajectory& k, int order, double tau);

// detect_knots with tau = fraction * max_j a_j.
std::vector<Index> detect_knots_relative(const ParameterTrajectory& k, int order,
                                         double fraction = 0.1);

// Unpenalized least squares on each piece between knots; under-identified
// pieces get the minimum-norm solution, a flag and a warning.
SegmentedModel refine(const RegressorProblem& prob, const std::vector<Index>& knots);

}  // namespace ltvid
