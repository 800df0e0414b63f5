#include "ltvid/segmentation.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "ltvid/kernels.hpp"

namespace ltvid {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Index resolve_min_length(const RegressorProblem& prob, const DpOptions& options) {
    if (options.min_length < 0) throw ConfigError("minimum segment length must be >= 0");
    if (options.min_length > 0) return options.min_length;
    return (prob.K() + prob.n() - 1) / prob.n();
}

Segment fit_segment(const RegressorProblem& prob, Index begin, Index end) {
    const RegressorProblem part = prob.slice(begin, end);
    const MinNormFit fit = fit_lti_min_norm(part);
    Segment seg;
    seg.begin = begin;
    seg.end = end;
    seg.model = fit.model;
    seg.rank = fit.rank;
    seg.flagged = fit.deficient;
    seg.loss = loss_value(part, ParameterTrajectory::broadcast(fit.model.parameters(), prob.n(),
                                                               prob.m(), end - begin));
    return seg;
}

SegmentedModel assemble(const RegressorProblem& prob, std::vector<Index> breakpoints) {
    SegmentedModel out;
    out.breakpoints = std::move(breakpoints);
    Index begin = 0;
    auto add = [&](Index end) {
        Segment seg = fit_segment(prob, begin, end);
        if (seg.flagged) {
            out.warnings.push_back("segment [" + std::to_string(begin) + ", " +
                                   std::to_string(end) + ") is under-identified (rank " +
                                   std::to_string(seg.rank) + " < " + std::to_string(prob.p()) +
                                   "); minimum-norm fit returned");
        }
        out.segments.push_back(std::move(seg));
        begin = end;
    };
    for (Index b : out.breakpoints) add(b);
    add(prob.steps());
    return out;
}

struct DpTables {
    std::vector<std::vector<double>> cost;   // [segments][end]
    std::vector<std::vector<Index>> parent;  // [segments][end]
};

DpTables run_dp(const RegressorProblem& prob, Index max_breakpoints, const DpOptions& options) {
    if (max_breakpoints < 0) throw ConfigError("number of breakpoints must be >= 0");
    const Index N = prob.steps();
    const Index L = resolve_min_length(prob, options);
    if (N < (max_breakpoints + 1) * L) {
        throw ConfigError(std::to_string(max_breakpoints) + " breakpoints need at least " +
                          std::to_string((max_breakpoints + 1) * L) + " transitions (" +
                          std::to_string(L) + " per segment), got " + std::to_string(N));
    }
    const auto table_fn = options.parallel ? kernels::omp::segment_costs
                                           : kernels::serial::segment_costs;
    const MatrixXd interval = table_fn(prob.regressors(), prob.targets(), L);

    const Index S = max_breakpoints + 1;
    DpTables dp;
    dp.cost.assign(S + 1, std::vector<double>(N + 1, kInf));
    dp.parent.assign(S + 1, std::vector<Index>(N + 1, -1));
    for (Index j = 1; j <= N; ++j) {
        dp.cost[1][j] = interval(0, j);
        dp.parent[1][j] = 0;
    }
    for (Index s = 2; s <= S; ++s) {
        for (Index j = s * L; j <= N; ++j) {
            for (Index i = (s - 1) * L; i + L <= j; ++i) {
                const double c = dp.cost[s - 1][i] + interval(i, j);
                if (c < dp.cost[s][j]) {
                    dp.cost[s][j] = c;
                    dp.parent[s][j] = i;
                }
            }
        }
    }
    return dp;
}

}  // namespace

double SegmentedModel::total_loss() const {
    double total = 0.0;
    for (const auto& s : segments) total += s.loss;
    return total;
}

ParameterTrajectory SegmentedModel::parameters() const {
    if (segments.empty()) return {};
    const Index n = segments.front().model.A.rows();
    const Index m = segments.front().model.B.cols();
    ParameterTrajectory k{MatrixXd(n * (n + m), segments.back().end), n, m};
    for (const auto& s : segments) {
        k.coefficients.middleCols(s.begin, s.end - s.begin) =
            s.model.parameters().replicate(1, s.end - s.begin);
    }
    return k;
}

std::vector<double> dp_costs_by_segments(const RegressorProblem& prob, Index max_breakpoints,
                                         const DpOptions& options) {
    const DpTables dp = run_dp(prob, max_breakpoints, options);
    std::vector<double> out;
    for (Index s = 1; s <= max_breakpoints + 1; ++s) out.push_back(dp.cost[s][prob.steps()]);
    return out;
}

SegmentedModel fit_dp_segments(const RegressorProblem& prob, Index max_breakpoints,
                               const DpOptions& options) {
    const DpTables dp = run_dp(prob, max_breakpoints, options);
    const Index N = prob.steps();
    // Fewest segments among the minimizers.
    Index best = 1;
    for (Index s = 2; s <= max_breakpoints + 1; ++s) {
        if (dp.cost[s][N] < dp.cost[best][N]) best = s;
    }
    std::vector<Index> breakpoints;
    Index end = N;
    for (Index s = best; s > 1; --s) {
        end = dp.parent[s][end];
        breakpoints.push_back(end);
    }
    std::reverse(breakpoints.begin(), breakpoints.end());
    return assemble(prob, std::move(breakpoints));
}

std::vector<Index> detect_knots(const ParameterTrajectory& k, int order, double tau) {
    if (tau < 0.0) throw ConfigError("knot threshold must be non-negative");
    const VectorXd a = difference_norms(k, order);
    std::vector<Index> knots;
    for (Index j = 0; j < a.size(); ++j) {
        if (a(j) > tau) knots.push_back(j + 1);
    }
    return knots;
}

std::vector<Index> detect_knots_relative(const ParameterTrajectory& k, int order,
                                         double fraction) {
    if (fraction < 0.0) throw ConfigError("knot threshold fraction must be non-negative");
    const VectorXd a = difference_norms(k, order);
    if (a.size() == 0) return {};
    return detect_knots(k, order, fraction * a.maxCoeff());
}

SegmentedModel refine(const RegressorProblem& prob, const std::vector<Index>& knots) {
    Index previous = 0;
    for (Index b : knots) {
        if (b <= previous || b >= prob.steps()) {
            throw ConfigError("knots must be strictly increasing within (0, " +
                              std::to_string(prob.steps()) + ")");
        }
        previous = b;
    }
    return assemble(prob, knots);
}

}  // namespace ltvid
