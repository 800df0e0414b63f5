#include "ltvid/core.hpp"

#include <cmath>
#include <string>

namespace ltvid {

namespace {

std::string dims(Index r, Index c) {
    return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace

void Trajectory::validate() const {
    if (states.cols() < 2) {
        throw DimensionError("trajectory needs at least 2 samples, got " +
                             std::to_string(states.cols()));
    }
    if (states.rows() < 1) {
        throw DimensionError("trajectory has an empty state vector");
    }
    if (inputs.cols() != states.cols()) {
        throw DimensionError("state and input sequences differ in length: " +
                             std::to_string(states.cols()) + " vs " +
                             std::to_string(inputs.cols()));
    }
    if (!states.allFinite() || !inputs.allFinite()) {
        throw DataError("trajectory contains non-finite entries");
    }
}

RegressorProblem::RegressorProblem(MatrixXd targets, MatrixXd regressors)
    : targets_(std::move(targets)), regressors_(std::move(regressors)) {
    if (targets_.cols() != regressors_.cols()) {
        throw DimensionError("targets and regressors differ in length");
    }
    if (regressors_.rows() < targets_.rows()) {
        throw DimensionError("regressor dimension " + std::to_string(regressors_.rows()) +
                             " is smaller than the state dimension " +
                             std::to_string(targets_.rows()));
    }
    if (targets_.cols() < 1) {
        throw DimensionError("problem has no transitions");
    }
    if (!targets_.allFinite() || !regressors_.allFinite()) {
        throw DataError("regressor problem contains non-finite entries");
    }
}

VectorXd RegressorProblem::predict(Index t, const Eigen::Ref<const VectorXd>& k) const {
    return to_gain(k, n(), p()) * regressors_.col(t);
}

MatrixXd RegressorProblem::regressor_block(Index t) const {
    MatrixXd C = MatrixXd::Zero(n(), K());
    for (Index i = 0; i < n(); ++i) {
        C.block(i, i * p(), 1, p()) = regressors_.col(t).transpose();
    }
    return C;
}

RegressorProblem RegressorProblem::slice(Index begin, Index end) const {
    if (begin < 0 || end > steps() || begin >= end) {
        throw DimensionError("invalid slice [" + std::to_string(begin) + ", " +
                             std::to_string(end) + ") of " + std::to_string(steps()) +
                             " transitions");
    }
    return RegressorProblem(targets_.middleCols(begin, end - begin),
                            regressors_.middleCols(begin, end - begin));
}

ParameterTrajectory ParameterTrajectory::broadcast(const VectorXd& k, Index n, Index m,
                                                   Index steps) {
    return {k.replicate(1, steps), n, m};
}

MatrixXd to_gain(const Eigen::Ref<const VectorXd>& k, Index n, Index p) {
    if (k.size() != n * p) {
        throw DimensionError("parameter vector of length " + std::to_string(k.size()) +
                             " does not reshape to " + dims(n, p));
    }
    MatrixXd gain(n, p);
    for (Index i = 0; i < n; ++i) {
        gain.row(i) = k.segment(i * p, p).transpose();
    }
    return gain;
}

VectorXd to_parameters(const Eigen::Ref<const MatrixXd>& A, const Eigen::Ref<const MatrixXd>& B) {
    const Index n = A.rows();
    if (A.cols() != n || B.rows() != n) {
        throw DimensionError("inconsistent A " + dims(A.rows(), A.cols()) + " and B " +
                             dims(B.rows(), B.cols()));
    }
    const Index p = n + B.cols();
    VectorXd k(n * p);
    for (Index i = 0; i < n; ++i) {
        k.segment(i * p, n) = A.row(i).transpose();
        k.segment(i * p + n, B.cols()) = B.row(i).transpose();
    }
    return k;
}

LtvModel to_model(const ParameterTrajectory& k) {
    const Index p = k.n + k.m;
    if (k.K() != k.n * p) {
        throw DimensionError("parameter trajectory has K=" + std::to_string(k.K()) +
                             " but n=" + std::to_string(k.n) + ", m=" + std::to_string(k.m));
    }
    LtvModel model;
    model.A.reserve(k.steps());
    model.B.reserve(k.steps());
    for (Index t = 0; t < k.steps(); ++t) {
        MatrixXd gain = to_gain(k.at(t), k.n, p);
        model.A.push_back(gain.leftCols(k.n));
        model.B.push_back(gain.rightCols(k.m));
    }
    return model;
}

ParameterTrajectory to_parameters(const LtvModel& model) {
    if (model.A.size() != model.B.size() || model.A.empty()) {
        throw DimensionError("model needs equally many, non-zero A and B matrices");
    }
    const Index n = model.n();
    const Index m = model.m();
    ParameterTrajectory k{MatrixXd(n * (n + m), model.steps()), n, m};
    for (Index t = 0; t < model.steps(); ++t) {
        k.coefficients.col(t) = to_parameters(model.A[t], model.B[t]);
    }
    return k;
}

void RegularizerSpec::validate(Index K) const {
    if (order != 1 && order != 2) {
        throw ConfigError("difference order must be 1 or 2, got " + std::to_string(order));
    }
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw ConfigError("regularization strength must be positive and finite");
    }
    if (weight) {
        if (norm != Norm::Squared) {
            throw ConfigError("a weight matrix is only valid with the squared norm");
        }
        if (weight->rows() != K || weight->cols() != K) {
            throw DimensionError("weight matrix must be " + dims(K, K));
        }
        if (!weight->isApprox(weight->transpose(), 1e-12)) {
            throw ConfigError("weight matrix is not symmetric");
        }
        Eigen::LLT<MatrixXd> llt(*weight);
        if (llt.info() != Eigen::Success) {
            throw ConfigError("weight matrix is not positive definite");
        }
    }
}

std::vector<double> difference_coefficients(int order) {
    switch (order) {
        case 1: return {1.0, -1.0};
        case 2: return {1.0, -2.0, 1.0};
        default: throw ConfigError("difference order must be 1 or 2");
    }
}

MatrixXd apply_difference(const MatrixXd& k, const std::vector<double>& coefficients) {
    const Index d = static_cast<Index>(coefficients.size()) - 1;
    const Index out = std::max<Index>(k.cols() - d, 0);
    MatrixXd diff = MatrixXd::Zero(k.rows(), out);
    for (Index j = 0; j < out; ++j) {
        for (Index i = 0; i <= d; ++i) {
            diff.col(j) += coefficients[i] * k.col(j + d - i);
        }
    }
    return diff;
}

MatrixXd apply_difference(const MatrixXd& k, int order) {
    return apply_difference(k, difference_coefficients(order));
}

VectorXd difference_norms(const ParameterTrajectory& k, int order) {
    return apply_difference(k.coefficients, order).colwise().norm().transpose();
}

MatrixXd residuals(const RegressorProblem& prob, const ParameterTrajectory& k) {
    if (k.K() != prob.K() || k.steps() != prob.steps()) {
        throw DimensionError("parameter trajectory " + dims(k.K(), k.steps()) +
                             " does not match problem " + dims(prob.K(), prob.steps()));
    }
    MatrixXd r(prob.n(), prob.steps());
    for (Index t = 0; t < prob.steps(); ++t) {
        r.col(t) = prob.target(t) - prob.predict(t, k.at(t));
    }
    return r;
}

double loss_value(const RegressorProblem& prob, const ParameterTrajectory& k) {
    return residuals(prob, k).squaredNorm();
}

double regularizer_value(const ParameterTrajectory& k, const RegularizerSpec& reg) {
    reg.validate(k.K());
    const MatrixXd diff = apply_difference(k.coefficients, reg.order);
    switch (reg.norm) {
        case Norm::Squared:
            if (reg.weight) {
                return (diff.transpose() * (*reg.weight) * diff).trace();
            }
            return reg.lambda * reg.lambda * diff.squaredNorm();
        case Norm::Group:
            return reg.lambda * diff.colwise().norm().sum();
        case Norm::Elementwise:
            return reg.lambda * diff.cwiseAbs().sum();
    }
    return 0.0;
}

double objective_value(const RegressorProblem& prob, const ParameterTrajectory& k,
                       const RegularizerSpec& reg) {
    return loss_value(prob, k) + regularizer_value(k, reg);
}

RegressorProblem build_regressor(const Trajectory& traj) {
    traj.validate();
    const Index T = traj.length();
    MatrixXd regressors(traj.n() + traj.m(), T - 1);
    regressors.topRows(traj.n()) = traj.states.leftCols(T - 1);
    regressors.bottomRows(traj.m()) = traj.inputs.leftCols(T - 1);
    return RegressorProblem(traj.states.rightCols(T - 1), std::move(regressors));
}

Trajectory simulate(const LtvModel& model, const VectorXd& x0, const MatrixXd& inputs,
                    const std::optional<MatrixXd>& process_noise) {
    const Index n = model.n();
    const Index m = model.m();
    const Index N = inputs.cols();
    if (model.A.empty() || model.A.size() != model.B.size()) {
        throw DimensionError("model has no steps or mismatched A/B sequences");
    }
    if (model.steps() != N && model.steps() != 1) {
        throw DimensionError("model has " + std::to_string(model.steps()) +
                             " steps but " + std::to_string(N) + " inputs were given");
    }
    if (x0.size() != n || inputs.rows() != m) {
        throw DimensionError("initial state or input dimension does not match the model");
    }
    if (process_noise && (process_noise->rows() != n || process_noise->cols() != N)) {
        throw DimensionError("process noise must be " + dims(n, N));
    }
    Trajectory traj{MatrixXd(n, N + 1), MatrixXd::Zero(m, N + 1)};
    traj.states.col(0) = x0;
    traj.inputs.leftCols(N) = inputs;
    for (Index t = 0; t < N; ++t) {
        const Index s = model.steps() == 1 ? 0 : t;
        VectorXd next = model.A[s] * traj.states.col(t) + model.B[s] * inputs.col(t);
        if (process_noise) {
            next += process_noise->col(t);
        }
        traj.states.col(t + 1) = next;
    }
    return traj;
}

}  // namespace ltvid
