#include "ltvid/kalman.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace ltvid {

namespace {

MatrixXd process_block(Index K, double lambda, const std::optional<MatrixXd>& weight) {
    if (weight) {
        if (weight->rows() != K || weight->cols() != K) {
            throw DimensionError("weight matrix must be K x K");
        }
        Eigen::LLT<MatrixXd> llt(*weight);
        if (llt.info() != Eigen::Success) {
            throw ConfigError("weight matrix is not positive definite");
        }
        MatrixXd inv = llt.solve(MatrixXd::Identity(K, K));
        return 0.5 * (inv + inv.transpose());
    }
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw ConfigError("regularization strength must be positive and finite");
    }
    return MatrixXd::Identity(K, K) / (lambda * lambda);
}

void symmetrize(MatrixXd& P) { P = (0.5 * (P + P.transpose())).eval(); }

// Dense emission [C_t 0 ... 0] for a state of dimension S.
MatrixXd emission(const RegressorProblem& prob, Index t, Index S) {
    MatrixXd C = MatrixXd::Zero(prob.n(), S);
    C.leftCols(prob.K()) = prob.regressor_block(t);
    return C;
}

struct PassResult {
    MatrixXd smoothed;  // S x N
    std::vector<MatrixXd> smoothed_cov;
    MatrixXd filtered;  // S x N
    std::vector<MatrixXd> filtered_cov;
    std::vector<MatrixXd> gains;  // RTS gains J_t, t = 0 .. N-2
};

PassResult run_pass(const ParameterStateModel& model, const RegressorProblem& prob,
                    const GaussianPrior* prior, PriorFusion fusion, const VectorXd& initial_mean,
                    const MatrixXd& initial_cov) {
    const Index N = prob.steps();
    const Index S = model.state_dim();
    const Index K = model.parameter_dim;
    const MatrixXd& F = model.transition;
    MatrixXd prior_map = MatrixXd::Zero(K, S);
    prior_map.leftCols(K).setIdentity();

    PassResult out;
    out.filtered.resize(S, N);
    out.filtered_cov.resize(N);
    MatrixXd predicted(S, N);
    std::vector<MatrixXd> predicted_cov(N);

    VectorXd mean = initial_mean;
    MatrixXd cov = initial_cov;
    for (Index t = 0; t < N; ++t) {
        if (t > 0) {
            mean = F * mean;
            cov = F * cov * F.transpose() + model.process_cov;
            symmetrize(cov);
        }
        predicted.col(t) = mean;
        predicted_cov[t] = cov;

        correct(mean, cov, emission(prob, t, S), model.emission_cov, prob.target(t));
        if (prior && fusion == PriorFusion::Filtered && prior->steps[t]) {
            correct(mean, cov, prior_map, prior->steps[t]->cov, prior->steps[t]->mean);
        }
        out.filtered.col(t) = mean;
        out.filtered_cov[t] = cov;
    }

    out.smoothed = out.filtered;
    out.smoothed_cov = out.filtered_cov;
    out.gains.resize(N > 0 ? N - 1 : 0);
    for (Index t = N - 2; t >= 0; --t) {
        const MatrixXd& pred_cov = predicted_cov[t + 1];
        Eigen::LDLT<MatrixXd> ldlt(pred_cov);
        // J = P_{t|t} F' P_{t+1|t}^{-1}
        MatrixXd gain = ldlt.solve(F * out.filtered_cov[t]).transpose();
        out.smoothed.col(t) =
            out.filtered.col(t) + gain * (out.smoothed.col(t + 1) - predicted.col(t + 1));
        MatrixXd P = out.filtered_cov[t] + gain * (out.smoothed_cov[t + 1] - pred_cov) *
                                               gain.transpose();
        symmetrize(P);
        out.smoothed_cov[t] = std::move(P);
        out.gains[t] = std::move(gain);
    }
    return out;
}

// Takes the N(mean0, cov0) prior on the initial state back out of the
// smoothed moments (Woodbury), leaving the diffuse-prior posterior. Uses
// Cov(x_0, x_t | data) = J_0 ... J_{t-1} P_{t|N}.
void remove_initial_prior(PassResult& pass, const VectorXd& mean0, const MatrixXd& cov0) {
    MatrixXd gap = cov0 - pass.smoothed_cov[0];
    symmetrize(gap);
    const Eigen::LDLT<MatrixXd> ldlt(gap);
    const VectorXd shift = ldlt.solve(pass.smoothed.col(0) - mean0);
    MatrixXd chain = MatrixXd::Identity(gap.rows(), gap.cols());
    for (std::size_t t = 0; t < pass.smoothed_cov.size(); ++t) {
        if (t > 0) chain = (chain * pass.gains[t - 1]).eval();
        const MatrixXd cross = chain * pass.smoothed_cov[t];  // Cov(x_0, x_t)
        pass.smoothed.col(static_cast<Index>(t)) += cross.transpose() * shift;
        MatrixXd P = pass.smoothed_cov[t] + cross.transpose() * ldlt.solve(cross);
        symmetrize(P);
        pass.smoothed_cov[t] = std::move(P);
    }
}

std::vector<double> validated_monic(const std::vector<double>& coefficients, double& scale) {
    if (coefficients.size() < 2) {
        throw InvalidRegularizerError("difference polynomial must have degree >= 1");
    }
    const double lead = coefficients.front();
    if (lead == 0.0 || !std::isfinite(lead)) {
        throw InvalidRegularizerError("leading coefficient must be finite and non-zero");
    }
    double at_one = 0.0;
    double magnitude = 0.0;
    for (double c : coefficients) {
        if (!std::isfinite(c)) throw InvalidRegularizerError("non-finite coefficient");
        at_one += c;
        magnitude += std::abs(c);
    }
    if (std::abs(at_one) > 1e-12 * magnitude) {
        throw InvalidRegularizerError("P(1) = " + std::to_string(at_one) +
                                      " != 0: the polynomial does not annihilate constants");
    }
    scale = std::abs(lead);
    std::vector<double> monic(coefficients);
    for (double& c : monic) c /= lead;
    return monic;
}

}  // namespace

ParameterStateModel ParameterStateModel::random_walk(Index K, Index n, double lambda,
                                                     const std::optional<MatrixXd>& weight) {
    ParameterStateModel model;
    model.parameter_dim = K;
    model.transition = MatrixXd::Identity(K, K);
    model.process_cov = process_block(K, lambda, weight);
    model.emission_cov = MatrixXd::Identity(n, n);
    return model;
}

ParameterStateModel ParameterStateModel::integrated_random_walk(
    Index K, Index n, double lambda, const std::optional<MatrixXd>& weight) {
    ParameterStateModel model;
    model.parameter_dim = K;
    model.transition = MatrixXd::Identity(2 * K, 2 * K);
    model.transition.topRightCorner(K, K).setIdentity();
    model.process_cov = MatrixXd::Zero(2 * K, 2 * K);
    model.process_cov.bottomRightCorner(K, K) = process_block(K, lambda, weight);
    model.emission_cov = MatrixXd::Identity(n, n);
    return model;
}

ParameterStateModel ParameterStateModel::difference_polynomial(
    Index K, Index n, const std::vector<double>& monic_coefficients, double lambda,
    const std::optional<MatrixXd>& weight) {
    const Index d = static_cast<Index>(monic_coefficients.size()) - 1;
    if (d < 1 || monic_coefficients.front() != 1.0) {
        throw InvalidRegularizerError("companion realization needs a monic polynomial of degree >= 1");
    }
    const Index S = d * K;
    ParameterStateModel model;
    model.parameter_dim = K;
    model.transition = MatrixXd::Zero(S, S);
    for (Index b = 0; b + 1 < d; ++b) {
        model.transition.block(b * K, (b + 1) * K, K, K).setIdentity();
    }
    // k_{t+d} = -sum_{j=1..d} c_j k_{t+d-j}; block d-j of the state is k_{t+d-j}.
    for (Index j = 1; j <= d; ++j) {
        model.transition.block((d - 1) * K, (d - j) * K, K, K) =
            -monic_coefficients[j] * MatrixXd::Identity(K, K);
    }
    model.process_cov = MatrixXd::Zero(S, S);
    model.process_cov.bottomRightCorner(K, K) = process_block(K, lambda, weight);
    model.emission_cov = MatrixXd::Identity(n, n);
    return model;
}

void GaussianPrior::validate(Index K, Index N) const {
    if (static_cast<Index>(steps.size()) != N) {
        throw DimensionError("prior has " + std::to_string(steps.size()) + " steps, expected " +
                             std::to_string(N));
    }
    for (std::size_t t = 0; t < steps.size(); ++t) {
        if (!steps[t]) continue;
        const PriorStep& s = *steps[t];
        if (s.mean.size() != K || s.cov.rows() != K || s.cov.cols() != K) {
            throw DimensionError("prior step " + std::to_string(t) + " has wrong dimensions");
        }
        if (!s.mean.allFinite() || !s.cov.allFinite()) {
            throw DataError("prior step " + std::to_string(t) + " has non-finite entries");
        }
        const double scale = std::max(s.cov.cwiseAbs().maxCoeff(), 1e-300);
        if ((s.cov - s.cov.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
            throw ConfigError("prior covariance at step " + std::to_string(t) +
                              " is not symmetric");
        }
        Eigen::LLT<MatrixXd> llt(s.cov);
        if (llt.info() != Eigen::Success) {
            throw ConfigError("prior covariance at step " + std::to_string(t) +
                              " is not positive definite");
        }
    }
}

void correct(VectorXd& mean, MatrixXd& cov, const MatrixXd& H, const MatrixXd& R,
             const VectorXd& y) {
    const MatrixXd HP = H * cov;
    MatrixXd innovation_cov = HP * H.transpose() + R;
    symmetrize(innovation_cov);
    Eigen::LDLT<MatrixXd> ldlt(innovation_cov);
    const MatrixXd gain = ldlt.solve(HP).transpose();
    mean += gain * (y - H * mean);
    const MatrixXd I_KH = MatrixXd::Identity(cov.rows(), cov.cols()) - gain * H;
    cov = I_KH * cov * I_KH.transpose() + gain * R * gain.transpose();
    symmetrize(cov);
}

double default_initial_variance(const RegressorProblem& prob) {
    std::vector<double> energy(prob.steps());
    for (Index t = 0; t < prob.steps(); ++t) energy[t] = prob.target(t).squaredNorm();
    auto mid = energy.begin() + static_cast<std::ptrdiff_t>(energy.size() / 2);
    std::nth_element(energy.begin(), mid, energy.end());
    const double median = *mid;
    return 1e7 * (median > 0.0 ? median : 1.0);
}

SmootherResult smooth_with_prior(const ParameterStateModel& model, const RegressorProblem& prob,
                                 const GaussianPrior& prior, const SmootherOptions& options) {
    prior.validate(model.parameter_dim, prob.steps());
    const Index S = model.state_dim();
    const Index K = model.parameter_dim;
    if (K != prob.K() || model.emission_cov.rows() != prob.n() || S < K ||
        model.process_cov.rows() != S) {
        throw DimensionError("state-space model does not match the regressor problem");
    }
    if (options.diffuse_passes < 1) throw ConfigError("need at least one smoothing pass");

    const double kappa = options.initial_variance.value_or(default_initial_variance(prob));
    if (!(kappa > 0.0)) throw ConfigError("initial variance must be positive");

    // Later passes centre on the previous k_0 with a covariance a fixed
    // multiple of its posterior: the bias shrinks by ~1/kRecentredScale per
    // pass without the roundoff a huge kappa brings.
    constexpr double kRecentredScale = 1e4;
    VectorXd initial = VectorXd::Zero(S);
    MatrixXd initial_cov = MatrixXd::Identity(S, S) * kappa;
    PassResult pass;
    VectorXd used_mean;
    MatrixXd used_cov;
    for (int i = 0; i < options.diffuse_passes; ++i) {
        used_mean = initial;
        used_cov = initial_cov;
        pass = run_pass(model, prob, &prior, options.fusion, initial, initial_cov);
        const double moved = (pass.smoothed.col(0) - initial).norm();
        initial = pass.smoothed.col(0);
        initial_cov = kRecentredScale * pass.smoothed_cov[0];
        if (i > 0 && moved <= options.diffuse_tolerance * std::max(1.0, initial.norm())) break;
    }


    remove_initial_prior(pass, used_mean, used_cov);

    const Index N = prob.steps();
    if (options.fusion == PriorFusion::Smoothed) {
        MatrixXd prior_map = MatrixXd::Zero(K, S);
        prior_map.leftCols(K).setIdentity();
        for (Index t = 0; t < N; ++t) {
            if (!prior.steps[t]) continue;
            VectorXd mean = pass.smoothed.col(t);
            correct(mean, pass.smoothed_cov[t], prior_map, prior.steps[t]->cov,
                    prior.steps[t]->mean);
            pass.smoothed.col(t) = mean;
        }
    }

    SmootherResult result;
    result.means = {pass.smoothed.topRows(K), prob.n(), prob.m()};
    result.filtered_means = pass.filtered.topRows(K);
    result.state_means = pass.smoothed;
    result.covariances.reserve(N);
    result.filtered_covariances.reserve(N);
    for (Index t = 0; t < N; ++t) {
        result.covariances.push_back(pass.smoothed_cov[t].topLeftCorner(K, K));
        result.filtered_covariances.push_back(pass.filtered_cov[t].topLeftCorner(K, K));
    }
    result.initial_variance = kappa;
    return result;
}

SmootherResult smooth(const ParameterStateModel& model, const RegressorProblem& prob,
                      const SmootherOptions& options) {
    GaussianPrior none;
    none.steps.resize(prob.steps());
    return smooth_with_prior(model, prob, none, options);
}

namespace {

KalmanFit run_fit(const ParameterStateModel& model, const RegressorProblem& prob,
                  const std::optional<GaussianPrior>& prior, const SmootherOptions& options) {
    KalmanFit fit;
    fit.smoother = prior ? smooth_with_prior(model, prob, *prior, options)
                         : smooth(model, prob, options);
    fit.parameters = fit.smoother.means;
    return fit;
}

}  // namespace

KalmanFit fit_slow(const RegressorProblem& prob, double lambda,
                   const std::optional<MatrixXd>& weight,
                   const std::optional<GaussianPrior>& prior, const SmootherOptions& options) {
    if (!weight && !(lambda > 0.0)) throw ConfigError("lambda must be positive");
    return run_fit(ParameterStateModel::random_walk(prob.K(), prob.n(), lambda, weight), prob,
                   prior, options);
}

KalmanFit fit_smooth(const RegressorProblem& prob, double lambda,
                     const std::optional<MatrixXd>& weight,
                     const std::optional<GaussianPrior>& prior, const SmootherOptions& options) {
    if (!weight && !(lambda > 0.0)) throw ConfigError("lambda must be positive");
    return run_fit(
        ParameterStateModel::integrated_random_walk(prob.K(), prob.n(), lambda, weight), prob,
        prior, options);
}

ParameterTrajectory fit_polynomial_regularizer(const RegressorProblem& prob,
                                               const std::vector<double>& coefficients,
                                               double lambda, const SmootherOptions& options) {
    if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
    double scale = 1.0;
    const std::vector<double> monic = validated_monic(coefficients, scale);
    const auto model =
        ParameterStateModel::difference_polynomial(prob.K(), prob.n(), monic, lambda * scale);
    return smooth(model, prob, options).means;
}

}  // namespace ltvid
