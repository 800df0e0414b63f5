#include "ltvid/fit.hpp"

namespace ltvid {

FitResult fit_formulation(const RegressorProblem& prob, const RegularizerSpec& reg,
                          const AdmmConfig& admm, const std::optional<GaussianPrior>& prior) {
    reg.validate(prob.K());
    FitResult result;
    if (reg.norm == Norm::Squared) {
        const KalmanFit fit = reg.order == 1 ? fit_slow(prob, reg.lambda, reg.weight, prior)
                                             : fit_smooth(prob, reg.lambda, reg.weight, prior);
        result.parameters = fit.parameters;
        return result;
    }
    if (prior) throw ConfigError("priors are only supported by the squared-norm formulations");
    AdmmFit fit = fit_sparse(prob, reg, admm);
    result.parameters = std::move(fit.parameters);
    result.admm = fit.report;
    return result;
}

}  // namespace ltvid
