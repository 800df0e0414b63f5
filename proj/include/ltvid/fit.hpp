#pragma once

#include <optional>

#include "ltvid/admm.hpp"
#include "ltvid/kalman.hpp"

namespace ltvid {

struct FitResult {
    ParameterTrajectory parameters;
    std::optional<AdmmReport> admm;  // set for the sparse formulations
};

// Squared norms go to the Kalman smoother (order 1 or 2), group and
// elementwise norms to ADMM.
FitResult fit_formulation(const RegressorProblem& prob, const RegularizerSpec& reg,
                          const AdmmConfig& admm = {},
                          const std::optional<GaussianPrior>& prior = std::nullopt);

}  // namespace ltvid
