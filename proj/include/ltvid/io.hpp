#pragma once

// File formats.
//
//   trajectory CSV   header `t,x1..xn,u1..um`, one row per sample, t strictly
//                    increasing
//   model JSON       {n, m, T, A: [n x n per step], B: [n x m per step]}; a
//                    time-invariant model has one entry and "time_invariant"
//   prior JSON       [{t, mean: [K], cov: [[K x K]]}, ...]; missing t = no prior
//   segmented JSON   {breakpoints: [...], segments: [{begin, end, A, B, loss,
//                    rank, flagged}], warnings: [...]}
//   coefficient CSV  `t,k1..kK`, one row per transition
//
// Every double is written with 17 significant digits (CSV) or the shortest
// round-trip representation (JSON), so files reload bit-exactly.

#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "ltvid/core.hpp"
#include "ltvid/diagnostics.hpp"
#include "ltvid/kalman.hpp"
#include "ltvid/lti.hpp"
#include "ltvid/segmentation.hpp"

namespace ltvid::io {

using json = nlohmann::json;

Trajectory parse_trajectory_csv(std::istream& in);
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);
Trajectory read_trajectory_csv(const std::filesystem::path& path);
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj);

json matrix_to_json(const MatrixXd& M);
MatrixXd matrix_from_json(const json& j, Index rows, Index cols);
json vector_to_json(const VectorXd& v);

// `samples` is the trajectory length T the model was fitted on.
json model_to_json(const LtvModel& model, Index samples);
json model_to_json(const LtiModel& model, Index samples);
// A time-invariant file loads as a one-step model (simulate broadcasts it).
LtvModel model_from_json(const json& j);

json segmented_to_json(const SegmentedModel& model);
SegmentedModel segmented_from_json(const json& j);

// K and N validate the table; steps absent from the file carry no prior.
GaussianPrior prior_from_json(const json& j, Index K, Index N);
json prior_to_json(const GaussianPrior& prior);

json identifiability_to_json(const IdentifiabilityReport& report);
json lcurve_to_json(const LCurveResult& result);
void write_lcurve_csv(std::ostream& out, const LCurveResult& result);
json fit_report_to_json(const FitReport& report);

void write_coefficients_csv(std::ostream& out, const ParameterTrajectory& k);
ParameterTrajectory parse_coefficients_csv(std::istream& in, Index n, Index m);

json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const json& j);
void write_text(const std::filesystem::path& path, const std::string& text);

// Formats a double with 17 significant digits.
std::string format_double(double v);

}  // namespace ltvid::io
