#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <omp.h>

#include <CLI11.hpp>

#include "ltvid/admm.hpp"
#include "ltvid/diagnostics.hpp"
#include "ltvid/fit.hpp"
#include "ltvid/generators.hpp"
#include "ltvid/io.hpp"
#include "ltvid/kalman.hpp"
#include "ltvid/lti.hpp"
#include "ltvid/segmentation.hpp"

namespace ltvid::cli {

namespace fs = std::filesystem;
using io::json;

namespace {

// Solver stopped at the iteration cap; artifacts are already on disk.
struct NotConvergedSignal {
    std::string message;
};

std::optional<double> env_double(const char* name) {
    const char* v = std::getenv(name);
    if (!v || !*v) return std::nullopt;
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != std::string(v).size()) throw std::invalid_argument(name);
        return d;
    } catch (const std::exception&) {
        throw ConfigError(std::string("environment variable ") + name + " is not a number");
    }
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string field;
    while (std::getline(ss, field, ',')) {
        try {
            std::size_t pos = 0;
            out.push_back(std::stod(field, &pos));
            if (pos != field.size()) throw std::invalid_argument(field);
        } catch (const std::exception&) {
            throw ConfigError("cannot parse number '" + field + "' in list '" + text + "'");
        }
    }
    if (out.empty()) throw ConfigError("empty list");
    return out;
}

std::vector<Index> parse_index_list(const std::string& text) {
    std::vector<Index> out;
    if (text.empty()) return out;
    for (double v : parse_list(text)) {
        if (v != static_cast<double>(static_cast<Index>(v))) {
            throw ConfigError("knot '" + std::to_string(v) + "' is not an integer");
        }
        out.push_back(static_cast<Index>(v));
    }
    return out;
}

json report_json(const AdmmReport& r) {
    return {{"iterations", r.iterations},     {"primal_residual", r.primal_residual},
            {"dual_residual", r.dual_residual}, {"objective", r.objective},
            {"converged", r.converged},        {"status", r.status}};
}

std::string write_csv(const std::function<void(std::ostream&)>& body) {
    std::ostringstream ss;
    body(ss);
    return ss.str();
}

struct AdmmFlags {
    int max_iterations = 0;
    double tolerance = 0.0;
    double rho = 1.0;
    double step = 0.0;
    double relaxation = 1.0;
    std::string k_update = "exact";

    AdmmConfig config() const {
        AdmmConfig cfg;
        if (auto v = env_double("LTVID_ADMM_MAX_ITER")) cfg.max_iterations = static_cast<int>(*v);
        if (auto v = env_double("LTVID_ADMM_TOL")) cfg.primal_tolerance = cfg.dual_tolerance = *v;
        if (max_iterations > 0) cfg.max_iterations = max_iterations;
        if (tolerance > 0.0) cfg.primal_tolerance = cfg.dual_tolerance = tolerance;
        cfg.rho = rho;
        cfg.step = step;
        cfg.relaxation = relaxation;
        cfg.k_update = k_update == "linearized" ? KUpdate::Linearized : KUpdate::Exact;
        return cfg;
    }
};

double rank_tolerance() {
    return env_double("LTVID_RANK_TOL").value_or(kRankTolerance);
}

// ---------------------------------------------------------------- generate

struct GenerateFlags {
    std::string kind = "jump-linear";
    std::uint64_t seed = 1;
    Index length = 0;
    Index switch_time = 200;
    double process_noise = -1.0;
    double measurement_noise = -1.0;
    double input_scale = 1.0;
    std::string drift = "linear";
    Index n = 2;
    Index m = 1;
    std::string out = "trajectory.csv";
    std::string truth;
};

int do_generate(const GenerateFlags& f, std::ostream& out) {
    GeneratedData data;
    if (f.kind == "jump-linear") {
        auto spec = JumpLinearSpec::standard();
        spec.seed = f.seed;
        if (f.length > 0) spec.length = f.length;
        spec.switch_time = f.switch_time;
        if (f.process_noise >= 0.0) spec.process_noise = f.process_noise;
        if (f.measurement_noise >= 0.0) spec.measurement_noise = f.measurement_noise;
        spec.input_scale = f.input_scale;
        data = generate_jump_linear(spec);
    } else {
        DriftSpec spec;
        spec.seed = f.seed;
        if (f.length > 0) spec.length = f.length;
        spec.n = f.n;
        spec.m = f.m;
        spec.input_scale = f.input_scale;
        spec.process_noise = std::max(f.process_noise, 0.0);
        spec.measurement_noise = std::max(f.measurement_noise, 0.0);
        static const std::map<std::string, Drift> drifts{
            {"constant", Drift::Constant}, {"linear", Drift::Linear}, {"sinusoidal", Drift::Sinusoidal}};
        spec.drift = drifts.at(f.drift);
        data = generate_drifting(spec);
    }
    io::write_trajectory_csv(fs::path(f.out), data.recorded);
    const fs::path truth = f.truth.empty() ? fs::path(f.out).replace_extension(".truth.json")
                                           : fs::path(f.truth);
    json tj = io::model_to_json(to_model(data.truth), data.recorded.length());
    tj["generator"] = f.kind;
    tj["seed"] = f.seed;
    io::write_json(truth, tj);
    out << json{{"trajectory", f.out}, {"truth", truth.string()}}.dump() << "\n";
    return Ok;
}

// --------------------------------------------------------------------- fit

struct FitFlags {
    std::string input;
    std::string method = "pwconstant";
    std::string lambda = "1";
    Index segments = 1;
    std::string poly;
    std::string prior;
    std::string out_dir = ".";
    double knot_fraction = 0.1;
    Index grid_points = 10;
    AdmmFlags admm;
};

RegularizerSpec formulation(const std::string& method) {
    if (method == "slow") return {1, Norm::Squared, 1.0, std::nullopt};
    if (method == "smooth") return {2, Norm::Squared, 1.0, std::nullopt};
    if (method == "pwconstant") return {1, Norm::Group, 1.0, std::nullopt};
    if (method == "pwconstant-elem") return {1, Norm::Elementwise, 1.0, std::nullopt};
    if (method == "pwlinear") return {2, Norm::Group, 1.0, std::nullopt};
    throw ConfigError("method '" + method + "' has no regularizer");
}

int do_fit(const FitFlags& f, std::ostream& out) {
    const Trajectory traj = io::read_trajectory_csv(f.input);
    const RegressorProblem prob = build_regressor(traj);
    const fs::path dir(f.out_dir);
    fs::create_directories(dir);
    const double rtol = rank_tolerance();

    json report;
    report["method"] = f.method;
    report["n"] = prob.n();
    report["m"] = prob.m();
    report["samples"] = traj.length();

    if (f.method == "lti") {
        const LtiModel model = fit_lti(prob, rtol);
        const auto k = ParameterTrajectory::broadcast(model.parameters(), prob.n(), prob.m(),
                                                      prob.steps());
        io::write_json(dir / "model.json", io::model_to_json(model, traj.length()));
        io::write_text(dir / "coefficients.csv",
                       write_csv([&](std::ostream& s) { io::write_coefficients_csv(s, k); }));
        report["loss"] = loss_value(prob, k);
        io::write_json(dir / "report.json", report);
        out << json{{"model", (dir / "model.json").string()}}.dump() << "\n";
        return Ok;
    }

    if (f.method == "dp") {
        const SegmentedModel seg = fit_dp_segments(prob, f.segments);
        const ParameterTrajectory k = seg.parameters();
        io::write_json(dir / "model.json", io::model_to_json(to_model(k), traj.length()));
        io::write_json(dir / "segments.json", io::segmented_to_json(seg));
        io::write_text(dir / "coefficients.csv",
                       write_csv([&](std::ostream& s) { io::write_coefficients_csv(s, k); }));
        report["segments"] = f.segments + 1;
        report["breakpoints"] = seg.breakpoints;
        report["loss"] = seg.total_loss();
        report["warnings"] = seg.warnings;
        io::write_json(dir / "report.json", report);
        out << json{{"breakpoints", seg.breakpoints}}.dump() << "\n";
        return Ok;
    }

    std::optional<GaussianPrior> prior;
    if (!f.prior.empty()) prior = io::prior_from_json(io::read_json(f.prior), prob.K(), prob.steps());

    if (f.method == "poly") {
        if (f.poly.empty()) throw ConfigError("--method poly needs --poly c0,c1,...");
        if (f.lambda == "auto") throw ConfigError("--lambda auto is not available for poly");
        if (prior) throw ConfigError("--prior is not available for poly");
        const double lambda = parse_list(f.lambda).at(0);
        const auto coeffs = parse_list(f.poly);
        const ParameterTrajectory k = fit_polynomial_regularizer(prob, coeffs, lambda);
        io::write_json(dir / "model.json", io::model_to_json(to_model(k), traj.length()));
        io::write_text(dir / "coefficients.csv",
                       write_csv([&](std::ostream& s) { io::write_coefficients_csv(s, k); }));
        report["lambda"] = lambda;
        report["polynomial"] = coeffs;
        report["loss"] = loss_value(prob, k);
        io::write_json(dir / "report.json", report);
        out << json{{"model", (dir / "model.json").string()}}.dump() << "\n";
        return Ok;
    }

    RegularizerSpec reg = formulation(f.method);
    const AdmmConfig admm = f.admm.config();
    const IdentifiabilityReport ident = well_posedness(prob, reg, rtol);
    if (ident.deficient) {
        MatrixXd directions;
        if (ident.null_vector) directions = *ident.null_vector;
        else if (ident.affine_direction) directions = *ident.affine_direction;
        throw IllPosedError("problem is not identifiable for the " + f.method + " formulation",
                            directions);
    }

    if (f.lambda == "auto") {
        if (prior) throw ConfigError("--lambda auto cannot be combined with --prior");
        SweepOptions sweep;
        sweep.admm = admm;
        const LCurveResult lc =
            lcurve_sweep(prob, reg, default_lambda_grid(prob, f.grid_points), sweep);
        io::write_text(dir / "lcurve.csv",
                       write_csv([&](std::ostream& s) { io::write_lcurve_csv(s, lc); }));
        report["lcurve"] = io::lcurve_to_json(lc);
        reg.lambda = lc.selected_lambda;
    } else {
        reg.lambda = parse_list(f.lambda).at(0);
    }

    const FitResult fit = fit_formulation(prob, reg, admm, prior);
    const FitReport summary = fit_report(prob, fit.parameters, reg);
    io::write_json(dir / "model.json", io::model_to_json(to_model(fit.parameters), traj.length()));
    io::write_text(dir / "coefficients.csv", write_csv([&](std::ostream& s) {
                       io::write_coefficients_csv(s, fit.parameters);
                   }));
    report["lambda"] = reg.lambda;
    report["order"] = reg.order;
    report["fit"] = io::fit_report_to_json(summary);
    report["identifiability"] = io::identifiability_to_json(ident);
    std::vector<Index> knots;
    if (reg.norm != Norm::Squared) {
        knots = detect_knots_relative(fit.parameters, reg.order, f.knot_fraction);
        report["knots"] = knots;
        report["knot_fraction"] = f.knot_fraction;
    }
    if (fit.admm) report["admm"] = report_json(*fit.admm);
    io::write_json(dir / "report.json", report);

    json summary_line{{"lambda", reg.lambda}, {"objective", summary.objective}};
    if (reg.norm != Norm::Squared) summary_line["knots"] = knots;
    out << summary_line.dump() << "\n";
    if (fit.admm && !fit.admm->converged) throw NotConvergedSignal{fit.admm->status};
    return Ok;
}

// ------------------------------------------------------------------- knots

struct KnotFlags {
    std::string coefficients;
    std::string model;
    int order = 1;
    double tau = -1.0;
    double fraction = 0.1;
    std::string out;
};

int do_knots(const KnotFlags& f, std::ostream& out) {
    const LtvModel model = io::model_from_json(io::read_json(f.model));
    std::ifstream in(f.coefficients);
    if (!in) throw DataError("cannot open '" + f.coefficients + "' for reading");
    const ParameterTrajectory k = io::parse_coefficients_csv(in, model.n(), model.m());
    const auto knots = f.tau >= 0.0 ? detect_knots(k, f.order, f.tau)
                                    : detect_knots_relative(k, f.order, f.fraction);
    const json j{{"knots", knots}, {"order", f.order}};
    if (!f.out.empty()) io::write_json(f.out, j);
    out << j.dump() << "\n";
    return Ok;
}

// ------------------------------------------------------------------ refine

struct RefineFlags {
    std::string input;
    std::string knots;
    std::string knots_file;
    std::string out = "segments.json";
};

int do_refine(const RefineFlags& f, std::ostream& out) {
    const RegressorProblem prob = build_regressor(io::read_trajectory_csv(f.input));
    std::vector<Index> knots = parse_index_list(f.knots);
    if (!f.knots_file.empty()) {
        const json j = io::read_json(f.knots_file);
        knots = (j.is_object() ? j.at("knots") : j).get<std::vector<Index>>();
    }
    const SegmentedModel seg = refine(prob, knots);
    io::write_json(f.out, io::segmented_to_json(seg));
    out << json{{"segments", seg.segments.size()}, {"total_loss", seg.total_loss()},
                {"warnings", seg.warnings}}
               .dump()
        << "\n";
    return Ok;
}

// ---------------------------------------------------------------- diagnose

struct DiagnoseFlags {
    std::string input;
    int order = 1;
    std::string out;
};

int do_diagnose(const DiagnoseFlags& f, std::ostream& out) {
    const RegressorProblem prob = build_regressor(io::read_trajectory_csv(f.input));
    const auto report =
        well_posedness(prob, {f.order, Norm::Squared, 1.0, std::nullopt}, rank_tolerance());
    const json j = io::identifiability_to_json(report);
    if (!f.out.empty()) io::write_json(f.out, j);
    out << j.dump() << "\n";
    return Ok;
}

// ---------------------------------------------------------------- simulate

struct SimulateFlags {
    std::string model;
    std::string input;
    std::string out = "simulated.csv";
};

int do_simulate(const SimulateFlags& f, std::ostream& out) {
    const LtvModel model = io::model_from_json(io::read_json(f.model));
    const Trajectory traj = io::read_trajectory_csv(f.input);
    const Index N = traj.length() - 1;
    if (model.steps() != 1 && model.steps() != N) {
        throw DimensionError("model has " + std::to_string(model.steps()) + " steps, trajectory " +
                             std::to_string(N) + " transitions");
    }
    const Trajectory sim = simulate(model, traj.states.col(0), traj.inputs.leftCols(N));
    io::write_trajectory_csv(fs::path(f.out), sim);
    out << json{{"trajectory", f.out}, {"samples", sim.length()}}.dump() << "\n";
    return Ok;
}

json error_json(const std::string& kind, const std::string& message) {
    return {{"error", kind}, {"message", message}};
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Linear time-varying system identification"};
    app.require_subcommand(1);
    app.fallthrough();
    int threads = 0;
    app.add_option("--threads", threads, "OpenMP threads (0: runtime default)")
        ->check(CLI::NonNegativeNumber);

    GenerateFlags gen;
    auto* g = app.add_subcommand("generate", "Write a synthetic trajectory and its truth");
    g->add_option("kind", gen.kind, "jump-linear | drifting")
        ->check(CLI::IsMember({"jump-linear", "drifting"}));
    g->add_option("--seed", gen.seed);
    g->add_option("--length", gen.length, "samples T")->check(CLI::NonNegativeNumber);
    g->add_option("--switch-time", gen.switch_time);
    g->add_option("--process-noise", gen.process_noise);
    g->add_option("--measurement-noise", gen.measurement_noise);
    g->add_option("--input-scale", gen.input_scale);
    g->add_option("--drift", gen.drift)->check(CLI::IsMember({"constant", "linear", "sinusoidal"}));
    g->add_option("-n", gen.n);
    g->add_option("-m", gen.m);
    g->add_option("-o,--out", gen.out);
    g->add_option("--truth", gen.truth, "truth JSON (default <out>.truth.json)");

    FitFlags fit;
    auto* f = app.add_subcommand("fit", "Fit a model to a trajectory");
    f->add_option("-i,--input", fit.input)->required();
    f->add_option("--method", fit.method)
        ->check(CLI::IsMember({"lti", "slow", "smooth", "pwconstant", "pwconstant-elem",
                               "pwlinear", "dp", "poly"}));
    f->add_option("--lambda", fit.lambda, "value or 'auto' (L-curve)");
    f->add_option("--segments", fit.segments, "breakpoints M for dp")->check(CLI::NonNegativeNumber);
    f->add_option("--poly", fit.poly, "difference polynomial, highest power first");
    f->add_option("--prior", fit.prior, "Gaussian prior JSON");
    f->add_option("-o,--out-dir", fit.out_dir);
    f->add_option("--knot-fraction", fit.knot_fraction)->check(CLI::NonNegativeNumber);
    f->add_option("--grid-points", fit.grid_points)->check(CLI::Range(5, 200));
    f->add_option("--max-iter", fit.admm.max_iterations)->check(CLI::PositiveNumber);
    f->add_option("--tol", fit.admm.tolerance)->check(CLI::PositiveNumber);
    f->add_option("--rho", fit.admm.rho);
    f->add_option("--step", fit.admm.step);
    f->add_option("--relaxation", fit.admm.relaxation);
    f->add_option("--k-update", fit.admm.k_update)->check(CLI::IsMember({"exact", "linearized"}));

    KnotFlags kn;
    auto* k = app.add_subcommand("knots", "Detect knots in a coefficient trace");
    k->add_option("--coefficients", kn.coefficients)->required();
    k->add_option("--model", kn.model, "model JSON supplying n and m")->required();
    k->add_option("--order", kn.order)->check(CLI::IsMember({1, 2}));
    k->add_option("--tau", kn.tau, "absolute threshold");
    k->add_option("--fraction", kn.fraction, "threshold relative to the largest difference");
    k->add_option("-o,--out", kn.out);

    RefineFlags rf;
    auto* r = app.add_subcommand("refine", "Unpenalized refit between knots");
    r->add_option("-i,--input", rf.input)->required();
    r->add_option("--knots", rf.knots, "comma-separated indices");
    r->add_option("--knots-file", rf.knots_file, "JSON from `knots`");
    r->add_option("-o,--out", rf.out);

    DiagnoseFlags dg;
    auto* d = app.add_subcommand("diagnose", "Identifiability report");
    d->add_option("-i,--input", dg.input)->required();
    d->add_option("--order", dg.order)->check(CLI::IsMember({1, 2}));
    d->add_option("-o,--out", dg.out);

    SimulateFlags sm;
    auto* s = app.add_subcommand("simulate", "Roll a model out on a trajectory's inputs");
    s->add_option("--model", sm.model)->required();
    s->add_option("-i,--input", sm.input, "trajectory supplying x0 and inputs")->required();
    s->add_option("-o,--out", sm.out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << error_json("config", e.what()).dump() << "\n";
        return ConfigFailure;
    }

    try {
        if (threads > 0) omp_set_num_threads(threads);
        if (g->parsed()) return do_generate(gen, out);
        if (f->parsed()) return do_fit(fit, out);
        if (k->parsed()) return do_knots(kn, out);
        if (r->parsed()) return do_refine(rf, out);
        if (d->parsed()) return do_diagnose(dg, out);
        if (s->parsed()) return do_simulate(sm, out);
        return InternalFailure;
    } catch (const NotConvergedSignal& e) {
        err << error_json("not_converged", e.message).dump() << "\n";
        return NotConverged;
    } catch (const IllPosedError& e) {
        json j = error_json(e.kind(), e.what());
        if (e.directions().size() > 0) j["directions"] = io::matrix_to_json(e.directions());
        err << j.dump() << "\n";
        return IllPosed;
    } catch (const InstabilityError& e) {
        err << error_json(e.kind(), e.what()).dump() << "\n";
        return Unstable;
    } catch (const ConfigError& e) {
        err << error_json(e.kind(), e.what()).dump() << "\n";
        return ConfigFailure;
    } catch (const InvalidRegularizerError& e) {
        err << error_json(e.kind(), e.what()).dump() << "\n";
        return ConfigFailure;
    } catch (const Error& e) {
        err << error_json(e.kind(), e.what()).dump() << "\n";
        return DataFailure;
    } catch (const fs::filesystem_error& e) {
        err << error_json("io", e.what()).dump() << "\n";
        return DataFailure;
    } catch (const std::exception& e) {
        err << error_json("internal", e.what()).dump() << "\n";
        return InternalFailure;
    }
}

}  // namespace ltvid::cli
