#include "ltvid/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include <fmt/format.h>

namespace ltvid::io {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, sep)) {
        while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
        while (!field.empty() && field.front() == ' ') field.erase(field.begin());
        out.push_back(field);
    }
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

double parse_double(const std::string& s, std::size_t line) {
    double v = 0.0;
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    if (!s.empty() && *begin == '+') ++begin;
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end) {
        throw DataError("line " + std::to_string(line) + ": cannot parse number '" + s + "'");
    }
    return v;
}

// Counts leading columns named <prefix><1..>.
Index count_prefixed(const std::vector<std::string>& header, std::size_t start, char prefix) {
    Index count = 0;
    for (std::size_t i = start; i < header.size(); ++i) {
        if (header[i] != std::string(1, prefix) + std::to_string(count + 1)) break;
        ++count;
    }
    return count;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "' for reading");
    return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
    return out;
}

}  // namespace

std::string format_double(double v) { return fmt::format("{:.17g}", v); }

Trajectory parse_trajectory_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw DataError("trajectory file is empty");
    const auto header = split(line, ',');
    if (header.empty() || header[0] != "t") {
        throw DataError("trajectory header must start with 't'");
    }
    const Index n = count_prefixed(header, 1, 'x');
    const Index m = count_prefixed(header, 1 + n, 'u');
    if (n == 0) throw DataError("trajectory header has no state columns x1..xn");
    if (static_cast<Index>(header.size()) != 1 + n + m) {
        throw DataError("unexpected trajectory column '" + header[1 + n + m] + "'");
    }

    std::vector<double> times;
    std::vector<double> values;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split(line, ',');
        if (static_cast<Index>(fields.size()) != 1 + n + m) {
            throw DataError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(1 + n + m) + " fields, got " +
                            std::to_string(fields.size()));
        }
        const double t = parse_double(fields[0], line_no);
        if (!times.empty() && !(t > times.back())) {
            throw DataError("line " + std::to_string(line_no) + ": rows must be sorted by t");
        }
        times.push_back(t);
        for (Index i = 1; i <= n + m; ++i) values.push_back(parse_double(fields[i], line_no));
    }
    const Index T = static_cast<Index>(times.size());
    Trajectory traj{MatrixXd(n, T), MatrixXd(m, T)};
    for (Index t = 0; t < T; ++t) {
        for (Index i = 0; i < n; ++i) traj.states(i, t) = values[t * (n + m) + i];
        for (Index i = 0; i < m; ++i) traj.inputs(i, t) = values[t * (n + m) + n + i];
    }
    traj.validate();
    return traj;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
    out << "t";
    for (Index i = 0; i < traj.n(); ++i) out << ",x" << i + 1;
    for (Index i = 0; i < traj.m(); ++i) out << ",u" << i + 1;
    out << "\n";
    for (Index t = 0; t < traj.length(); ++t) {
        out << t;
        for (Index i = 0; i < traj.n(); ++i) out << ',' << format_double(traj.states(i, t));
        for (Index i = 0; i < traj.m(); ++i) out << ',' << format_double(traj.inputs(i, t));
        out << "\n";
    }
}

Trajectory read_trajectory_csv(const std::filesystem::path& path) {
    auto in = open_in(path);
    return parse_trajectory_csv(in);
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
    auto out = open_out(path);
    write_trajectory_csv(out, traj);
}

json matrix_to_json(const MatrixXd& M) {
    json rows = json::array();
    for (Index r = 0; r < M.rows(); ++r) {
        json row = json::array();
        for (Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

MatrixXd matrix_from_json(const json& j, Index rows, Index cols) {
    if (!j.is_array() || static_cast<Index>(j.size()) != rows) {
        throw DataError("expected a matrix with " + std::to_string(rows) + " rows");
    }
    MatrixXd M(rows, cols);
    for (Index r = 0; r < rows; ++r) {
        const json& row = j[r];
        if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
            throw DataError("expected matrix rows of length " + std::to_string(cols));
        }
        for (Index c = 0; c < cols; ++c) {
            if (!row[c].is_number()) throw DataError("matrix entry is not a number");
            M(r, c) = row[c].get<double>();
        }
    }
    return M;
}

json vector_to_json(const VectorXd& v) {
    json arr = json::array();
    for (Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

json model_to_json(const LtvModel& model, Index samples) {
    json j;
    j["n"] = model.n();
    j["m"] = model.m();
    j["T"] = samples;
    j["A"] = json::array();
    j["B"] = json::array();
    for (Index t = 0; t < model.steps(); ++t) {
        j["A"].push_back(matrix_to_json(model.A[t]));
        j["B"].push_back(matrix_to_json(model.B[t]));
    }
    return j;
}

json model_to_json(const LtiModel& model, Index samples) {
    json j = model_to_json(LtvModel{{model.A}, {model.B}}, samples);
    j["time_invariant"] = true;
    return j;
}

LtvModel model_from_json(const json& j) {
    try {
        const Index n = j.at("n").get<Index>();
        const Index m = j.at("m").get<Index>();
        const json& A = j.at("A");
        const json& B = j.at("B");
        if (!A.is_array() || !B.is_array() || A.size() != B.size() || A.empty()) {
            throw DataError("model A and B must be non-empty arrays of equal length");
        }
        LtvModel model;
        for (std::size_t t = 0; t < A.size(); ++t) {
            model.A.push_back(matrix_from_json(A[t], n, n));
            model.B.push_back(m == 0 ? MatrixXd(n, 0) : matrix_from_json(B[t], n, m));
        }
        return model;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed model JSON: ") + e.what());
    }
}

json segmented_to_json(const SegmentedModel& model) {
    json j;
    j["breakpoints"] = model.breakpoints;
    j["segments"] = json::array();
    for (const Segment& s : model.segments) {
        j["segments"].push_back({{"begin", s.begin},
                                 {"end", s.end},
                                 {"A", matrix_to_json(s.model.A)},
                                 {"B", matrix_to_json(s.model.B)},
                                 {"loss", s.loss},
                                 {"rank", s.rank},
                                 {"flagged", s.flagged}});
    }
    j["total_loss"] = model.total_loss();
    j["warnings"] = model.warnings;
    return j;
}

SegmentedModel segmented_from_json(const json& j) {
    try {
        SegmentedModel model;
        model.breakpoints = j.at("breakpoints").get<std::vector<Index>>();
        for (const json& s : j.at("segments")) {
            Segment seg;
            seg.begin = s.at("begin").get<Index>();
            seg.end = s.at("end").get<Index>();
            const Index n = static_cast<Index>(s.at("A").size());
            const Index m = n == 0 || s.at("B").empty() ? 0 : static_cast<Index>(s.at("B")[0].size());
            seg.model.A = matrix_from_json(s.at("A"), n, n);
            seg.model.B = m == 0 ? MatrixXd(n, 0) : matrix_from_json(s.at("B"), n, m);
            seg.loss = s.at("loss").get<double>();
            seg.rank = s.value("rank", Index{0});
            seg.flagged = s.value("flagged", false);
            model.segments.push_back(std::move(seg));
        }
        if (j.contains("warnings")) model.warnings = j["warnings"].get<std::vector<std::string>>();
        return model;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed segmented-model JSON: ") + e.what());
    }
}

GaussianPrior prior_from_json(const json& j, Index K, Index N) {
    if (!j.is_array()) throw DataError("prior file must hold a JSON array");
    GaussianPrior prior;
    prior.steps.resize(N);
    try {
        for (const json& entry : j) {
            const Index t = entry.at("t").get<Index>();
            if (t < 0 || t >= N) {
                throw DataError("prior step t=" + std::to_string(t) + " outside [0, " +
                                std::to_string(N) + ")");
            }
            if (prior.steps[t]) throw DataError("duplicate prior step t=" + std::to_string(t));
            const json& mean = entry.at("mean");
            if (!mean.is_array() || static_cast<Index>(mean.size()) != K) {
                throw DataError("prior mean at t=" + std::to_string(t) + " must have " +
                                std::to_string(K) + " entries");
            }
            PriorStep step;
            step.mean.resize(K);
            for (Index i = 0; i < K; ++i) step.mean(i) = mean[i].get<double>();
            step.cov = matrix_from_json(entry.at("cov"), K, K);
            prior.steps[t] = std::move(step);
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed prior JSON: ") + e.what());
    }
    prior.validate(K, N);
    return prior;
}

json prior_to_json(const GaussianPrior& prior) {
    json j = json::array();
    for (std::size_t t = 0; t < prior.steps.size(); ++t) {
        if (!prior.steps[t]) continue;
        j.push_back({{"t", t},
                     {"mean", vector_to_json(prior.steps[t]->mean)},
                     {"cov", matrix_to_json(prior.steps[t]->cov)}});
    }
    return j;
}

json identifiability_to_json(const IdentifiabilityReport& report) {
    json j;
    j["order"] = report.order;
    j["data_rank"] = report.data_rank;
    j["lti_rank"] = report.lti_rank;
    j["min_singular_value"] = report.min_singular_value;
    j["deficient"] = report.deficient;
    j["null_vector"] = report.null_vector ? vector_to_json(*report.null_vector) : json(nullptr);
    j["affine_direction"] =
        report.affine_direction ? vector_to_json(*report.affine_direction) : json(nullptr);
    j["warnings"] = report.warnings;
    return j;
}

json lcurve_to_json(const LCurveResult& result) {
    json j;
    j["selected_lambda"] = result.selected_lambda;
    j["selected_index"] = result.selected_index;
    j["degenerate"] = result.degenerate;
    j["warnings"] = result.warnings;
    j["points"] = json::array();
    for (const auto& p : result.points) {
        j["points"].push_back({{"lambda", p.lambda},
                               {"loss", p.loss},
                               {"regularizer", p.regularizer},
                               {"curvature", p.curvature}});
    }
    return j;
}

void write_lcurve_csv(std::ostream& out, const LCurveResult& result) {
    out << "lambda,loss,regularizer\n";
    for (const auto& p : result.points) {
        out << format_double(p.lambda) << ',' << format_double(p.loss) << ','
            << format_double(p.regularizer) << "\n";
    }
}

json fit_report_to_json(const FitReport& report) {
    json j;
    j["loss"] = report.loss;
    j["regularizer"] = report.regularizer;
    j["objective"] = report.objective;
    j["residual_norms"] = vector_to_json(report.residual_norms);
    j["difference_norms"] = vector_to_json(report.difference_norms);
    return j;
}

void write_coefficients_csv(std::ostream& out, const ParameterTrajectory& k) {
    out << "t";
    for (Index i = 0; i < k.K(); ++i) out << ",k" << i + 1;
    out << "\n";
    for (Index t = 0; t < k.steps(); ++t) {
        out << t;
        for (Index i = 0; i < k.K(); ++i) out << ',' << format_double(k.coefficients(i, t));
        out << "\n";
    }
}

ParameterTrajectory parse_coefficients_csv(std::istream& in, Index n, Index m) {
    std::string line;
    if (!std::getline(in, line)) throw DataError("coefficient file is empty");
    const auto header = split(line, ',');
    const Index K = count_prefixed(header, 1, 'k');
    if (header.empty() || header[0] != "t" || K != n * (n + m) ||
        static_cast<Index>(header.size()) != K + 1) {
        throw DataError("coefficient header must be t,k1..k" + std::to_string(n * (n + m)));
    }
    std::vector<double> values;
    std::size_t line_no = 1;
    Index rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split(line, ',');
        if (static_cast<Index>(fields.size()) != K + 1) {
            throw DataError("line " + std::to_string(line_no) + ": wrong number of fields");
        }
        for (Index i = 1; i <= K; ++i) values.push_back(parse_double(fields[i], line_no));
        ++rows;
    }
    ParameterTrajectory k{MatrixXd(K, rows), n, m};
    for (Index t = 0; t < rows; ++t) {
        for (Index i = 0; i < K; ++i) k.coefficients(i, t) = values[t * K + i];
    }
    return k;
}

json read_json(const std::filesystem::path& path) {
    auto in = open_in(path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw DataError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

void write_json(const std::filesystem::path& path, const json& j) {
    auto out = open_out(path);
    out << j.dump(2) << "\n";
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    auto out = open_out(path);
    out << text;
}

}  // namespace ltvid::io
