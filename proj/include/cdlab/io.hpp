#pragma once

#include <cdlab/core_model.hpp>
#include <cdlab/operators.hpp>
#include <cdlab/solvers.hpp>
#include <cdlab/verification.hpp>

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace cdlab::io {

using nlohmann::json;

/// Error reading or writing a file.
class IoError : public Error {
  public:
    using Error::Error;
};

/// %.17g formatting, so every double round-trips through text.
inline std::string format_double(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline json to_json(const Vec& v)
{
    json out = json::array();
    for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

inline json to_json(const Mat& m)
{
    json out = json::array();
    for (Index i = 0; i < m.rows(); ++i) out.push_back(to_json(Vec(m.row(i).transpose())));
    return out;
}

inline Vec vec_from_json(const json& j, const char* what)
{
    if (!j.is_array()) throw IoError(std::string(what) + ": expected an array of numbers");
    Vec v(static_cast<Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw IoError(std::string(what) + ": non-numeric entry");
        v(static_cast<Index>(i)) = j[i].get<double>();
    }
    return v;
}

inline Mat mat_from_json(const json& j, const char* what)
{
    if (!j.is_array() || j.empty()) throw IoError(std::string(what) + ": expected a nested row-major array");
    const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
    if (cols == 0) throw IoError(std::string(what) + ": rows must be non-empty arrays");
    Mat m(static_cast<Index>(j.size()), static_cast<Index>(cols));
    for (std::size_t r = 0; r < j.size(); ++r) {
        const Vec row = vec_from_json(j[r], what);
        if (static_cast<std::size_t>(row.size()) != cols) throw IoError(std::string(what) + ": ragged rows");
        m.row(static_cast<Index>(r)) = row.transpose();
    }
    return m;
}

inline json problem_to_json(const ProblemSpec& p)
{
    json j;
    if (const auto* q = p.quadratic()) {
        j["kind"] = "quadratic";
        j["A"] = to_json(q->hessian());
        j["b"] = to_json(q->linear());
    } else {
        const auto& data = *p.logistic();
        j["kind"] = "logistic";
        j["X"] = to_json(data.design());
        j["Y"] = to_json(data.labels());
    }
    j["lambda"] = p.lambda();
    j["L"] = p.lipschitz();
    j["dim"] = p.dim();
    return j;
}

/// Parses the problem file schema; L is estimated when absent.
inline ProblemSpec problem_from_json(const json& j)
{
    if (!j.is_object() || !j.contains("kind") || !j.contains("lambda")) {
        throw IoError("problem: expected an object with 'kind' and 'lambda'");
    }
    const std::string kind = j.at("kind").get<std::string>();
    const double lambda = j.at("lambda").get<double>();
    std::optional<SmoothPart> smooth;
    if (kind == "quadratic") {
        if (!j.contains("A") || !j.contains("b")) throw IoError("problem: quadratic needs 'A' and 'b'");
        smooth.emplace(QuadraticForm(mat_from_json(j.at("A"), "A"), vec_from_json(j.at("b"), "b")));
    } else if (kind == "logistic") {
        if (!j.contains("X") || !j.contains("Y")) throw IoError("problem: logistic needs 'X' and 'Y'");
        smooth.emplace(LogisticData(mat_from_json(j.at("X"), "X"), vec_from_json(j.at("Y"), "Y")));
    } else {
        throw IoError("problem: unknown kind '" + kind + "'");
    }
    if (j.contains("dim") && j.at("dim").get<Index>() != smooth_dim(*smooth)) {
        throw IoError("problem: 'dim' does not match the data");
    }
    if (j.contains("L") && !j.at("L").is_null()) {
        return ProblemSpec(std::move(*smooth), lambda, j.at("L").get<double>());
    }
    return ProblemSpec(std::move(*smooth), lambda);
}

inline std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& contents)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << contents;
    if (!out) throw IoError("write to '" + path + "' failed");
}

inline ProblemSpec load_problem(const std::string& path)
{
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw IoError("problem file '" + path + "': " + e.what());
    }
    return problem_from_json(j);
}

inline void save_problem(const std::string& path, const ProblemSpec& p)
{
    write_file(path, problem_to_json(p).dump(2) + "\n");
}

/// Dense numeric CSV. A first row containing any non-numeric field is taken
/// as a header and skipped.
inline Mat parse_csv(const std::string& text)
{
    std::vector<std::vector<double>> rows;
    std::istringstream in(text);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::vector<double> row;
        bool numeric = true;
        std::istringstream ls(line);
        std::string field;
        while (std::getline(ls, field, ',')) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(field, &used));
                if (field.find_first_not_of(" \t", used) != std::string::npos) numeric = false;
            } catch (const std::exception&) {
                numeric = false;
            }
        }
        if (!numeric) {
            if (first) {
                first = false;
                continue;
            }
            throw IoError("csv: non-numeric field in line '" + line + "'");
        }
        first = false;
        if (!rows.empty() && row.size() != rows.front().size()) throw IoError("csv: ragged rows");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw IoError("csv: no data rows");
    Mat m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) m(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
    }
    return m;
}

inline Mat load_csv(const std::string& path)
{
    return parse_csv(read_file(path));
}

inline json classification_to_json(const Classification& c)
{
    return json{{"kind", to_string(c.kind)}, {"slack", to_json(c.slack)}, {"tol", c.tol}, {"tau", c.tau}};
}

/// k,F,residual,x_1..x_d
inline std::string trace_to_csv(const Trace& tr)
{
    std::ostringstream out;
    const Index d = tr.iterates.empty() ? 0 : tr.iterates.front().size();
    out << "k,F,residual";
    for (Index j = 1; j <= d; ++j) out << ",x_" << j;
    out << '\n';
    for (std::size_t k = 0; k < tr.iterates.size(); ++k) {
        out << k << ',' << format_double(tr.f_values[k]) << ',' << format_double(tr.residuals[k]);
        for (Index j = 0; j < d; ++j) out << ',' << format_double(tr.iterates[k](j));
        out << '\n';
    }
    return out.str();
}

inline json trace_to_json(const Trace& tr)
{
    json j;
    j["algorithm"] = to_string(tr.algorithm);
    j["iterates"] = json::array();
    for (const auto& x : tr.iterates) j["iterates"].push_back(to_json(x));
    j["f_values"] = tr.f_values;
    j["residuals"] = tr.residuals;
    if (!tr.inner.empty()) {
        j["inner"] = json::array();
        for (const auto& sweep : tr.inner) {
            json s = json::array();
            for (const auto& y : sweep) s.push_back(to_json(y));
            j["inner"].push_back(std::move(s));
        }
    }
    j["tau_log"] = json::array();
    for (const auto& t : tr.tau_log) {
        j["tau_log"].push_back(json{{"k", t.sweep},
                                    {"j", t.coord + 1},
                                    {"tau", t.tau},
                                    {"z_old", t.z_old},
                                    {"z_new", t.z_new},
                                    {"grad_old", t.grad_old}});
    }
    return j;
}

/// Report without the full traces; per-iteration flags and F values only.
inline json report_to_json(const ComparisonReport& rep)
{
    json j;
    j["start_class"] = classification_to_json(rep.start_class);
    j["start_mode"] = rep.supersolution_start ? "super" : "sub";
    j["isotonicity"] = json{{"isotone", rep.isotonicity.isotone},
                            {"method", rep.isotonicity.method},
                            {"detail", rep.isotonicity.detail}};
    j["report_only"] = rep.report_only;
    j["tolerances"] = json{{"dominance", rep.options.dominance_tol},
                           {"f_order", rep.options.f_tol},
                           {"classification", rep.options.class_tol},
                           {"descent", rep.options.descent_tol}};
    j["reference"] = json{{"x_star", to_json(rep.reference.x_star)},
                          {"f_star", rep.reference.f_star},
                          {"residual", rep.reference.residual},
                          {"iterations", rep.reference.iterations},
                          {"method", rep.reference.method},
                          {"cross_check_gap", rep.reference.cross_check_gap}};
    j["per_iteration"] = json::array();
    for (const auto& r : rep.per_iteration) {
        json c;
        c["k"] = r.k;
        c["F"] = json{{"gd", r.f[0]}, {"ccd", r.f[1]}, {"ccm", r.f[2]}};
        c["bound"] = std::isfinite(r.bound) ? json(r.bound) : json(nullptr);
        c["dominance_ok"] = r.dominance_ok;
        c["f_order_ok"] = r.f_order_ok;
        c["rate_ok"] = r.rate_ok;
        c["class_ok"] = r.class_ok;
        c["descent_ok"] = r.descent_ok;
        c["classes"] = json{{"gd", to_string(r.classes[0])},
                            {"ccd", to_string(r.classes[1])},
                            {"ccm", to_string(r.classes[2])}};
        j["per_iteration"].push_back(std::move(c));
    }
    j["overall"] = rep.overall;
    return j;
}

/// k,F_gd,F_ccd,F_ccm,bound,dominance_ok
inline std::string report_to_csv(const ComparisonReport& rep)
{
    std::ostringstream out;
    out << "k,F_gd,F_ccd,F_ccm,bound,dominance_ok\n";
    for (const auto& r : rep.per_iteration) {
        out << r.k << ',' << format_double(r.f[0]) << ',' << format_double(r.f[1]) << ','
            << format_double(r.f[2]) << ',' << format_double(r.bound) << ',' << (r.dominance_ok ? 1 : 0)
            << '\n';
    }
    return out.str();
}

} // namespace cdlab::io
