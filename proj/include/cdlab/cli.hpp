#pragma once

#include <cdlab/core_model.hpp>
#include <cdlab/io.hpp>
#include <cdlab/operators.hpp>
#include <cdlab/solvers.hpp>
#include <cdlab/verification.hpp>

#include "CLI11.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace cdlab::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kPrecondition = 2 };

/// Reads --config files written as a JSON object. Keys are long option names
/// without dashes ("iters", "start", ...) and apply to `section` (the
/// subcommand being run); arrays give multiple values and a nested object
/// applies to the subcommand of that name.
class JsonConfig : public CLI::Config {
  public:
    std::string section;

    std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override
    {
        nlohmann::json j = nlohmann::json::object();
        for (const CLI::Option* opt : app->get_options()) {
            if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
            const std::string name = opt->get_lnames().front();
            if (opt->count() > 0) {
                const auto& res = opt->results();
                j[name] = res.size() == 1 ? nlohmann::json(res.front()) : nlohmann::json(res);
            } else if (default_also && !opt->get_default_str().empty()) {
                j[name] = opt->get_default_str();
            }
        }
        return j.dump(2) + "\n";
    }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override
    {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(input);
        } catch (const nlohmann::json::exception& e) {
            throw CLI::ConversionError(std::string("config is not valid JSON: ") + e.what());
        }
        if (!j.is_object()) throw CLI::ConversionError("config must be a JSON object");
        std::vector<CLI::ConfigItem> items;
        collect(j, section.empty() ? std::vector<std::string>{} : std::vector<std::string>{section}, items);
        return items;
    }

  private:
    static std::string scalar(const nlohmann::json& v)
    {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
        if (v.is_number_integer()) return std::to_string(v.get<long long>());
        if (v.is_number()) return io::format_double(v.get<double>());
        throw CLI::ConversionError("config values must be scalars or arrays of scalars");
    }

    static void collect(const nlohmann::json& obj, const std::vector<std::string>& parents,
                        std::vector<CLI::ConfigItem>& items)
    {
        for (const auto& [key, value] : obj.items()) {
            if (value.is_object()) {
                collect(value, {key}, items);
                continue;
            }
            CLI::ConfigItem item;
            item.parents = parents;
            item.name = key;
            if (value.is_array()) {
                for (const auto& v : value) item.inputs.push_back(scalar(v));
            } else {
                item.inputs.push_back(scalar(value));
            }
            items.push_back(std::move(item));
        }
    }
};

/// Where the problem comes from: a JSON file or the Z-matrix generator.
struct ProblemSource {
    std::string path;
    Index dim = 5;
    std::uint64_t seed = 0;
    double density = 0.5;

    ProblemSpec load() const
    {
        if (!path.empty()) return io::load_problem(path);
        return gen_zmatrix_quadratic(dim, seed, density);
    }
};

struct StartSpec {
    std::string mode = "super"; // super | sub | zero | given
    std::vector<double> x0;
    std::uint64_t seed = 0;

    Vec resolve(const ProblemSpec& p) const
    {
        if (mode == "super") return find_supersolution(p, seed);
        if (mode == "sub") return find_subsolution(p, seed);
        if (mode == "zero") return Vec::Zero(p.dim());
        if (mode == "given") {
            if (static_cast<Index>(x0.size()) != p.dim()) {
                throw PreconditionError("--x0 must have " + std::to_string(p.dim()) + " entries");
            }
            return Eigen::Map<const Vec>(x0.data(), static_cast<Index>(x0.size()));
        }
        throw PreconditionError("unknown start mode '" + mode + "'");
    }
};

namespace detail {

inline void add_problem_options(CLI::App& cmd, ProblemSource& src)
{
    cmd.add_option("--problem", src.path, "Problem JSON file")->check(CLI::ExistingFile);
    cmd.add_option("--dim", src.dim, "Generated Z-matrix instance: dimension")->check(CLI::PositiveNumber);
    cmd.add_option("--seed", src.seed, "Generated instance and start search: seed");
    cmd.add_option("--density", src.density, "Generated instance: off-diagonal density")
        ->check(CLI::Range(0.0, 1.0));
}

inline void add_start_options(CLI::App& cmd, StartSpec& start)
{
    cmd.add_option("--start", start.mode, "Start point: super | sub | zero | given")
        ->check(CLI::IsMember({"super", "sub", "zero", "given"}));
    cmd.add_option("--x0", start.x0, "Start vector for --start given")->delimiter(',');
}

} // namespace detail

/// Parses and runs one command line. `args[0]` is the program name.
inline int main(const std::vector<std::string>& args, std::ostream& out = std::cout,
                std::ostream& err = std::cerr)
{
    CLI::App app{"Coordinate descent laboratory: GD, CCD and CCM for l1-regularized problems"};
    app.require_subcommand(1);
    app.fallthrough();
    auto json_cfg = std::make_shared<JsonConfig>();
    if (args.size() > 1) json_cfg->section = args[1];
    app.set_config("--config", "", "JSON config file; keys are long option names");
    app.config_formatter(json_cfg);

    // gen
    std::string gen_kind = "zmatrix";
    Index gen_dim = 5;
    std::uint64_t gen_seed = 0;
    double gen_density = 0.5;
    std::optional<double> gen_lambda;
    std::string gen_csv;
    Index gen_samples = 50;
    std::string gen_out = "problem.json";
    auto* gen = app.add_subcommand("gen", "Generate a problem file");
    gen->add_option("--kind", gen_kind, "zmatrix | lasso | logistic | negative-control")
        ->check(CLI::IsMember({"zmatrix", "lasso", "logistic", "negative-control"}));
    gen->add_option("--dim", gen_dim, "Dimension")->check(CLI::PositiveNumber);
    gen->add_option("--seed", gen_seed, "Generator seed");
    gen->add_option("--density", gen_density, "Z-matrix off-diagonal density")->check(CLI::Range(0.0, 1.0));
    gen->add_option("--lambda", gen_lambda, "l1 weight (required for lasso)")->check(CLI::NonNegativeNumber);
    gen->add_option("--csv", gen_csv, "Lasso data: CSV whose last column is Y")->check(CLI::ExistingFile);
    gen->add_option("--samples", gen_samples, "Logistic: number of samples")->check(CLI::PositiveNumber);
    gen->add_option("--out", gen_out, "Output problem JSON");

    // run
    ProblemSource run_src;
    StartSpec run_start;
    run_start.mode = "zero";
    std::string run_alg = "all";
    long run_iters = 100;
    double run_stop = 0.0;
    bool run_inner = false;
    std::string run_out = "trace";
    auto* runc = app.add_subcommand("run", "Run solvers and write traces");
    detail::add_problem_options(*runc, run_src);
    detail::add_start_options(*runc, run_start);
    runc->add_option("--alg", run_alg, "gd | ccd | ccm | all")->check(CLI::IsMember({"gd", "ccd", "ccm", "all"}));
    runc->add_option("--iters", run_iters, "Outer iterations K")->check(CLI::PositiveNumber);
    runc->add_option("--stop-residual", run_stop, "Stop at this optimality residual")
        ->check(CLI::NonNegativeNumber);
    runc->add_flag("--record-inner", run_inner, "Record inner iterates");
    runc->add_option("--out", run_out, "Output prefix; writes <prefix>_<alg>.csv/.json");

    // verify
    ProblemSource ver_src;
    StartSpec ver_start;
    long ver_iters = 100;
    ComparisonOptions ver_opt;
    std::string ver_out = "report";
    auto* ver = app.add_subcommand("verify", "Three-way comparison from a common super/subsolution");
    detail::add_problem_options(*ver, ver_src);
    ver->add_option("--start", ver_start.mode, "super | sub")->check(CLI::IsMember({"super", "sub"}));
    ver->add_option("--iters", ver_iters, "Outer iterations K")->check(CLI::PositiveNumber);
    ver->add_option("--tol", ver_opt.dominance_tol, "Dominance tolerance (scaled by 1+||.||_inf)")
        ->check(CLI::NonNegativeNumber);
    ver->add_option("--f-tol", ver_opt.f_tol, "F-ordering and rate tolerance (scaled by 1+|F*|)")
        ->check(CLI::NonNegativeNumber);
    ver->add_flag("--report-only", ver_opt.report_only, "Run without the isotonicity precondition");
    ver->add_option("--out", ver_out, "Output prefix; writes <prefix>.json and <prefix>.csv");

    // classify
    ProblemSource cls_src;
    StartSpec cls_start;
    cls_start.mode = "given";
    double cls_tol = 1e-10;
    auto* cls = app.add_subcommand("classify", "Classify a point as super/sub/exact/neither");
    detail::add_problem_options(*cls, cls_src);
    detail::add_start_options(*cls, cls_start);
    cls->add_option("--tol", cls_tol, "Slack tolerance")->check(CLI::NonNegativeNumber);

    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kPrecondition;
    }

    try {
        if (gen->parsed()) {
            std::optional<ProblemSpec> p;
            if (gen_kind == "zmatrix") {
                p.emplace(gen_zmatrix_quadratic(gen_dim, gen_seed, gen_density));
                if (gen_lambda) p.emplace(p->smooth(), *gen_lambda, p->lipschitz());
            } else if (gen_kind == "lasso") {
                if (gen_csv.empty() || !gen_lambda) {
                    throw PreconditionError("gen --kind lasso needs --csv and --lambda");
                }
                const Mat data = io::load_csv(gen_csv);
                if (data.cols() < 2) throw PreconditionError("lasso csv needs at least two columns");
                const Index d = data.cols() - 1;
                p.emplace(lasso_build(data.leftCols(d), data.col(d), *gen_lambda));
            } else if (gen_kind == "logistic") {
                p.emplace(gen_logistic_data(gen_samples, gen_dim, gen_seed), gen_lambda.value_or(0.1));
            } else {
                Mat a(2, 2);
                a << 2.0, 1.0, 1.0, 2.0;
                p.emplace(QuadraticForm(a, Vec::Constant(2, -1.0)), gen_lambda.value_or(0.1));
            }
            io::save_problem(gen_out, *p);
            const auto v = verify_isotonicity(*p, 1000, gen_seed);
            out << "wrote " << gen_out << " (dim " << p->dim() << ")\n";
            out << "isotonicity: " << (v.isotone ? "pass" : "fail") << " (" << v.method << ", " << v.detail
                << ")\n";
            return kOk;
        }

        if (runc->parsed()) {
            const ProblemSpec p = run_src.load();
            run_start.seed = run_src.seed;
            const Vec x0 = run_start.resolve(p);
            SolverConfig cfg;
            cfg.max_outer_iters = run_iters;
            cfg.stop_residual = run_stop;
            cfg.record_inner = run_inner;
            std::vector<Algorithm> algs;
            if (run_alg == "all") {
                algs = {Algorithm::GD, Algorithm::CCD, Algorithm::CCM};
            } else {
                algs = {parse_algorithm(run_alg)};
            }
            bool descent = true;
            for (Algorithm a : algs) {
                const Trace tr = run(a, p, x0, cfg);
                const std::string base = run_out + "_" + std::string(to_string(a));
                io::write_file(base + ".csv", io::trace_to_csv(tr));
                io::write_file(base + ".json", io::trace_to_json(tr).dump(2) + "\n");
                const auto bad = first_ascent(tr);
                if (bad) {
                    descent = false;
                    err << to_string(a) << ": F increased at iteration " << *bad << '\n';
                }
                out << to_string(a) << ": " << tr.outer_iterations() << " iterations, F = "
                    << io::format_double(tr.f_values.back()) << ", residual = "
                    << io::format_double(tr.residuals.back()) << " -> " << base << ".csv\n";
            }
            return descent ? kOk : kFailure;
        }

        if (ver->parsed()) {
            const ProblemSpec p = ver_src.load();
            ver_start.seed = ver_src.seed;
            ver_opt.seed = ver_src.seed;
            const Vec x0 = ver_start.resolve(p);
            const ComparisonReport rep = run_comparison(p, x0, ver_iters, ver_opt);
            io::write_file(ver_out + ".json", io::report_to_json(rep).dump(2) + "\n");
            io::write_file(ver_out + ".csv", io::report_to_csv(rep));
            out << "verdict: " << (rep.overall ? "true" : "false") << (rep.report_only ? " (report only)" : "")
                << " over " << ver_iters << " iterations -> " << ver_out << ".json\n";
            return rep.overall ? kOk : kFailure;
        }

        if (cls->parsed()) {
            const ProblemSpec p = cls_src.load();
            cls_start.seed = cls_src.seed;
            const Vec x = cls_start.resolve(p);
            auto j = io::classification_to_json(classify_point(p, x, cls_tol));
            j["x"] = io::to_json(x);
            j["residual"] = optimality_residual(p, x);
            out << j.dump(2) << '\n';
            return kOk;
        }
    } catch (const PreconditionError& e) {
        err << "precondition failed: " << e.what() << '\n';
        return kPrecondition;
    } catch (const io::IoError& e) {
        err << "input error: " << e.what() << '\n';
        return kPrecondition;
    } catch (const DomainError& e) {
        err << "invalid parameter: " << e.what() << '\n';
        return kPrecondition;
    } catch (const DimensionError& e) {
        err << "invalid input: " << e.what() << '\n';
        return kPrecondition;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kFailure;
}

} // namespace cdlab::cli
