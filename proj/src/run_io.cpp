#include "parareal/run_io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>

#include "json.hpp"
#include "parareal/errors.hpp"

namespace parareal {

namespace {

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Aggregate group plus one group per component when the invariant is a vector.
std::vector<InvariantGroup> csv_groups(const SystemDefinition& sys, const PhasePoint& u0,
                                       const std::vector<std::string>& components) {
    std::vector<InvariantGroup> gs;
    if (components.empty()) return gs;
    gs.push_back(make_invariant_group(sys, u0, components, "L"));
    if (components.size() > 1)
        for (const auto& name : components)
            gs.push_back(make_invariant_group(sys, u0, {name}, name));
    return gs;
}

} // namespace

CsvSeriesSink::CsvSeriesSink(std::ostream& os, std::shared_ptr<const SystemDefinition> sys, double H0,
                             double window, std::vector<InvariantGroup> groups,
                             std::shared_ptr<const std::vector<PhasePoint>> reference)
    : os_(os), sys_(std::move(sys)), H0_(H0), window_(window), groups_(std::move(groups)),
      reference_(std::move(reference)) {
    os_ << "t,k,err_H,err_traj,err_L";
    for (std::size_t j = 1; j < groups_.size(); ++j) os_ << ",err_" << groups_[j].name;
    os_ << "\n";
}

void CsvSeriesSink::on_iteration(int k, std::span<const PhasePoint> states,
                                 std::span<const PhasePoint>, std::span<const WindowRecord>) {
    for (std::size_t n = 0; n < states.size(); ++n) {
        os_ << g17(n * window_) << "," << k << "," << g17(energy_error_value(*sys_, states[n], H0_));
        os_ << ",";
        if (reference_) os_ << g17(trajectory_error_value(states[n], (*reference_)[n]));
        for (std::size_t j = 0; j < groups_.size(); ++j)
            os_ << "," << g17(invariant_error_value(groups_[j], states[n]));
        if (groups_.empty()) os_ << ",";
        os_ << "\n";
    }
}

void write_states_csv(std::ostream& os, const std::vector<PhasePoint>& states, double window, int k) {
    if (states.empty()) return;
    const int d = states[0].dim();
    os << "t,k";
    for (int i = 0; i < d; ++i) os << ",q" << i + 1;
    for (int i = 0; i < d; ++i) os << ",p" << i + 1;
    os << "\n";
    for (std::size_t n = 0; n < states.size(); ++n) {
        os << g17(n * window) << "," << k;
        for (double v : states[n].q) os << "," << g17(v);
        for (double v : states[n].p) os << "," << g17(v);
        os << "\n";
    }
}

void write_summary_json(std::ostream& os, const BuiltExperiment& built, const PararealRun& run,
                        const SpeedupReport& report, const ErrorAccumulator& errors,
                        double floor, bool has_floor) {
    using nlohmann::json;
    json j;
    j["format"] = "parareal-run-summary v1";
    j["system"] = built.system->label;
    j["variant"] = to_string(built.exp.variant);
    j["grid"] = {{"fine_step", built.exp.fine_step},
                 {"coarse_step", built.exp.coarse_step},
                 {"window", built.exp.window},
                 {"horizon", built.exp.horizon},
                 {"windows", run.windows},
                 {"iterations", run.iterations}};
    j["workers"] = built.exp.workers;
    j["initial_energy"] = built.H0;

    if (variant_is_projected(built.exp.variant)) {
        auto stops = run.stop_counts();
        long long total = stops[0] + stops[1] + stops[2];
        j["projection"] = {
            {"tol", built.exp.tol},
            {"max_iter", built.exp.max_iter},
            {"stop_counts", {{"C1", stops[0]}, {"C2", stops[1]}, {"C3", stops[2]}}},
            {"stop_frequencies",
             {{"C1", total ? double(stops[0]) / total : 0.0},
              {"C2", total ? double(stops[1]) / total : 0.0},
              {"C3", total ? double(stops[2]) / total : 0.0}}},
            {"mean_iterations", run.mean_projection_iterations()},
        };
    }

    j["ledger"] = {{"grad_evals_fine", run.ledger.grad_evals_fine()},
                   {"grad_evals_coarse", run.ledger.grad_evals_coarse()},
                   {"grad_evals_projection", run.ledger.grad_evals_projection()},
                   {"per_iteration_critical_path", run.ledger.per_iteration_critical_path}};

    j["speedup"] = {{"regime", to_string(report.regime)},
                    {"predicted_cost", report.predicted_cost},
                    {"sequential_cost", report.sequential_cost},
                    {"speedup", report.speedup},
                    {"processors", report.processors}};

    auto maxima = [](const ErrorSeries& s) {
        std::vector<double> m;
        for (std::size_t k = 0; k < s.values.size(); ++k) m.push_back(s.max_at(static_cast<int>(k)));
        return m;
    };
    json err;
    err["max_err_H"] = maxima(errors.energy());
    if (errors.has_reference()) err["max_err_traj"] = maxima(errors.trajectory());
    for (const auto& s : errors.invariants()) err["max_" + s.kind] = maxima(s);
    if (has_floor) {
        err["floor"] = floor;
        if (errors.has_reference()) {
            int kconv = -1;
            const auto& traj = errors.trajectory();
            for (std::size_t k = 0; k < traj.values.size(); ++k)
                if (traj.max_at(static_cast<int>(k)) <= 2 * floor) {
                    kconv = static_cast<int>(k);
                    break;
                }
            err["k_convergence"] = kconv;
        }
    }
    j["errors"] = err;

    os << j.dump(2) << "\n";
}

namespace {

int fail_config(const std::string& msg, const std::string& out_dir, std::ostream& log) {
    nlohmann::json j{{"error", "config"}, {"message", msg}};
    log << j.dump() << "\n";
    if (!out_dir.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(out_dir, ec);
        std::ofstream os(out_dir + "/error.json");
        if (os) os << j.dump(2) << "\n";
    }
    return 2;
}

int fail_runtime(const std::string& kind, const std::string& msg, int window, int iteration,
                 const std::string& out_dir, std::ostream& log) {
    nlohmann::json j{{"error", kind}, {"message", msg}};
    if (window >= 0) j["window"] = window;
    if (iteration >= 0) j["iteration"] = iteration;
    log << j.dump() << "\n";
    if (!out_dir.empty()) {
        std::ofstream os(out_dir + "/error.json");
        if (os) os << j.dump(2) << "\n";
    }
    return 3;
}

ExperimentConfig load_with_overrides(const std::string& config_path, const CliOverrides& overrides) {
    ExperimentConfig exp = parse_config_file(config_path);
    if (overrides.workers) exp.workers = *overrides.workers;
    if (overrides.output) exp.output = *overrides.output;
    if (overrides.seed) exp.seed = *overrides.seed;
    if (exp.workers < 1) throw ConfigError("workers must be >= 1");
    return exp;
}

std::string default_cache_dir(const ExperimentConfig& exp) {
    return exp.cache_dir.empty() ? exp.output + "/cache" : exp.cache_dir;
}

} // namespace

int cmd_run(const std::string& config_path, const CliOverrides& overrides, std::ostream& log) {
    ExperimentConfig exp;
    BuiltExperiment built;
    try {
        exp = load_with_overrides(config_path, overrides);
        built = build_experiment(exp);
    } catch (const ConfigError& e) {
        return fail_config(e.what(), overrides.output.value_or(""), log);
    } catch (const Error& e) {
        return fail_config(e.what(), overrides.output.value_or(""), log);
    }

    RunPaths paths{exp.output};
    std::error_code ec;
    std::filesystem::create_directories(paths.dir, ec);
    if (!std::filesystem::is_directory(paths.dir))
        return fail_config("cannot create output directory " + paths.dir, "", log);

    try {
        const std::string cache = default_cache_dir(exp);

        std::shared_ptr<const std::vector<PhasePoint>> reference;
        double floor = 0;
        bool has_floor = false;
        if (exp.reference_enabled) {
            reference = std::make_shared<std::vector<PhasePoint>>(
                reference_trajectory(*built.system, built.u0, exp.fine_step, exp.horizon, exp.window,
                                     exp.reference_divisor, cache));
            auto fine = sequential_trajectory(*built.system, built.u0, exp.fine_step, exp.horizon,
                                              exp.window);
            floor = convergence_floor(fine, *reference);
            has_floor = true;
        }

        std::vector<InvariantGroup> groups =
            csv_groups(*built.system, built.u0, built.angular_momentum_components);

        std::ofstream series(paths.series_csv());
        if (!series) return fail_config("cannot write " + paths.series_csv(), paths.dir, log);
        CsvSeriesSink csv(series, built.system, built.H0, exp.window, groups, reference);

        std::vector<InvariantGroup> metric_groups;
        if (!groups.empty()) metric_groups.push_back(groups[0]);
        ErrorAccumulator errors(built.system, built.H0, exp.window, built.scheme.windows, metric_groups,
                                reference);

        FanoutSink fan;
        fan.add(&csv);
        fan.add(&errors);

        WindowExecutor exec(exp.workers);
        PararealRun run = run_parareal(built.scheme, built.u0, exec, fan);

        SpeedupReport report =
            predict_cost(built.scheme, built.scheme.iterations, run.mean_projection_iterations());

        {
            std::ofstream states(paths.states_csv());
            write_states_csv(states, run.final_states, exp.window, run.iterations);
        }
        {
            std::ofstream summary(paths.summary_json());
            write_summary_json(summary, built, run, report, errors, floor, has_floor);
        }
        {
            std::ofstream echo(paths.config_echo());
            echo << serialize_config(exp);
        }
        log << "run complete: " << paths.dir << "\n";
        return 0;
    } catch (const IntegrationBlowup& e) {
        return fail_runtime("integration_blowup", e.what(), e.window, e.iteration, paths.dir, log);
    } catch (const InversionFailure& e) {
        return fail_runtime("inversion_failure", e.what(), e.window, e.iteration, paths.dir, log);
    } catch (const DegenerateProjection& e) {
        return fail_runtime("degenerate_projection", e.what(), e.window, e.iteration, paths.dir, log);
    } catch (const ConfigError& e) {
        return fail_config(e.what(), paths.dir, log);
    } catch (const Error& e) {
        return fail_runtime("runtime", e.what(), -1, -1, paths.dir, log);
    }
}

int cmd_reference(const std::string& config_path, const CliOverrides& overrides, std::ostream& log) {
    try {
        ExperimentConfig exp = load_with_overrides(config_path, overrides);
        BuiltExperiment built = build_experiment(exp);
        const std::string cache = default_cache_dir(exp);
        if (resolve_cache_dir(cache).empty())
            throw ConfigError("no cache directory configured for the reference");
        reference_trajectory(*built.system, built.u0, exp.fine_step, exp.horizon, exp.window,
                             exp.reference_divisor, cache);
        log << "reference cached under " << resolve_cache_dir(cache) << "\n";
        return 0;
    } catch (const ConfigError& e) {
        return fail_config(e.what(), "", log);
    } catch (const Error& e) {
        return fail_runtime("runtime", e.what(), -1, -1, "", log);
    }
}

int cmd_report(const std::vector<std::string>& run_dirs, std::ostream& out) {
    using nlohmann::json;
    if (run_dirs.empty()) {
        out << "no run directories given\n";
        return 2;
    }
    std::vector<json> rows;
    for (const auto& dir : run_dirs) {
        std::ifstream in(dir + "/summary.json");
        if (!in) {
            out << "missing run artifact: " << dir << "/summary.json\n";
            return 2;
        }
        json j;
        try {
            in >> j;
        } catch (const std::exception& e) {
            out << "unreadable summary in " << dir << ": " << e.what() << "\n";
            return 2;
        }
        j["_dir"] = dir;
        rows.push_back(std::move(j));
    }

    out << "run,variant,system,K,tol,k_convergence,max_err_H_final,max_err_L_final,speedup\n";
    for (const auto& j : rows) {
        auto last_of = [&](const char* key) -> std::string {
            if (!j.contains("errors") || !j["errors"].contains(key)) return "";
            const auto& v = j["errors"][key];
            if (!v.is_array() || v.empty()) return "";
            return g17(v.back().get<double>());
        };
        out << j["_dir"].get<std::string>() << "," << j["variant"].get<std::string>() << ","
            << j["system"].get<std::string>() << "," << j["grid"]["iterations"].get<int>() << ",";
        if (j.contains("projection")) out << g17(j["projection"]["tol"].get<double>());
        out << ",";
        if (j["errors"].contains("k_convergence")) out << j["errors"]["k_convergence"].get<int>();
        out << "," << last_of("max_err_H") << "," << last_of("max_invariant:L") << ","
            << g17(j["speedup"]["speedup"].get<double>()) << "\n";
    }
    return 0;
}

} // namespace parareal
