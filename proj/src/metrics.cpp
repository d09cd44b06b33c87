#include "parareal/metrics.hpp"

#include <unistd.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "parareal/errors.hpp"

namespace parareal {

double energy_error_value(const SystemDefinition& sys, const PhasePoint& y, double H0, bool* absolute) {
    double dev = std::abs(eval_energy(sys, y) - H0);
    if (H0 == 0) {
        if (absolute) *absolute = true;
        return dev;
    }
    if (absolute) *absolute = false;
    return dev / std::abs(H0);
}

double trajectory_error_value(const PhasePoint& y, const PhasePoint& ref) {
    double dq = 0, dp = 0;
    for (std::size_t i = 0; i < y.q.size(); ++i) {
        double d = y.q[i] - ref.q[i];
        dq += d * d;
    }
    for (std::size_t i = 0; i < y.p.size(); ++i) {
        double d = y.p[i] - ref.p[i];
        dp += d * d;
    }
    return std::sqrt(dq) + std::sqrt(dp);
}

InvariantGroup make_invariant_group(const SystemDefinition& sys, const PhasePoint& u0,
                                    const std::vector<std::string>& component_names,
                                    const std::string& group_name) {
    InvariantGroup g;
    g.name = group_name;
    for (const auto& name : component_names) {
        const InvariantObservable* obs = sys.find_invariant(name);
        if (!obs) throw ConfigError("system has no invariant named " + name);
        g.components.push_back(obs);
        g.targets.push_back(obs->value(u0));
    }
    return g;
}

double invariant_error_value(const InvariantGroup& group, const PhasePoint& y, bool* absolute) {
    double dev2 = 0, ref2 = 0;
    for (std::size_t j = 0; j < group.components.size(); ++j) {
        double d = group.components[j]->value(y) - group.targets[j];
        dev2 += d * d;
        ref2 += group.targets[j] * group.targets[j];
    }
    if (ref2 == 0) {
        if (absolute) *absolute = true;
        return std::sqrt(dev2);
    }
    if (absolute) *absolute = false;
    return std::sqrt(dev2 / ref2);
}

std::vector<PhasePoint> sequential_trajectory(const SystemDefinition& sys, const PhasePoint& u0,
                                              double step, double horizon, double window,
                                              EvalTally* tally) {
    PropagatorSpec spec{step, window};
    int windows = static_cast<int>(std::llround(horizon / window));
    if (windows < 1 || std::abs(horizon - windows * window) > 1e-9 * std::abs(horizon))
        throw ConfigError("horizon must be a positive multiple of the window");
    spec.steps();

    std::vector<PhasePoint> out;
    out.reserve(windows + 1);
    out.push_back(u0);
    for (int n = 0; n < windows; ++n) out.push_back(propagate(sys, out.back(), spec, tally));
    return out;
}

std::string resolve_cache_dir(const std::string& requested) {
    if (const char* env = std::getenv("PARAREAL_CACHE_DIR"); env && *env) return env;
    return requested;
}

namespace {

std::string hex_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

std::string cache_manifest(const SystemDefinition& sys, const PhasePoint& u0, double step,
                           double horizon, double window, int divisor) {
    std::ostringstream os;
    os << "reference-cache v1 system=" << sys.label << " d=" << sys.dim;
    os << " step=" << hex_double(step) << " T=" << hex_double(horizon)
       << " window=" << hex_double(window) << " divisor=" << divisor << " u0=";
    for (double v : u0.q) os << hex_double(v) << ",";
    for (double v : u0.p) os << hex_double(v) << ",";
    return os.str();
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

} // namespace

std::vector<PhasePoint> reference_trajectory(const SystemDefinition& sys, const PhasePoint& u0,
                                             double fine_step, double horizon, double window,
                                             int divisor, const std::string& cache_dir) {
    if (divisor < 1) throw ConfigError("reference step divisor must be >= 1");
    const double step = fine_step / divisor;
    PropagatorSpec{step, window}.steps();  // divisibility check up front

    const std::string dir = resolve_cache_dir(cache_dir);
    std::string path;
    std::string manifest;
    if (!dir.empty()) {
        manifest = cache_manifest(sys, u0, fine_step, horizon, window, divisor);
        char name[64];
        std::snprintf(name, sizeof name, "ref_%016llx.txt",
                      static_cast<unsigned long long>(fnv1a(manifest)));
        path = dir + "/" + name;

        std::ifstream in(path);
        if (in) {
            std::string line;
            std::getline(in, line);
            if (line == manifest) {
                std::size_t count = 0;
                in >> count;
                std::vector<PhasePoint> out(count);
                for (auto& y : out) {
                    y.q.resize(sys.dim);
                    y.p.resize(sys.dim);
                    for (double& v : y.q) in >> v;
                    for (double& v : y.p) in >> v;
                }
                if (in) return out;
            }
            // stale or truncated cache entry: fall through and recompute
        }
    }

    std::vector<PhasePoint> out = sequential_trajectory(sys, u0, step, horizon, window);

    if (!path.empty()) {
        std::filesystem::create_directories(dir);
        std::string tmp = path + ".tmp." + std::to_string(static_cast<long>(::getpid()));
        std::ofstream os(tmp);
        os << manifest << "\n" << out.size() << "\n";
        for (const auto& y : out) {
            for (double v : y.q) os << hex_double(v) << " ";
            for (double v : y.p) os << hex_double(v) << " ";
            os << "\n";
        }
        os.close();
        std::error_code ec;
        std::filesystem::rename(tmp, path, ec);  // atomic enough for concurrent runs
    }
    return out;
}

double ErrorSeries::max_over(int k, double t_lo, double t_hi) const {
    double m = 0;
    const auto& row = values.at(k);
    for (std::size_t n = 0; n < row.size(); ++n)
        if (times[n] >= t_lo && times[n] <= t_hi) m = std::max(m, row[n]);
    return m;
}

ErrorAccumulator::ErrorAccumulator(std::shared_ptr<const SystemDefinition> sys, double H0, double window,
                                   int windows, std::vector<InvariantGroup> groups,
                                   std::shared_ptr<const std::vector<PhasePoint>> reference)
    : sys_(std::move(sys)), H0_(H0), groups_(std::move(groups)), reference_(std::move(reference)) {
    std::vector<double> times(windows + 1);
    for (int n = 0; n <= windows; ++n) times[n] = n * window;
    energy_.kind = "energy";
    energy_.times = times;
    trajectory_.kind = "trajectory";
    trajectory_.times = times;
    for (const auto& g : groups_) {
        ErrorSeries s;
        s.kind = "invariant:" + g.name;
        s.times = times;
        invariant_.push_back(std::move(s));
    }
    if (reference_ && reference_->size() != times.size())
        throw ConfigError("reference trajectory does not match the window grid");
}

void ErrorAccumulator::on_iteration(int k, std::span<const PhasePoint> states,
                                    std::span<const PhasePoint>, std::span<const WindowRecord>) {
    (void)k;
    std::vector<double> e(states.size()), t;
    bool abs_flag = false;
    for (std::size_t n = 0; n < states.size(); ++n) {
        bool a = false;
        e[n] = energy_error_value(*sys_, states[n], H0_, &a);
        abs_flag |= a;
    }
    energy_.values.push_back(std::move(e));
    energy_.absolute_fallback |= abs_flag;

    if (reference_) {
        t.resize(states.size());
        for (std::size_t n = 0; n < states.size(); ++n)
            t[n] = trajectory_error_value(states[n], (*reference_)[n]);
        trajectory_.values.push_back(std::move(t));
    }

    for (std::size_t j = 0; j < groups_.size(); ++j) {
        std::vector<double> v(states.size());
        bool a = false, any = false;
        for (std::size_t n = 0; n < states.size(); ++n) {
            v[n] = invariant_error_value(groups_[j], states[n], &a);
            any |= a;
        }
        invariant_[j].values.push_back(std::move(v));
        invariant_[j].absolute_fallback |= any;
    }
}

namespace {
template <class Fn>
ErrorSeries series_from_grid(const std::vector<std::vector<PhasePoint>>& grid, double window,
                             const std::string& kind, Fn&& fn) {
    ErrorSeries s;
    s.kind = kind;
    if (grid.empty()) return s;
    s.times.resize(grid[0].size());
    for (std::size_t n = 0; n < s.times.size(); ++n) s.times[n] = n * window;
    for (const auto& row : grid) {
        std::vector<double> v(row.size());
        for (std::size_t n = 0; n < row.size(); ++n) v[n] = fn(row[n], n);
        s.values.push_back(std::move(v));
    }
    return s;
}
} // namespace

ErrorSeries energy_error(const std::vector<std::vector<PhasePoint>>& grid, const SystemDefinition& sys,
                         double H0, double window) {
    return series_from_grid(grid, window, "energy",
                            [&](const PhasePoint& y, std::size_t) { return energy_error_value(sys, y, H0); });
}

ErrorSeries trajectory_error(const std::vector<std::vector<PhasePoint>>& grid,
                             const std::vector<PhasePoint>& reference, double window) {
    return series_from_grid(grid, window, "trajectory", [&](const PhasePoint& y, std::size_t n) {
        return trajectory_error_value(y, reference[n]);
    });
}

ErrorSeries invariant_error(const std::vector<std::vector<PhasePoint>>& grid, const InvariantGroup& group,
                            double window) {
    return series_from_grid(grid, window, "invariant:" + group.name,
                            [&](const PhasePoint& y, std::size_t) { return invariant_error_value(group, y); });
}

double convergence_floor(const std::vector<PhasePoint>& fine, const std::vector<PhasePoint>& reference) {
    if (fine.size() != reference.size())
        throw ConfigError("fine and reference trajectories differ in length");
    double m = 0;
    for (std::size_t n = 0; n < fine.size(); ++n)
        m = std::max(m, trajectory_error_value(fine[n], reference[n]));
    return m;
}

} // namespace parareal
