#include "parareal/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "parareal/errors.hpp"

namespace parareal {

namespace {

struct KeyValues {
    std::map<std::string, std::string> kv;
    std::string origin;
    mutable std::map<std::string, bool> used;

    bool has(const std::string& key) const { return kv.count(key) != 0; }

    const std::string* find(const std::string& key) const {
        auto it = kv.find(key);
        if (it == kv.end()) return nullptr;
        used[key] = true;
        return &it->second;
    }

    template <class T>
    T get(const std::string& key, T fallback) const;

    void check_all_used() const {
        for (const auto& [k, v] : kv)
            if (!used.count(k)) throw ConfigError(origin + ": unknown key: " + k);
    }
};

double to_double(const std::string& s, const std::string& key) {
    std::istringstream is(s);
    double v;
    if (!(is >> v)) throw ConfigError("bad numeric value for " + key + ": " + s);
    std::string rest;
    if (is >> rest) throw ConfigError("trailing junk for " + key + ": " + s);
    return v;
}

template <>
double KeyValues::get<double>(const std::string& key, double fallback) const {
    const std::string* s = find(key);
    return s ? to_double(*s, key) : fallback;
}

template <>
int KeyValues::get<int>(const std::string& key, int fallback) const {
    const std::string* s = find(key);
    if (!s) return fallback;
    double v = to_double(*s, key);
    int i = static_cast<int>(std::llround(v));
    if (std::abs(v - i) > 1e-9) throw ConfigError(key + " must be an integer");
    return i;
}

template <>
unsigned long long KeyValues::get<unsigned long long>(const std::string& key,
                                                      unsigned long long fallback) const {
    const std::string* s = find(key);
    if (!s) return fallback;
    return std::stoull(*s);
}

template <>
std::string KeyValues::get<std::string>(const std::string& key, std::string fallback) const {
    const std::string* s = find(key);
    return s ? *s : fallback;
}

template <>
bool KeyValues::get<bool>(const std::string& key, bool fallback) const {
    const std::string* s = find(key);
    if (!s) return fallback;
    if (*s == "true" || *s == "1" || *s == "yes" || *s == "on") return true;
    if (*s == "false" || *s == "0" || *s == "no" || *s == "off") return false;
    throw ConfigError("bad boolean for " + key + ": " + *s);
}

Vec parse_vec(const std::string& s, const std::string& key) {
    std::istringstream is(s);
    Vec v;
    double x;
    while (is >> x) v.push_back(x);
    if (v.empty()) throw ConfigError("expected numbers for " + key);
    return v;
}

std::vector<std::string> parse_words(const std::string& s) {
    std::istringstream is(s);
    std::vector<std::string> out;
    std::string w;
    while (is >> w) out.push_back(w);
    return out;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

KeyValues tokenize(const std::string& text, const std::string& origin) {
    KeyValues out;
    out.origin = origin;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
        if (!section.empty()) key = section + "." + key;
        if (out.kv.count(key))
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key " + key);
        out.kv[key] = val;
    }
    return out;
}

} // namespace

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
    KeyValues kv = tokenize(text, origin);
    ExperimentConfig c;

    c.kind = system_kind_from_string(kv.get<std::string>("system.kind", "harmonic"));
    c.omega = kv.get<double>("system.omega", c.omega);
    c.alpha = kv.get<double>("system.alpha", c.alpha);
    c.eccentricity = kv.get<double>("system.eccentricity", c.eccentricity);
    c.data_file = kv.get<std::string>("system.data_file", c.data_file);
    if (const std::string* s = kv.find("system.q0")) c.q0 = parse_vec(*s, "system.q0");
    if (const std::string* s = kv.find("system.p0")) c.p0 = parse_vec(*s, "system.p0");

    std::string coarse = kv.get<std::string>("coarse.dynamics", "same");
    if (coarse == "simplified")
        c.coarse_simplified = true;
    else if (coarse != "same")
        throw ConfigError("coarse.dynamics must be 'same' or 'simplified'");

    c.fine_step = kv.get<double>("grid.fine_step", c.fine_step);
    c.coarse_step = kv.get<double>("grid.coarse_step", c.coarse_step);
    c.window = kv.get<double>("grid.window", c.window);
    c.horizon = kv.get<double>("grid.horizon", c.horizon);
    c.iterations = kv.get<int>("grid.iterations", c.iterations);

    c.variant = variant_from_string(kv.get<std::string>("variant.name", "plain"));

    c.tol = kv.get<double>("projection.tol", c.tol);
    c.max_iter = kv.get<int>("projection.max_iter", c.max_iter);
    if (const std::string* s = kv.find("projection.invariants")) c.invariants = parse_words(*s);
    c.warm_start = kv.get<bool>("projection.warm_start", c.warm_start);

    if (const std::string* s = kv.find("schedule.values")) {
        Vec v = parse_vec(*s, "schedule.values");
        c.schedule_values.assign(v.begin(), v.end());
    }

    c.reference_enabled = kv.get<bool>("reference.enabled", c.reference_enabled);
    c.reference_divisor = kv.get<int>("reference.divisor", c.reference_divisor);

    c.workers = kv.get<int>("run.workers", c.workers);
    c.output = kv.get<std::string>("run.output", c.output);
    c.seed = kv.get<unsigned long long>("run.seed", c.seed);
    c.cache_dir = kv.get<std::string>("run.cache_dir", c.cache_dir);

    kv.check_all_used();
    return c;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path);
}

namespace {
std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}
std::string fmt(const Vec& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += " ";
        s += fmt(v[i]);
    }
    return s;
}
} // namespace

std::string serialize_config(const ExperimentConfig& c) {
    std::ostringstream os;
    os << "[system]\n";
    os << "kind = " << to_string(c.kind) << "\n";
    os << "omega = " << fmt(c.omega) << "\n";
    os << "alpha = " << fmt(c.alpha) << "\n";
    os << "eccentricity = " << fmt(c.eccentricity) << "\n";
    if (!c.data_file.empty()) os << "data_file = " << c.data_file << "\n";
    if (c.q0) os << "q0 = " << fmt(*c.q0) << "\n";
    if (c.p0) os << "p0 = " << fmt(*c.p0) << "\n";
    os << "\n[coarse]\n";
    os << "dynamics = " << (c.coarse_simplified ? "simplified" : "same") << "\n";
    os << "\n[grid]\n";
    os << "fine_step = " << fmt(c.fine_step) << "\n";
    os << "coarse_step = " << fmt(c.coarse_step) << "\n";
    os << "window = " << fmt(c.window) << "\n";
    os << "horizon = " << fmt(c.horizon) << "\n";
    os << "iterations = " << c.iterations << "\n";
    os << "\n[variant]\n";
    os << "name = " << to_string(c.variant) << "\n";
    os << "\n[projection]\n";
    os << "tol = " << fmt(c.tol) << "\n";
    os << "max_iter = " << c.max_iter << "\n";
    {
        os << "invariants =";
        for (const auto& s : c.invariants) os << " " << s;
        os << "\n";
    }
    os << "warm_start = " << (c.warm_start ? "true" : "false") << "\n";
    if (!c.schedule_values.empty()) {
        os << "\n[schedule]\n";
        os << "values = " << fmt(Vec(c.schedule_values.begin(), c.schedule_values.end())) << "\n";
    }
    os << "\n[reference]\n";
    os << "enabled = " << (c.reference_enabled ? "true" : "false") << "\n";
    os << "divisor = " << c.reference_divisor << "\n";
    os << "\n[run]\n";
    os << "workers = " << c.workers << "\n";
    os << "output = " << c.output << "\n";
    os << "seed = " << c.seed << "\n";
    if (!c.cache_dir.empty()) os << "cache_dir = " << c.cache_dir << "\n";
    return os.str();
}

bool semantically_equal(const ExperimentConfig& a, const ExperimentConfig& b) {
    return a.kind == b.kind && a.omega == b.omega && a.alpha == b.alpha &&
           a.eccentricity == b.eccentricity && a.data_file == b.data_file && a.q0 == b.q0 &&
           a.p0 == b.p0 && a.coarse_simplified == b.coarse_simplified && a.fine_step == b.fine_step &&
           a.coarse_step == b.coarse_step && a.window == b.window && a.horizon == b.horizon &&
           a.iterations == b.iterations && a.variant == b.variant && a.tol == b.tol &&
           a.max_iter == b.max_iter && a.invariants == b.invariants && a.warm_start == b.warm_start &&
           a.schedule_values == b.schedule_values && a.reference_enabled == b.reference_enabled &&
           a.reference_divisor == b.reference_divisor && a.workers == b.workers &&
           a.output == b.output && a.seed == b.seed && a.cache_dir == b.cache_dir;
}

BuiltExperiment build_experiment(const ExperimentConfig& exp) {
    BuiltExperiment b;
    b.exp = exp;

    SystemParams params;
    params.omega = exp.omega;
    params.alpha = exp.alpha;
    params.data_file = exp.data_file;

    auto sys = std::make_shared<SystemDefinition>(build_system(exp.kind, params));
    b.system = sys;

    // Initial condition: explicit override, else the per-system default.
    if (exp.q0.has_value() != exp.p0.has_value())
        throw ConfigError("q0 and p0 must be given together");
    if (exp.q0) {
        if (static_cast<int>(exp.q0->size()) != sys->dim || exp.p0->size() != exp.q0->size())
            throw ConfigError("q0/p0 dimension does not match the system");
        b.u0 = PhasePoint(*exp.q0, *exp.p0);
    } else {
        switch (exp.kind) {
            case SystemKind::Harmonic: b.u0 = harmonic_initial_state(); break;
            case SystemKind::Kepler: b.u0 = kepler_initial_state(exp.eccentricity); break;
            case SystemKind::SolarFull:
            case SystemKind::SolarSimplified:
                b.u0 = solar_initial_state(load_solar_data(exp.data_file));
                break;
        }
    }
    b.H0 = eval_energy(*sys, b.u0);

    PararealConfig& pc = b.scheme;
    pc.system = sys;
    if (exp.coarse_simplified) {
        if (exp.kind != SystemKind::SolarFull)
            throw ConfigError("simplified coarse dynamics is only defined for solar_full");
        pc.coarse_system =
            std::make_shared<SystemDefinition>(make_solar_simplified(load_solar_data(exp.data_file)));
    }
    pc.horizon = exp.horizon;
    pc.window = exp.window;
    pc.windows = static_cast<int>(std::llround(exp.horizon / exp.window));
    pc.iterations = exp.iterations;
    pc.fine = PropagatorSpec{exp.fine_step, exp.window};
    pc.coarse = PropagatorSpec{exp.coarse_step, exp.window};
    pc.variant = exp.variant;
    pc.warm_start_mu = exp.warm_start;

    if (variant_is_projected(exp.variant)) {
        ManifoldSpec m;
        for (const auto& name : exp.invariants) {
            const InvariantObservable* obs = sys->find_invariant(name);
            if (!obs) throw ConfigError("projection invariant not defined by the system: " + name);
            m.observables.push_back(*obs);
            m.targets.push_back(obs->value(b.u0));
        }
        ProjectionConfig p;
        p.tol = exp.tol;
        p.max_iter = exp.max_iter;
        p.mode = exp.variant == Variant::PlainProjected         ? ProjectionMode::Standard
                 : exp.variant == Variant::SymmetricSymProjected ? ProjectionMode::Symmetric
                                                                 : ProjectionMode::QuasiSymmetric;
        pc.manifold = std::move(m);
        pc.projection = p;
    }

    if (exp.variant == Variant::SymmetricPerturbed) {
        PerturbationSchedule sched;
        sched.values = exp.schedule_values;
        sched.exact_value = exp.kind == SystemKind::Harmonic ? exp.omega : exp.alpha;
        pc.schedule = sched;
        for (double v : exp.schedule_values) {
            SystemParams sp = params;
            if (exp.kind == SystemKind::Harmonic)
                sp.omega = v;
            else if (exp.kind == SystemKind::Kepler)
                sp.alpha = v;
            else
                throw ConfigError("the perturbed variant is defined for harmonic and kepler systems");
            pc.schedule_systems.push_back(std::make_shared<SystemDefinition>(build_system(exp.kind, sp)));
        }
    }

    if (sys->find_invariant("angular_momentum"))
        b.angular_momentum_components = {"angular_momentum"};
    else if (sys->find_invariant("angular_momentum_x"))
        b.angular_momentum_components = {"angular_momentum_x", "angular_momentum_y",
                                         "angular_momentum_z"};

    pc.validate();
    return b;
}

} // namespace parareal
