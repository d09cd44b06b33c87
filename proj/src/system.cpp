#include "parareal/system.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace parareal {

void PerturbationSchedule::validate() const {
    if (values.empty())
        throw ConfigError("perturbation schedule is empty");
    if (values.back() != exact_value)
        throw ConfigError("perturbation schedule must end at the exact value");
    for (double v : values)
        if (!(v > 0))
            throw ConfigError("perturbation schedule entries must be positive");
}

const InvariantObservable* SystemDefinition::find_invariant(std::string_view name) const {
    for (const auto& inv : invariants)
        if (inv.name == name) return &inv;
    return nullptr;
}

double eval_energy(const SystemDefinition& sys, const PhasePoint& y) {
    double kin = 0;
    for (int i = 0; i < sys.dim; ++i)
        kin += y.p[i] * y.p[i] / sys.mass_diag[i];
    return 0.5 * kin + sys.potential(y.q);
}

Vec eval_grad_H(const SystemDefinition& sys, const PhasePoint& y) {
    Vec g(2 * sys.dim);
    Vec gq(sys.dim);
    sys.potential_grad(y.q, gq);
    for (int i = 0; i < sys.dim; ++i) {
        g[i] = gq[i];
        g[sys.dim + i] = y.p[i] / sys.mass_diag[i];
    }
    return g;
}

namespace {

InvariantObservable energy_observable(const SystemDefinition& sys) {
    // Capture the evaluators by value so the observable does not dangle when
    // the SystemDefinition is copied.
    auto pot = sys.potential;
    auto grad = sys.potential_grad;
    Vec mass = sys.mass_diag;
    int d = sys.dim;
    InvariantObservable obs;
    obs.name = "energy";
    obs.value = [pot, mass, d](const PhasePoint& y) {
        double kin = 0;
        for (int i = 0; i < d; ++i) kin += y.p[i] * y.p[i] / mass[i];
        return 0.5 * kin + pot(y.q);
    };
    obs.gradient = [grad, mass, d](const PhasePoint& y) {
        Vec g(2 * d);
        Vec gq(d);
        grad(y.q, gq);
        for (int i = 0; i < d; ++i) {
            g[i] = gq[i];
            g[d + i] = y.p[i] / mass[i];
        }
        return g;
    };
    return obs;
}

} // namespace

SystemDefinition make_harmonic(double omega) {
    if (!(omega > 0)) throw ConfigError("harmonic oscillator needs omega > 0");
    SystemDefinition sys;
    sys.dim = 1;
    sys.mass_diag = {1.0};
    {
        char buf[64];
        std::snprintf(buf, sizeof buf, "harmonic(omega=%.17g)", omega);
        sys.label = buf;
    }
    const double w2 = omega * omega;
    sys.potential = [w2](const Vec& q) { return 0.5 * w2 * q[0] * q[0]; };
    sys.potential_grad = [w2](const Vec& q, Vec& g) { g[0] = w2 * q[0]; };
    sys.invariants.push_back(energy_observable(sys));
    return sys;
}

SystemDefinition make_kepler(double alpha) {
    if (!(alpha > 0)) throw ConfigError("Kepler problem needs alpha > 0");
    SystemDefinition sys;
    sys.dim = 2;
    sys.mass_diag = {1.0, 1.0};
    {
        char buf[64];
        std::snprintf(buf, sizeof buf, "kepler(alpha=%.17g)", alpha);
        sys.label = buf;
    }
    sys.potential = [alpha](const Vec& q) {
        double r2 = q[0] * q[0] + q[1] * q[1];
        if (r2 <= 0) throw SingularityError("Kepler potential at q = 0");
        return -alpha / std::sqrt(r2);
    };
    sys.potential_grad = [alpha](const Vec& q, Vec& g) {
        double r2 = q[0] * q[0] + q[1] * q[1];
        if (r2 <= 0) throw SingularityError("Kepler gradient at q = 0");
        double r = std::sqrt(r2);
        double c = alpha / (r2 * r);
        g[0] = c * q[0];
        g[1] = c * q[1];
    };
    sys.invariants.push_back(energy_observable(sys));

    InvariantObservable L;
    L.name = "angular_momentum";
    L.value = [](const PhasePoint& y) { return y.q[0] * y.p[1] - y.q[1] * y.p[0]; };
    L.gradient = [](const PhasePoint& y) {
        return Vec{y.p[1], -y.p[0], -y.q[1], y.q[0]};
    };
    sys.invariants.push_back(L);

    // Runge-Lenz vector A = p x L - q/|q|; |A| equals the eccentricity.
    // Never a projection target, only reported.
    InvariantObservable A1;
    A1.name = "runge_lenz_1";
    A1.value = [](const PhasePoint& y) {
        double ell = y.q[0] * y.p[1] - y.q[1] * y.p[0];
        double r = std::sqrt(y.q[0] * y.q[0] + y.q[1] * y.q[1]);
        return y.p[1] * ell - y.q[0] / r;
    };
    A1.gradient = [](const PhasePoint& y) {
        double q0 = y.q[0], q1 = y.q[1], p0 = y.p[0], p1 = y.p[1];
        double r2 = q0 * q0 + q1 * q1;
        double r3 = r2 * std::sqrt(r2);
        double ell = q0 * p1 - q1 * p0;
        return Vec{p1 * p1 - q1 * q1 / r3, -p0 * p1 + q0 * q1 / r3,
                   -p1 * q1, ell + p1 * q0};
    };
    sys.invariants.push_back(A1);

    InvariantObservable A2;
    A2.name = "runge_lenz_2";
    A2.value = [](const PhasePoint& y) {
        double ell = y.q[0] * y.p[1] - y.q[1] * y.p[0];
        double r = std::sqrt(y.q[0] * y.q[0] + y.q[1] * y.q[1]);
        return -y.p[0] * ell - y.q[1] / r;
    };
    A2.gradient = [](const PhasePoint& y) {
        double q0 = y.q[0], q1 = y.q[1], p0 = y.p[0], p1 = y.p[1];
        double r2 = q0 * q0 + q1 * q1;
        double r3 = r2 * std::sqrt(r2);
        double ell = q0 * p1 - q1 * p0;
        return Vec{-p0 * p1 + q0 * q1 / r3, p0 * p0 - q0 * q0 / r3,
                   -ell + p0 * q1, -p0 * q0};
    };
    sys.invariants.push_back(A2);
    return sys;
}

PhasePoint harmonic_initial_state() { return PhasePoint({1.0}, {0.0}); }

PhasePoint kepler_initial_state(double eccentricity) {
    if (!(eccentricity >= 0 && eccentricity < 1))
        throw ConfigError("Kepler eccentricity must be in [0, 1)");
    double e = eccentricity;
    return PhasePoint({1.0 - e, 0.0}, {0.0, std::sqrt((1.0 + e) / (1.0 - e))});
}

// ---- outer solar system ----------------------------------------------------

SolarData load_solar_data(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open solar system data file: " + path);

    SolarData data;
    std::array<bool, kSolarBodies> have_mass{}, have_q{}, have_p{};
    bool have_G = false;

    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            // blank or comment-only line
            std::istringstream rest(line);
            std::string tok;
            if (rest >> tok)
                throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
            continue;
        }
        std::string key = line.substr(0, eq);
        std::string val = line.substr(eq + 1);
        std::istringstream ks(key);
        ks >> key;

        std::istringstream vs(val);
        if (key == "G") {
            if (!(vs >> data.G)) throw ConfigError(path + ": bad value for G");
            have_G = true;
            continue;
        }
        int idx = 0;
        char field[8] = {0};
        if (std::sscanf(key.c_str(), "body.%d.%7s", &idx, field) == 2) {
            if (idx < 1 || idx > kSolarBodies)
                throw ConfigError(path + ": body index out of range: " + key);
            int i = idx - 1;
            std::string f(field);
            if (f == "mass") {
                if (!(vs >> data.mass[i])) throw ConfigError(path + ": bad mass for " + key);
                have_mass[i] = true;
            } else if (f == "q" || f == "p") {
                auto& dst = (f == "q") ? data.q[i] : data.p[i];
                if (!(vs >> dst[0] >> dst[1] >> dst[2]))
                    throw ConfigError(path + ": expected three components for " + key);
                (f == "q" ? have_q[i] : have_p[i]) = true;
            } else {
                throw ConfigError(path + ": unknown field: " + key);
            }
            continue;
        }
        throw ConfigError(path + ": unknown key: " + key);
    }

    if (!have_G) throw ConfigError(path + ": missing G");
    for (int i = 0; i < kSolarBodies; ++i) {
        if (!have_mass[i] || !have_q[i] || !have_p[i])
            throw ConfigError(path + ": incomplete record for body " + std::to_string(i + 1));
        if (!(data.mass[i] > 0))
            throw ConfigError(path + ": non-positive mass for body " + std::to_string(i + 1));
    }
    return data;
}

namespace {

// Shared geometry for the two solar potentials. `pairs` lists (i, j) body
// index pairs entering the sum -G m_i m_j / |q_i - q_j|.
double pair_potential(const Vec& q, double G, const std::array<double, kSolarBodies>& mass,
                      const std::vector<std::pair<int, int>>& pairs) {
    double V = 0;
    for (auto [i, j] : pairs) {
        double dx = q[3 * i] - q[3 * j];
        double dy = q[3 * i + 1] - q[3 * j + 1];
        double dz = q[3 * i + 2] - q[3 * j + 2];
        double r2 = dx * dx + dy * dy + dz * dz;
        if (r2 <= 0) throw SingularityError("coincident bodies in solar potential");
        V -= G * mass[i] * mass[j] / std::sqrt(r2);
    }
    return V;
}

void pair_gradient(const Vec& q, double G, const std::array<double, kSolarBodies>& mass,
                   const std::vector<std::pair<int, int>>& pairs, Vec& g) {
    for (double& v : g) v = 0;
    for (auto [i, j] : pairs) {
        double dx = q[3 * i] - q[3 * j];
        double dy = q[3 * i + 1] - q[3 * j + 1];
        double dz = q[3 * i + 2] - q[3 * j + 2];
        double r2 = dx * dx + dy * dy + dz * dz;
        if (r2 <= 0) throw SingularityError("coincident bodies in solar potential");
        double inv_r3 = 1.0 / (r2 * std::sqrt(r2));
        double c = G * mass[i] * mass[j] * inv_r3;
        g[3 * i] += c * dx;
        g[3 * i + 1] += c * dy;
        g[3 * i + 2] += c * dz;
        g[3 * j] -= c * dx;
        g[3 * j + 1] -= c * dy;
        g[3 * j + 2] -= c * dz;
    }
}

SystemDefinition make_solar(const SolarData& data, bool simplified) {
    SystemDefinition sys;
    sys.dim = 3 * kSolarBodies;
    sys.mass_diag.resize(sys.dim);
    for (int i = 0; i < kSolarBodies; ++i)
        for (int c = 0; c < 3; ++c)
            sys.mass_diag[3 * i + c] = data.mass[i];
    sys.label = simplified ? "solar_simplified" : "solar_full";

    std::vector<std::pair<int, int>> pairs;
    if (simplified) {
        for (int j = 1; j < kSolarBodies; ++j) pairs.emplace_back(0, j);
    } else {
        for (int i = 0; i < kSolarBodies; ++i)
            for (int j = i + 1; j < kSolarBodies; ++j) pairs.emplace_back(i, j);
    }

    double G = data.G;
    auto mass = data.mass;
    sys.potential = [G, mass, pairs](const Vec& q) { return pair_potential(q, G, mass, pairs); };
    sys.potential_grad = [G, mass, pairs](const Vec& q, Vec& g) { pair_gradient(q, G, mass, pairs, g); };
    sys.invariants.push_back(energy_observable(sys));

    // Total angular momentum sum_i q_i x p_i, one observable per component.
    const char* names[3] = {"angular_momentum_x", "angular_momentum_y", "angular_momentum_z"};
    for (int c = 0; c < 3; ++c) {
        int a = (c + 1) % 3, b = (c + 2) % 3;
        InvariantObservable obs;
        obs.name = names[c];
        obs.value = [a, b](const PhasePoint& y) {
            double L = 0;
            for (int i = 0; i < kSolarBodies; ++i)
                L += y.q[3 * i + a] * y.p[3 * i + b] - y.q[3 * i + b] * y.p[3 * i + a];
            return L;
        };
        obs.gradient = [a, b](const PhasePoint& y) {
            int d = 3 * kSolarBodies;
            Vec g(2 * d, 0.0);
            for (int i = 0; i < kSolarBodies; ++i) {
                g[3 * i + a] = y.p[3 * i + b];
                g[3 * i + b] = -y.p[3 * i + a];
                g[d + 3 * i + a] = -y.q[3 * i + b];
                g[d + 3 * i + b] = y.q[3 * i + a];
            }
            return g;
        };
        sys.invariants.push_back(obs);
    }
    return sys;
}

} // namespace

SystemDefinition make_solar_full(const SolarData& data) { return make_solar(data, false); }
SystemDefinition make_solar_simplified(const SolarData& data) { return make_solar(data, true); }

PhasePoint solar_initial_state(const SolarData& data) {
    PhasePoint y;
    y.q.resize(3 * kSolarBodies);
    y.p.resize(3 * kSolarBodies);
    for (int i = 0; i < kSolarBodies; ++i)
        for (int c = 0; c < 3; ++c) {
            y.q[3 * i + c] = data.q[i][c];
            y.p[3 * i + c] = data.p[i][c];
        }
    return y;
}

SystemKind system_kind_from_string(std::string_view s) {
    if (s == "harmonic") return SystemKind::Harmonic;
    if (s == "kepler") return SystemKind::Kepler;
    if (s == "solar_full") return SystemKind::SolarFull;
    if (s == "solar_simplified") return SystemKind::SolarSimplified;
    throw ConfigError("unknown system kind: " + std::string(s));
}

std::string to_string(SystemKind k) {
    switch (k) {
        case SystemKind::Harmonic: return "harmonic";
        case SystemKind::Kepler: return "kepler";
        case SystemKind::SolarFull: return "solar_full";
        case SystemKind::SolarSimplified: return "solar_simplified";
    }
    return "?";
}

SystemDefinition build_system(SystemKind kind, const SystemParams& params) {
    switch (kind) {
        case SystemKind::Harmonic: return make_harmonic(params.omega);
        case SystemKind::Kepler: return make_kepler(params.alpha);
        case SystemKind::SolarFull: return make_solar_full(load_solar_data(params.data_file));
        case SystemKind::SolarSimplified: return make_solar_simplified(load_solar_data(params.data_file));
    }
    throw ConfigError("unknown system kind");
}

} // namespace parareal
