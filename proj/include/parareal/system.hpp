#pragma once

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "parareal/errors.hpp"
#include "parareal/phase_point.hpp"

namespace parareal {

// A conserved quantity I(q,p) with its phase-space gradient (length 2d,
// q-part first). The energy is always invariant #0 of a system.
struct InvariantObservable {
    std::string name;
    std::function<double(const PhasePoint&)> value;
    std::function<Vec(const PhasePoint&)> gradient;
};

// Per-iteration parameter values for the frequency-perturbed scheme
// (omega_k for the oscillator, alpha_k for the Kepler problem). The final
// entry must be the unperturbed constant so the last sweep integrates the
// true dynamics.
struct PerturbationSchedule {
    std::vector<double> values;
    double exact_value = 1.0;

    void validate() const;
};

// Separable Hamiltonian H(q,p) = 1/2 p^T M^-1 p + V(q), M diagonal.
// Immutable after construction; safe to share across threads.
struct SystemDefinition {
    int dim = 0;
    Vec mass_diag;
    std::string label;
    std::function<double(const Vec&)> potential;
    std::function<void(const Vec&, Vec&)> potential_grad;
    std::vector<InvariantObservable> invariants;

    const InvariantObservable* find_invariant(std::string_view name) const;
};

double eval_energy(const SystemDefinition& sys, const PhasePoint& y);

// (dV/dq, M^-1 p) stacked; one potential-gradient evaluation.
Vec eval_grad_H(const SystemDefinition& sys, const PhasePoint& y);

// ---- model systems -------------------------------------------------------

// H = 1/2 p^2 + 1/2 omega^2 q^2, d = 1.
SystemDefinition make_harmonic(double omega);

// H = 1/2 p^T p - alpha / |q|, d = 2. Invariants: energy, angular momentum
// L = q1 p2 - q2 p1, and the two Runge-Lenz components (diagnostics only).
SystemDefinition make_kepler(double alpha);

PhasePoint harmonic_initial_state();

// q = (1-e, 0), p = (0, sqrt((1+e)/(1-e))): eccentric orbit with H = -1/2.
PhasePoint kepler_initial_state(double eccentricity);

// ---- outer solar system ---------------------------------------------------

inline constexpr int kSolarBodies = 6;

// Masses in solar masses, lengths in AU, time in days; momenta are
// mass-weighted velocities (p = m v). Body 1 is the Sun.
struct SolarData {
    double G = 0;
    std::array<double, kSolarBodies> mass{};
    std::array<std::array<double, 3>, kSolarBodies> q{};
    std::array<std::array<double, 3>, kSolarBodies> p{};
};

// Plain-text key/value file: `G = ...`, `body.<i>.mass = ...`,
// `body.<i>.q = x y z`, `body.<i>.p = x y z` for i in 1..6.
SolarData load_solar_data(const std::string& path);

// Full pairwise gravitational potential (15 pair terms).
SystemDefinition make_solar_full(const SolarData& data);

// Sun-planet interactions only (5 pair terms); the cheap dynamics used to
// drive the coarse propagator.
SystemDefinition make_solar_simplified(const SolarData& data);

PhasePoint solar_initial_state(const SolarData& data);

// ---- construction by name (CLI / config layer) ----------------------------

enum class SystemKind { Harmonic, Kepler, SolarFull, SolarSimplified };

SystemKind system_kind_from_string(std::string_view s);
std::string to_string(SystemKind k);

struct SystemParams {
    double omega = 1.0;         // harmonic
    double alpha = 1.0;         // kepler
    std::string data_file;      // solar variants
};

SystemDefinition build_system(SystemKind kind, const SystemParams& params);

} // namespace parareal
