#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "parareal/metrics.hpp"
#include "parareal/schemes.hpp"
#include "parareal/system.hpp"

namespace parareal {

// Parsed experiment description. One flat key/value text file with [section]
// headers; see configs/ for the bundled experiment set.
struct ExperimentConfig {
    // [system]
    SystemKind kind = SystemKind::Harmonic;
    double omega = 1.0;
    double alpha = 1.0;
    double eccentricity = 0.6;
    std::string data_file;
    std::optional<Vec> q0;
    std::optional<Vec> p0;

    // [coarse] dynamics = same | simplified
    bool coarse_simplified = false;

    // [grid]
    double fine_step = 0;
    double coarse_step = 0;
    double window = 0;
    double horizon = 0;
    int iterations = 0;

    // [variant]
    Variant variant = Variant::Plain;

    // [projection]
    double tol = 1e-7;
    int max_iter = 2;
    std::vector<std::string> invariants{"energy"};
    bool warm_start = false;

    // [schedule]
    std::vector<double> schedule_values;

    // [reference]
    bool reference_enabled = true;
    int reference_divisor = 10;

    // [run]
    int workers = 1;
    std::string output = "runs/out";
    unsigned long long seed = 0;
    std::string cache_dir;
};

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin = "<config>");
ExperimentConfig parse_config_file(const std::string& path);
std::string serialize_config(const ExperimentConfig& cfg);
bool semantically_equal(const ExperimentConfig& a, const ExperimentConfig& b);

// Config materialized into systems, initial state and a scheme config.
struct BuiltExperiment {
    ExperimentConfig exp;
    std::shared_ptr<const SystemDefinition> system;
    PhasePoint u0;
    double H0 = 0;
    PararealConfig scheme;
    std::vector<std::string> angular_momentum_components;  // empty when the system has none
};

BuiltExperiment build_experiment(const ExperimentConfig& exp);

} // namespace parareal
