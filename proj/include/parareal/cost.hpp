#pragma once

#include <vector>

#include "parareal/integrators.hpp"

namespace parareal {

struct PararealConfig;
struct PararealRun;

// Gradient-evaluation ledger by role, plus the critical-path model. Totals
// include the once-per-call reusable evaluation; the critical path is kept in
// per-step units, which is what the closed-form complexity counts.
struct CostLedger {
    EvalTally fine;
    EvalTally coarse;
    EvalTally projection;

    // Entry k: gradient evaluations on the critical path of iteration k under
    // the pipelined schedule (each window's parallel task starts as soon as
    // its input state exists; the sequential sweeps of consecutive iterations
    // overlap with the parallel work but not with each other). Entry 0 is the
    // initial coarse sweep.
    std::vector<long long> per_iteration_critical_path;

    long long grad_evals_fine() const { return fine.total(); }
    long long grad_evals_coarse() const { return coarse.total(); }
    long long grad_evals_projection() const { return projection.total(); }
    long long total_critical_path() const {
        long long s = 0;
        for (long long v : per_iteration_critical_path) s += v;
        return s;
    }
};

enum class CostRegime { CoarseDominated, FineDominated };

const char* to_string(CostRegime r);

// Fine-dominated iff DT/dt_fine > T/dt_coarse: one window of fine work costs
// more than a full coarse sweep.
CostRegime classify_regime(const PararealConfig& cfg);

struct SpeedupReport {
    CostRegime regime = CostRegime::FineDominated;
    long long predicted_cost = 0;   // closed form, units of one gradient evaluation
    long long sequential_cost = 0;  // T / dt_fine
    double speedup = 0;             // sequential_cost / predicted_cost
    long long processors = 0;       // one per window

    // Inputs echoed for the per-iteration comparison.
    int iterations = 0;
    double mean_projection_iterations = 0;
    long long initial_sweep_predicted = 0;   // T / dt_coarse
    long long per_iteration_predicted = 0;   // expected critical path, k >= 1
    long long fine_per_window = 0;           // DT / dt_fine
    long long windows = 0;
    bool projected = false;
    bool symmetric_projection = false;       // Newton re-propagates the coarse composite
};

// Closed-form cost of the configured variant. Coarse-dominated:
// (K+1) C T/dt_coarse; fine-dominated: K C DT/dt_fine, with C one gradient
// evaluation. Sequential cost is C T/dt_fine, so the fine-dominated speedup is
// T/(K DT) = processors / iterations. m_proj (mean Newton iterations per
// projection) refines only the per-iteration expectation used by
// measured_vs_predicted, never the headline formulas.
SpeedupReport predict_cost(const PararealConfig& cfg, int K, double m_proj = 0.0);

// Measured critical path of each iteration divided by its predicted value;
// entry 0 compares the initial coarse sweep.
std::vector<double> measured_vs_predicted(const PararealRun& run, const SpeedupReport& report);

} // namespace parareal
