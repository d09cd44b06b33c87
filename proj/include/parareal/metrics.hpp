#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "parareal/integrators.hpp"
#include "parareal/phase_point.hpp"
#include "parareal/schemes.hpp"
#include "parareal/system.hpp"

namespace parareal {

// ---- pointwise error observables -------------------------------------------

// |H(y) - H0| / |H0|; falls back to the absolute deviation when H0 == 0 and
// reports it through `absolute` if given.
double energy_error_value(const SystemDefinition& sys, const PhasePoint& y, double H0,
                          bool* absolute = nullptr);

// ||q - q_ref|| + ||p - p_ref||.
double trajectory_error_value(const PhasePoint& y, const PhasePoint& ref);

// A scalar invariant or the components of a vector one, measured as
// ||I(y) - I0|| / ||I0|| (absolute when the target vanishes).
struct InvariantGroup {
    std::string name;
    std::vector<const InvariantObservable*> components;
    std::vector<double> targets;
};

InvariantGroup make_invariant_group(const SystemDefinition& sys, const PhasePoint& u0,
                                    const std::vector<std::string>& component_names,
                                    const std::string& group_name);

double invariant_error_value(const InvariantGroup& group, const PhasePoint& y,
                             bool* absolute = nullptr);

// ---- trajectories and the convergence floor ---------------------------------

// Sequential one-step trajectory sampled at the window boundaries
// (windows + 1 states including t = 0).
std::vector<PhasePoint> sequential_trajectory(const SystemDefinition& sys, const PhasePoint& u0,
                                              double step, double horizon, double window,
                                              EvalTally* tally = nullptr);

// Same, with the step refined by `divisor` (default 10): the reference used by
// trajectory errors. Results are cached on disk when `cache_dir` is non-empty;
// recomputation reproduces the cached bytes exactly.
std::vector<PhasePoint> reference_trajectory(const SystemDefinition& sys, const PhasePoint& u0,
                                             double fine_step, double horizon, double window,
                                             int divisor = 10, const std::string& cache_dir = "");

// Resolution order for the cache directory: explicit argument, then the
// PARAREAL_CACHE_DIR environment variable, else empty (no caching).
std::string resolve_cache_dir(const std::string& requested);

// ---- error series ------------------------------------------------------------

struct ErrorSeries {
    std::string kind;                        // "energy", "trajectory", "invariant:<name>"
    std::vector<double> times;               // n * window
    std::vector<std::vector<double>> values; // [k][n]
    bool absolute_fallback = false;

    double max_over(int k, double t_lo, double t_hi) const;
    double max_at(int k) const { return max_over(k, times.front(), times.back()); }
};

// Streaming accumulator: feed each iteration row, read the series afterwards.
class ErrorAccumulator : public RowSink {
public:
    ErrorAccumulator(std::shared_ptr<const SystemDefinition> sys, double H0, double window, int windows,
                     std::vector<InvariantGroup> groups = {},
                     std::shared_ptr<const std::vector<PhasePoint>> reference = nullptr);

    void on_iteration(int k, std::span<const PhasePoint> states, std::span<const PhasePoint> halves,
                      std::span<const WindowRecord> records) override;

    const ErrorSeries& energy() const { return energy_; }
    const ErrorSeries& trajectory() const { return trajectory_; }  // empty without a reference
    const std::vector<ErrorSeries>& invariants() const { return invariant_; }
    bool has_reference() const { return reference_ != nullptr; }

private:
    std::shared_ptr<const SystemDefinition> sys_;
    double H0_;
    std::vector<InvariantGroup> groups_;
    std::shared_ptr<const std::vector<PhasePoint>> reference_;
    ErrorSeries energy_;
    ErrorSeries trajectory_;
    std::vector<ErrorSeries> invariant_;
};

// Grid-at-once conveniences (tests, small runs).
ErrorSeries energy_error(const std::vector<std::vector<PhasePoint>>& grid, const SystemDefinition& sys,
                         double H0, double window);
ErrorSeries trajectory_error(const std::vector<std::vector<PhasePoint>>& grid,
                             const std::vector<PhasePoint>& reference, double window);
ErrorSeries invariant_error(const std::vector<std::vector<PhasePoint>>& grid, const InvariantGroup& group,
                            double window);

// Largest trajectory error of the sequential fine scheme against the divisor-
// refined reference: the floor parareal iterations converge to.
double convergence_floor(const std::vector<PhasePoint>& fine, const std::vector<PhasePoint>& reference);

} // namespace parareal
