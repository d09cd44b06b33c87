#pragma once

#include <array>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "parareal/cost.hpp"
#include "parareal/executor.hpp"
#include "parareal/integrators.hpp"
#include "parareal/projection.hpp"
#include "parareal/system.hpp"

namespace parareal {

enum class Variant {
    Plain,
    Symmetric,
    SymmetricPerturbed,
    PlainProjected,
    SymmetricSymProjected,
    SymmetricQsymProjected,
};

Variant variant_from_string(std::string_view s);
std::string to_string(Variant v);
bool variant_is_symmetric(Variant v);
bool variant_is_projected(Variant v);

// Per-window bookkeeping of one iteration: the projection multiplier and the
// Newton outcome, where applicable.
struct WindowRecord {
    double mu = std::numeric_limits<double>::quiet_NaN();
    NewtonOutcome newton{};
    bool has_newton = false;
};

// Receives each completed iteration row. The schemes keep only the last two
// rows in memory, so anything that should outlive the run (full error series,
// disk dumps) must be captured here. `half_states` are the N mid-window states
// of the symmetric variants (the pre-correction tilded ones for the projected
// symmetric variants); empty for plain variants.
class RowSink {
public:
    virtual ~RowSink() = default;
    virtual void on_iteration(int k, std::span<const PhasePoint> states,
                              std::span<const PhasePoint> half_states,
                              std::span<const WindowRecord> records) = 0;
};

class NullSink final : public RowSink {
public:
    void on_iteration(int, std::span<const PhasePoint>, std::span<const PhasePoint>,
                      std::span<const WindowRecord>) override {}
};

// Test/analysis sink that keeps every row (small grids only).
class CollectingSink final : public RowSink {
public:
    std::vector<std::vector<PhasePoint>> states;       // [k][n], n = 0..N
    std::vector<std::vector<PhasePoint>> half_states;  // [k][n], n = 0..N-1
    std::vector<std::vector<WindowRecord>> records;    // [k][n]

    void on_iteration(int k, std::span<const PhasePoint> s, std::span<const PhasePoint> h,
                      std::span<const WindowRecord> r) override;
};

struct PararealConfig {
    std::shared_ptr<const SystemDefinition> system;         // fine dynamics; also defines H for metrics/projection
    std::shared_ptr<const SystemDefinition> coarse_system;  // empty: same as `system`
    double horizon = 0;  // T (sign sets the direction of time)
    double window = 0;   // DT
    int windows = 0;     // N, with T = N DT
    int iterations = 0;  // K
    PropagatorSpec fine{0, 0};    // step dt, duration DT
    PropagatorSpec coarse{0, 0};  // step dT, duration DT
    Variant variant = Variant::Plain;

    std::optional<ManifoldSpec> manifold;
    std::optional<ProjectionConfig> projection;

    std::optional<PerturbationSchedule> schedule;
    std::vector<std::shared_ptr<const SystemDefinition>> schedule_systems;  // one per iteration 0..K
    bool warm_start_mu = false;

    const SystemDefinition& fine_system() const { return *system; }
    const SystemDefinition& coarse_dynamics() const { return coarse_system ? *coarse_system : *system; }

    void validate() const;  // throws ConfigError
};

struct PararealRun {
    int windows = 0;
    int iterations = 0;
    double window_length = 0;
    std::vector<PhasePoint> final_states;            // row K
    std::vector<std::vector<WindowRecord>> records;  // [k][n]; empty rows for unprojected variants
    CostLedger ledger;
    std::size_t peak_state_buffers = 0;  // iterate states alive at once (rows + half rows)

    // Stop-reason tallies over all recorded projections.
    std::array<long long, 3> stop_counts() const;
    double mean_projection_iterations() const;
};

// Runs the configured variant, streaming every iteration row to `sink`.
PararealRun run_parareal(const PararealConfig& cfg, const PhasePoint& u0, WindowExecutor& exec,
                         RowSink& sink);

// Variant-checked entry points.
PararealRun run_plain(const PararealConfig& cfg, const PhasePoint& u0, WindowExecutor& exec, RowSink& sink);
PararealRun run_symmetric(const PararealConfig& cfg, const PhasePoint& u0, WindowExecutor& exec, RowSink& sink);
PararealRun run_symmetric_perturbed(const PararealConfig& cfg, const PhasePoint& u0, WindowExecutor& exec,
                                    RowSink& sink);
PararealRun run_plain_projected(const PararealConfig& cfg, const PhasePoint& u0, WindowExecutor& exec,
                                RowSink& sink);
PararealRun run_symmetric_projected(const PararealConfig& cfg, const PhasePoint& u0, WindowExecutor& exec,
                                    RowSink& sink);

} // namespace parareal
