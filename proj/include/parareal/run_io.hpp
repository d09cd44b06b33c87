#pragma once

#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "parareal/config.hpp"
#include "parareal/cost.hpp"
#include "parareal/metrics.hpp"
#include "parareal/schemes.hpp"

namespace parareal {

struct RunPaths {
    std::string dir;
    std::string series_csv() const { return dir + "/series.csv"; }
    std::string states_csv() const { return dir + "/states.csv"; }
    std::string summary_json() const { return dir + "/summary.json"; }
    std::string error_json() const { return dir + "/error.json"; }
    std::string config_echo() const { return dir + "/config.cfg"; }
};

// Streams one CSV line per (k, n) with the error columns; the header and the
// column count depend only on the system, never on the variant. Missing
// metrics stay as empty fields.
class CsvSeriesSink : public RowSink {
public:
    CsvSeriesSink(std::ostream& os, std::shared_ptr<const SystemDefinition> sys, double H0,
                  double window, std::vector<InvariantGroup> groups,
                  std::shared_ptr<const std::vector<PhasePoint>> reference);

    void on_iteration(int k, std::span<const PhasePoint> states, std::span<const PhasePoint> halves,
                      std::span<const WindowRecord> records) override;

private:
    std::ostream& os_;
    std::shared_ptr<const SystemDefinition> sys_;
    double H0_;
    double window_;
    std::vector<InvariantGroup> groups_;  // [0] is the aggregate; 1.. are single components
    std::shared_ptr<const std::vector<PhasePoint>> reference_;
};

class FanoutSink : public RowSink {
public:
    void add(RowSink* s) { sinks_.push_back(s); }
    void on_iteration(int k, std::span<const PhasePoint> states, std::span<const PhasePoint> halves,
                      std::span<const WindowRecord> records) override {
        for (RowSink* s : sinks_) s->on_iteration(k, states, halves, records);
    }

private:
    std::vector<RowSink*> sinks_;
};

void write_states_csv(std::ostream& os, const std::vector<PhasePoint>& states, double window, int k);

void write_summary_json(std::ostream& os, const BuiltExperiment& built, const PararealRun& run,
                        const SpeedupReport& report, const ErrorAccumulator& errors,
                        double floor, bool has_floor);

// CLI entry points; return the process exit code (0 ok, 2 config/artifact
// problems, 3 runtime integration or projection failures).
struct CliOverrides {
    std::optional<int> workers;
    std::optional<std::string> output;
    std::optional<unsigned long long> seed;
};

int cmd_run(const std::string& config_path, const CliOverrides& overrides, std::ostream& log);
int cmd_reference(const std::string& config_path, const CliOverrides& overrides, std::ostream& log);
int cmd_report(const std::vector<std::string>& run_dirs, std::ostream& out);

} // namespace parareal
