#include "parareal/cost.hpp"

#include <cmath>

#include "parareal/errors.hpp"
#include "parareal/schemes.hpp"

namespace parareal {

const char* to_string(CostRegime r) {
    return r == CostRegime::FineDominated ? "fine_dominated" : "coarse_dominated";
}

CostRegime classify_regime(const PararealConfig& cfg) {
    double fine_per_window = std::abs(cfg.window / cfg.fine.step);
    double coarse_whole_range = std::abs(cfg.horizon / cfg.coarse.step);
    return fine_per_window > coarse_whole_range ? CostRegime::FineDominated
                                                : CostRegime::CoarseDominated;
}

SpeedupReport predict_cost(const PararealConfig& cfg, int K, double m_proj) {
    SpeedupReport rep;
    rep.regime = classify_regime(cfg);
    rep.iterations = K;
    rep.mean_projection_iterations = m_proj;
    rep.processors = cfg.windows;

    const long long f = std::llround(std::abs(cfg.window / cfg.fine.step));
    const long long sweep = std::llround(std::abs(cfg.horizon / cfg.coarse.step));
    rep.sequential_cost = std::llround(std::abs(cfg.horizon / cfg.fine.step));
    rep.initial_sweep_predicted = sweep;
    rep.fine_per_window = f;
    rep.windows = cfg.windows;
    rep.projected = variant_is_projected(cfg.variant);
    rep.symmetric_projection = cfg.variant == Variant::SymmetricSymProjected ||
                               cfg.variant == Variant::SymmetricQsymProjected;

    if (rep.regime == CostRegime::FineDominated) {
        rep.predicted_cost = (K == 0) ? sweep : K * f;
        rep.per_iteration_predicted = f;
    } else {
        rep.predicted_cost = (K + 1LL) * sweep;
        rep.per_iteration_predicted = sweep;
        if (variant_is_projected(cfg.variant) && m_proj > 0) {
            // The sweep also carries the projection work: m_proj gradient
            // evaluations per window, and for the symmetric projections each
            // Newton iteration re-propagates the coarse composite.
            double extra = cfg.windows * m_proj;
            if (cfg.variant != Variant::PlainProjected) extra += sweep * m_proj;
            rep.per_iteration_predicted = sweep + std::llround(extra);
        }
    }
    rep.speedup = rep.predicted_cost > 0
                      ? static_cast<double>(rep.sequential_cost) / static_cast<double>(rep.predicted_cost)
                      : 0.0;
    return rep;
}

std::vector<double> measured_vs_predicted(const PararealRun& run, const SpeedupReport& report) {
    std::vector<double> ratios;
    ratios.reserve(run.ledger.per_iteration_critical_path.size());
    for (std::size_t k = 0; k < run.ledger.per_iteration_critical_path.size(); ++k) {
        double predicted = static_cast<double>(
            k == 0 ? report.initial_sweep_predicted
                   : (report.regime == CostRegime::FineDominated ? report.fine_per_window
                                                                 : report.initial_sweep_predicted));
        if (k > 0 && report.projected && report.regime == CostRegime::CoarseDominated &&
            k < run.records.size()) {
            // Projection work rides on the sequential sweep: m_k gradient
            // evaluations per window, plus a re-propagation of the wrapped
            // coarse composite per Newton update for the symmetric modes.
            long long updates = 0, count = 0;
            for (const auto& rec : run.records[k])
                if (rec.has_newton) {
                    updates += rec.newton.iterations;
                    ++count;
                }
            double m_k = count ? static_cast<double>(updates) / static_cast<double>(count) : 0.0;
            predicted += report.windows * m_k;
            if (report.symmetric_projection) predicted += report.initial_sweep_predicted * m_k;
        }
        if (predicted <= 0) throw ConfigError("cost prediction has empty iterations");
        ratios.push_back(static_cast<double>(run.ledger.per_iteration_critical_path[k]) / predicted);
    }
    return ratios;
}

} // namespace parareal
