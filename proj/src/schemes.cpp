#include "parareal/schemes.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "parareal/errors.hpp"

namespace parareal {

Variant variant_from_string(std::string_view s) {
    if (s == "plain") return Variant::Plain;
    if (s == "symmetric") return Variant::Symmetric;
    if (s == "symmetric_perturbed") return Variant::SymmetricPerturbed;
    if (s == "plain_projected") return Variant::PlainProjected;
    if (s == "symmetric_sym_projected") return Variant::SymmetricSymProjected;
    if (s == "symmetric_qsym_projected") return Variant::SymmetricQsymProjected;
    throw ConfigError("unknown variant: " + std::string(s));
}

std::string to_string(Variant v) {
    switch (v) {
        case Variant::Plain: return "plain";
        case Variant::Symmetric: return "symmetric";
        case Variant::SymmetricPerturbed: return "symmetric_perturbed";
        case Variant::PlainProjected: return "plain_projected";
        case Variant::SymmetricSymProjected: return "symmetric_sym_projected";
        case Variant::SymmetricQsymProjected: return "symmetric_qsym_projected";
    }
    return "?";
}

bool variant_is_symmetric(Variant v) {
    return v == Variant::Symmetric || v == Variant::SymmetricPerturbed ||
           v == Variant::SymmetricSymProjected || v == Variant::SymmetricQsymProjected;
}

bool variant_is_projected(Variant v) {
    return v == Variant::PlainProjected || v == Variant::SymmetricSymProjected ||
           v == Variant::SymmetricQsymProjected;
}

void CollectingSink::on_iteration(int k, std::span<const PhasePoint> s, std::span<const PhasePoint> h,
                                  std::span<const WindowRecord> r) {
    (void)k;
    states.emplace_back(s.begin(), s.end());
    half_states.emplace_back(h.begin(), h.end());
    records.emplace_back(r.begin(), r.end());
}

void PararealConfig::validate() const {
    if (!system) throw ConfigError("parareal config has no system");
    if (windows < 1) throw ConfigError("parareal config needs at least one window");
    if (iterations < 0) throw ConfigError("parareal iteration count must be >= 0");
    if (window == 0 || horizon == 0) throw ConfigError("horizon and window must be non-zero");
    if ((window > 0) != (horizon > 0)) throw ConfigError("horizon and window must share a sign");
    if (std::abs(horizon - windows * window) > 1e-9 * std::max(std::abs(horizon), std::abs(window)))
        throw ConfigError("horizon must equal windows * window");
    if (std::abs(fine.duration - window) > 1e-12 * std::abs(window) ||
        std::abs(coarse.duration - window) > 1e-12 * std::abs(window))
        throw ConfigError("propagator durations must equal the window length");
    fine.steps();
    coarse.steps();
    if (coarse_system && coarse_system->dim != system->dim)
        throw ConfigError("coarse system dimension differs from the fine system");

    if (variant_is_symmetric(variant)) {
        // Half-window propagations must land on whole steps.
        fine.half_duration().steps();
        coarse.half_duration().steps();
    }

    const bool projected = variant_is_projected(variant);
    if (projected != manifold.has_value() || projected != projection.has_value())
        throw ConfigError("manifold and projection configs are required exactly for projected variants");
    if (projected) {
        manifold->validate();
        if (!(projection->tol > 0) || projection->max_iter < 1)
            throw ConfigError("projection needs tol > 0 and max_iter >= 1");
        ProjectionMode want = variant == Variant::PlainProjected ? ProjectionMode::Standard
                              : variant == Variant::SymmetricSymProjected
                                  ? ProjectionMode::Symmetric
                                  : ProjectionMode::QuasiSymmetric;
        if (projection->mode != want)
            throw ConfigError("projection mode does not match the variant");
        if (variant != Variant::PlainProjected && manifold->observables.size() != 1)
            throw ConfigError("symmetric projection variants project on the energy only");
    }

    const bool perturbed = variant == Variant::SymmetricPerturbed;
    if (perturbed != schedule.has_value())
        throw ConfigError("perturbation schedule is required exactly for the perturbed variant");
    if (perturbed) {
        schedule->validate();
        if (static_cast<int>(schedule->values.size()) != iterations + 1)
            throw ConfigError("perturbation schedule needs one value per iteration 0..K");
        if (schedule_systems.size() != schedule->values.size())
            throw ConfigError("perturbed variant needs one system per schedule entry");
        for (const auto& s : schedule_systems)
            if (!s || s->dim != system->dim)
                throw ConfigError("perturbed schedule system missing or of wrong dimension");
        if (coarse_system)
            throw ConfigError("perturbed variant drives fine and coarse from the scheduled system");
    } else if (!schedule_systems.empty()) {
        throw ConfigError("schedule systems given without the perturbed variant");
    }
}

std::array<long long, 3> PararealRun::stop_counts() const {
    std::array<long long, 3> c{0, 0, 0};
    for (const auto& row : records)
        for (const auto& r : row)
            if (r.has_newton) ++c[static_cast<int>(r.newton.stop)];
    return c;
}

double PararealRun::mean_projection_iterations() const {
    long long count = 0, total = 0;
    for (const auto& row : records)
        for (const auto& r : row)
            if (r.has_newton) {
                ++count;
                total += r.newton.iterations;
            }
    return count ? static_cast<double>(total) / static_cast<double>(count) : 0.0;
}

namespace {

// Tracks how many iterate states the scheme holds at once; rows and half rows
// only, correction terms are derived data.
struct StorageMeter {
    std::size_t current = 0;
    std::size_t peak = 0;
    void acquire(std::size_t n) {
        current += n;
        peak = std::max(peak, current);
    }
};

void annotate(IntegrationBlowup& e, int n, int k) {
    if (e.window < 0) e.window = n;
    if (e.iteration < 0) e.iteration = k;
}

PararealRun run_plain_family(const PararealConfig& cfg, const PhasePoint& u0, WindowExecutor& exec,
                             RowSink& sink) {
    const int N = cfg.windows;
    const int K = cfg.iterations;
    const bool projected = cfg.variant == Variant::PlainProjected;
    const SystemDefinition& fsys = cfg.fine_system();
    const SystemDefinition& gsys = cfg.coarse_dynamics();

    PararealRun run;
    run.windows = N;
    run.iterations = K;
    run.window_length = cfg.window;
    run.records.resize(K + 1);

    StorageMeter meter;
    std::vector<PhasePoint> prev(N + 1), next(N + 1);
    meter.acquire(2 * (N + 1));
    std::vector<PhasePoint> corrections(N);

    // Iteration 0: pure coarse sweep (never projected).
    prev[0] = u0;
    {
        EvalTally sweep;
        for (int n = 0; n < N; ++n) {
            try {
                prev[n + 1] = propagate(gsys, prev[n], cfg.coarse, &sweep);
            } catch (IntegrationBlowup& e) {
                annotate(e, n, 0);
                throw;
            }
        }
        run.ledger.coarse += sweep;
        run.ledger.per_iteration_critical_path.push_back(sweep.step_evals);
    }
    sink.on_iteration(0, std::span<const PhasePoint>(prev), {}, {});

    std::vector<EvalTally> task_fine(N), task_coarse(N);
    for (int k = 0; k < K; ++k) {
        // Correction terms F(u_n^k) - G(u_n^k), one independent task per window.
        for (auto& t : task_fine) t = {};
        for (auto& t : task_coarse) t = {};
        exec.run_windows(static_cast<std::size_t>(N), [&](std::size_t n) {
            try {
                PhasePoint f = propagate(fsys, prev[n], cfg.fine, &task_fine[n]);
                PhasePoint g = propagate(gsys, prev[n], cfg.coarse, &task_coarse[n]);
                corrections[n] = f - g;
            } catch (IntegrationBlowup& e) {
                annotate(e, static_cast<int>(n), k + 1);
                throw;
            }
        });
        long long task_path = 0;
        for (int n = 0; n < N; ++n) {
            run.ledger.fine += task_fine[n];
            run.ledger.coarse += task_coarse[n];
            task_path = std::max(task_path, task_fine[n].step_evals + task_coarse[n].step_evals);
        }

        // Sequential corrector sweep.
        next[0] = u0;
        EvalTally sweep, proj;
        auto& recs = run.records[k + 1];
        if (projected) recs.resize(N);
        for (int n = 0; n < N; ++n) {
            try {
                PhasePoint corrected = propagate(gsys, next[n], cfg.coarse, &sweep) + corrections[n];
                if (projected) {
                    auto [y, outcome] = project_standard(fsys, *cfg.manifold, corrected, *cfg.projection, &proj);
                    next[n + 1] = std::move(y);
                    recs[n].mu = 0;
                    recs[n].newton = outcome;
                    recs[n].has_newton = true;
                } else {
                    next[n + 1] = std::move(corrected);
                }
            } catch (IntegrationBlowup& e) {
                annotate(e, n, k + 1);
                throw;
            } catch (DegenerateProjection& e) {
                e.window = n;
                e.iteration = k + 1;
                throw;
            }
        }
        run.ledger.coarse += sweep;
        run.ledger.projection += proj;
        run.ledger.per_iteration_critical_path.push_back(
            std::max(sweep.step_evals + proj.step_evals, task_path));
        sink.on_iteration(k + 1, std::span<const PhasePoint>(next), {},
                          std::span<const WindowRecord>(recs));
        prev.swap(next);
    }

    run.final_states = std::move(prev);
    run.peak_state_buffers = meter.peak;
    return run;
}

PararealRun run_symmetric_family(const PararealConfig& cfg, const PhasePoint& u0, WindowExecutor& exec,
                                 RowSink& sink) {
    const int N = cfg.windows;
    const int K = cfg.iterations;
    const Variant variant = cfg.variant;
    const bool projected = variant_is_projected(variant);
    const bool perturbed = variant == Variant::SymmetricPerturbed;
    const SystemDefinition& base_sys = cfg.fine_system();

    // Iteration-k dynamics; identical for fine and coarse except in §7-style
    // configs where the coarse map runs a simplified system.
    auto fine_sys = [&](int k) -> const SystemDefinition& {
        return perturbed ? *cfg.schedule_systems[k] : base_sys;
    };
    auto coarse_sys = [&](int k) -> const SystemDefinition& {
        return perturbed ? *cfg.schedule_systems[k] : cfg.coarse_dynamics();
    };

    const PropagatorSpec f_plus = cfg.fine.half_duration();
    const PropagatorSpec f_minus = f_plus.negated();
    const PropagatorSpec g_plus = cfg.coarse.half_duration();
    const PropagatorSpec g_minus = g_plus.negated();

    PararealRun run;
    run.windows = N;
    run.iterations = K;
    run.window_length = cfg.window;
    run.records.resize(K + 1);

    StorageMeter meter;
    std::vector<PhasePoint> prev(N + 1), next(N + 1);
    std::vector<PhasePoint> half_prev(N), half_next(N);
    meter.acquire(2 * (N + 1) + 2 * N);
    std::vector<PhasePoint> c_minus(N), c_plus(N);

    const double H0 = projected ? cfg.manifold->targets[0] : 0.0;

    // Iteration 0: symmetrized coarse sweep
    //   u_{n+1/2} = G_{-DT/2}^{-1}(u_n),  u_{n+1} = G_{DT/2}(u_{n+1/2}).
    prev[0] = u0;
    {
        const SystemDefinition& gsys = coarse_sys(0);
        EvalTally sweep;
        for (int n = 0; n < N; ++n) {
            try {
                half_prev[n] = inverse_coarse(gsys, prev[n], g_minus, &sweep);
                prev[n + 1] = propagate(gsys, half_prev[n], g_plus, &sweep);
            } catch (IntegrationBlowup& e) {
                annotate(e, n, 0);
                throw;
            } catch (InversionFailure& e) {
                e.window = n;
                e.iteration = 0;
                throw;
            }
        }
        run.ledger.coarse += sweep;
        run.ledger.per_iteration_critical_path.push_back(sweep.step_evals);
    }
    sink.on_iteration(0, std::span<const PhasePoint>(prev), std::span<const PhasePoint>(half_prev), {});

    std::vector<EvalTally> task_fine(N), task_coarse(N);
    for (int k = 0; k < K; ++k) {
        const SystemDefinition& fsys = fine_sys(k + 1);
        const SystemDefinition& gsys = coarse_sys(k + 1);

        // Parallel batch at the half-points of row k: both half-window fine
        // maps and both half-window coarse maps, combined into the two
        // correction terms consumed by the sweep.
        for (auto& t : task_fine) t = {};
        for (auto& t : task_coarse) t = {};
        exec.run_windows(static_cast<std::size_t>(N), [&](std::size_t n) {
            try {
                const PhasePoint& h = half_prev[n];
                PhasePoint fm = propagate(fsys, h, f_minus, &task_fine[n]);
                PhasePoint gm = propagate(gsys, h, g_minus, &task_coarse[n]);
                PhasePoint fp = propagate(fsys, h, f_plus, &task_fine[n]);
                PhasePoint gp = propagate(gsys, h, g_plus, &task_coarse[n]);
                c_minus[n] = gm - fm;
                c_plus[n] = fp - gp;
            } catch (IntegrationBlowup& e) {
                annotate(e, static_cast<int>(n), k + 1);
                throw;
            }
        });
        long long task_path = 0;
        for (int n = 0; n < N; ++n) {
            run.ledger.fine += task_fine[n];
            run.ledger.coarse += task_coarse[n];
            task_path = std::max(task_path, task_fine[n].step_evals + task_coarse[n].step_evals);
        }

        // Sequential corrector sweep.
        next[0] = u0;
        EvalTally sweep, proj;
        auto& recs = run.records[k + 1];
        if (projected) recs.resize(N);
        double mu_warm = 0;
        for (int n = 0; n < N; ++n) {
            try {
                if (!projected) {
                    half_next[n] = inverse_coarse(gsys, next[n] + c_minus[n], g_minus, &sweep);
                    next[n + 1] = propagate(gsys, half_next[n], g_plus, &sweep) + c_plus[n];
                    continue;
                }

                // Projected step: wrap the frozen two-line update as the inner
                // map and determine the shared multiplier. The inner map keeps
                // the half states of its last two evaluations so the one
                // matching the accepted iterate can be stored.
                PhasePoint half_a, half_b;
                int inner_calls = 0;
                InnerMap inner = [&](const PhasePoint& y_tilde) {
                    half_a = std::move(half_b);
                    half_b = inverse_coarse(gsys, y_tilde + c_minus[n], g_minus, &sweep);
                    ++inner_calls;
                    return propagate(gsys, half_b, g_plus, &sweep) + c_plus[n];
                };
                double mu0 = cfg.warm_start_mu ? mu_warm : 0.0;
                ProjectedStep step =
                    variant == Variant::SymmetricSymProjected
                        ? symmetric_projected_step(base_sys, inner, next[n], H0, *cfg.projection, mu0, &proj)
                        : quasi_symmetric_projected_step(base_sys, inner, next[n], H0, *cfg.projection,
                                                         mu0, &proj);
                next[n + 1] = std::move(step.state);
                half_next[n] = (step.outcome.stop == StopReason::C3 && inner_calls >= 2)
                                   ? std::move(half_a)
                                   : std::move(half_b);
                mu_warm = step.mu;
                recs[n].mu = step.mu;
                recs[n].newton = step.outcome;
                recs[n].has_newton = true;
            } catch (IntegrationBlowup& e) {
                annotate(e, n, k + 1);
                throw;
            } catch (InversionFailure& e) {
                e.window = n;
                e.iteration = k + 1;
                throw;
            } catch (DegenerateProjection& e) {
                e.window = n;
                e.iteration = k + 1;
                throw;
            }
        }
        run.ledger.coarse += sweep;
        run.ledger.projection += proj;
        run.ledger.per_iteration_critical_path.push_back(
            std::max(sweep.step_evals + proj.step_evals, task_path));
        sink.on_iteration(k + 1, std::span<const PhasePoint>(next),
                          std::span<const PhasePoint>(half_next), std::span<const WindowRecord>(recs));
        prev.swap(next);
        half_prev.swap(half_next);
    }

    run.final_states = std::move(prev);
    run.peak_state_buffers = meter.peak;
    return run;
}

} // namespace

PararealRun run_parareal(const PararealConfig& cfg, const PhasePoint& u0, WindowExecutor& exec,
                         RowSink& sink) {
    cfg.validate();
    if (u0.dim() != cfg.system->dim || u0.p.size() != u0.q.size())
        throw ConfigError("initial state dimension does not match the system");
    if (!u0.is_finite()) throw ConfigError("initial state is not finite");

    switch (cfg.variant) {
        case Variant::Plain:
        case Variant::PlainProjected:
            return run_plain_family(cfg, u0, exec, sink);
        case Variant::Symmetric:
        case Variant::SymmetricPerturbed:
        case Variant::SymmetricSymProjected:
        case Variant::SymmetricQsymProjected:
            return run_symmetric_family(cfg, u0, exec, sink);
    }
    throw ConfigError("unknown variant");
}

namespace {
PararealRun run_checked(const PararealConfig& cfg, const PhasePoint& u0, WindowExecutor& exec,
                        RowSink& sink, std::initializer_list<Variant> allowed) {
    for (Variant v : allowed)
        if (cfg.variant == v) return run_parareal(cfg, u0, exec, sink);
    throw ConfigError("config variant does not match the requested scheme");
}
} // namespace

PararealRun run_plain(const PararealConfig& cfg, const PhasePoint& u0, WindowExecutor& exec, RowSink& sink) {
    return run_checked(cfg, u0, exec, sink, {Variant::Plain});
}
PararealRun run_symmetric(const PararealConfig& cfg, const PhasePoint& u0, WindowExecutor& exec,
                          RowSink& sink) {
    return run_checked(cfg, u0, exec, sink, {Variant::Symmetric});
}
PararealRun run_symmetric_perturbed(const PararealConfig& cfg, const PhasePoint& u0, WindowExecutor& exec,
                                    RowSink& sink) {
    return run_checked(cfg, u0, exec, sink, {Variant::SymmetricPerturbed});
}
PararealRun run_plain_projected(const PararealConfig& cfg, const PhasePoint& u0, WindowExecutor& exec,
                                RowSink& sink) {
    return run_checked(cfg, u0, exec, sink, {Variant::PlainProjected});
}
PararealRun run_symmetric_projected(const PararealConfig& cfg, const PhasePoint& u0, WindowExecutor& exec,
                                    RowSink& sink) {
    return run_checked(cfg, u0, exec, sink,
                       {Variant::SymmetricSymProjected, Variant::SymmetricQsymProjected});
}

} // namespace parareal
