#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <memory>

#include "parareal/cost.hpp"
#include "parareal/errors.hpp"
#include "parareal/executor.hpp"
#include "parareal/metrics.hpp"
#include "parareal/schemes.hpp"
#include "test_util.hpp"

using namespace parareal;

namespace {

PararealConfig small_kepler(Variant v, int N, int K) {
    PararealConfig c;
    c.system = std::make_shared<SystemDefinition>(make_kepler(1.0));
    c.horizon = N * 0.2;
    c.window = 0.2;
    c.windows = N;
    c.iterations = K;
    c.fine = {1e-3, 0.2};
    c.coarse = {0.01, 0.2};
    c.variant = v;
    return c;
}

bool same_grid(const CollectingSink& a, const CollectingSink& b) {
    if (a.states.size() != b.states.size()) return false;
    for (std::size_t k = 0; k < a.states.size(); ++k) {
        if (a.states[k].size() != b.states[k].size()) return false;
        for (std::size_t n = 0; n < a.states[k].size(); ++n)
            if (a.states[k][n].q != b.states[k][n].q || a.states[k][n].p != b.states[k][n].p)
                return false;
    }
    return true;
}

} // namespace

TEST_CASE("worker count never changes the results, bit for bit") {
    for (Variant v : {Variant::Plain, Variant::Symmetric}) {
        auto c = small_kepler(v, 12, 4);
        PhasePoint u0 = kepler_initial_state(0.6);
        CollectingSink s1, s2, s8;
        WindowExecutor e1(1), e2(2), e8(8);
        run_parareal(c, u0, e1, s1);
        run_parareal(c, u0, e2, s2);
        run_parareal(c, u0, e8, s8);
        CHECK(same_grid(s1, s2));
        CHECK(same_grid(s1, s8));
    }
}

TEST_CASE("executor runs every index exactly once") {
    WindowExecutor exec(8);
    std::vector<std::atomic<int>> hits(200);
    exec.run_windows(200, [&](std::size_t i) { hits[i].fetch_add(1); });
    for (auto& h : hits) CHECK(h.load() == 1);
}

TEST_CASE("task failures surface deterministically with the window index") {
    WindowExecutor exec(4);
    auto boom = [&](std::size_t i) {
        if (i == 3 || i == 7) throw IntegrationBlowup("boom at " + std::to_string(i), (long long)i);
    };
    try {
        exec.run_windows(16, boom);
        FAIL("expected throw");
    } catch (const IntegrationBlowup& e) {
        CHECK(e.step_index == 3);  // lowest failing index wins
    }
}

TEST_CASE("ledger conservation: fine evaluations match the scheduled tasks exactly") {
    auto c = small_kepler(Variant::Plain, 10, 3);
    PhasePoint u0 = kepler_initial_state(0.6);
    WindowExecutor exec(2);
    NullSink sink;
    auto run = run_plain(c, u0, exec, sink);
    // K iterations x N windows, each one fine propagate of DT/dt steps + 1
    long long per_task = 200 + 1;
    CHECK(run.ledger.grad_evals_fine() == 3LL * 10 * per_task);
    // coarse: initial sweep + per iteration (task G + sweep G), 20+1 per call
    long long coarse_calls = 10 + 3 * (10 + 10);
    CHECK(run.ledger.grad_evals_coarse() == coarse_calls * 21);
}

TEST_CASE("symmetric ledger counts four half-window maps per task") {
    auto c = small_kepler(Variant::Symmetric, 8, 2);
    PhasePoint u0 = kepler_initial_state(0.6);
    WindowExecutor exec(2);
    NullSink sink;
    auto run = run_symmetric(c, u0, exec, sink);
    // fine: K x N x (two half propagations of 100 steps + a call apiece)
    CHECK(run.ledger.grad_evals_fine() == 2LL * 8 * (2 * (100 + 1)));
    // coarse: init sweep 2 calls/window of 10+1, then per iteration
    // 2 task calls + 2 sweep calls per window, each 10+1
    long long expect = 8 * 2 * 11 + 2LL * 8 * (2 + 2) * 11;
    CHECK(run.ledger.grad_evals_coarse() == expect);
}

TEST_CASE("per-iteration critical path: pipelined, never worse than a barrier") {
    auto c = small_kepler(Variant::Plain, 10, 3);
    PhasePoint u0 = kepler_initial_state(0.6);
    WindowExecutor exec(2);
    NullSink sink;
    auto run = run_plain(c, u0, exec, sink);
    REQUIRE(run.ledger.per_iteration_critical_path.size() == 4);
    // initial sweep: N windows x DT/dT steps
    CHECK(run.ledger.per_iteration_critical_path[0] == 200);
    for (int k = 1; k <= 3; ++k) {
        long long cp = run.ledger.per_iteration_critical_path[k];
        long long task = 200 + 20;   // one window: fine + coarse steps
        long long sweep = 10 * 20;   // sequential coarse
        CHECK(cp == std::max(task, sweep));
        CHECK(cp <= task + sweep);  // barrier schedule
    }
}

TEST_CASE("regime classification follows the window-work comparison") {
    // DT/dt = 200 < T/dT = 2000: coarse dominated (toy oscillator grid)
    PararealConfig ho;
    ho.system = std::make_shared<SystemDefinition>(make_harmonic(1.0));
    ho.horizon = 200.0;
    ho.window = 0.2;
    ho.windows = 1000;
    ho.iterations = 5;
    ho.fine = {1e-3, 0.2};
    ho.coarse = {0.1, 0.2};
    CHECK(classify_regime(ho) == CostRegime::CoarseDominated);

    // solar-style grid: DT/dt = 20000 > T/dT = 4000
    PararealConfig solar = ho;
    solar.horizon = 2e5;
    solar.window = 200;
    solar.windows = 1000;
    solar.fine = {1e-2, 200};
    solar.coarse = {50, 200};
    CHECK(classify_regime(solar) == CostRegime::FineDominated);
}

TEST_CASE("predicted speedup: 1000 processors over 15 iterations is about 66") {
    PararealConfig solar;
    solar.system = std::make_shared<SystemDefinition>(make_harmonic(1.0));  // grid is all that matters
    solar.horizon = 2e5;
    solar.window = 200;
    solar.windows = 1000;
    solar.iterations = 15;
    solar.fine = {1e-2, 200};
    solar.coarse = {50, 200};
    auto rep = predict_cost(solar, 15, 1.12);
    CHECK(rep.regime == CostRegime::FineDominated);
    CHECK(rep.processors == 1000);
    CHECK(rep.sequential_cost == 20000000);
    CHECK(rep.predicted_cost == 15 * 20000);
    CHECK(rep.speedup == doctest::Approx(1000.0 / 15.0).epsilon(1e-12));
}

TEST_CASE("one window and one iteration yield speedup one") {
    PararealConfig c;
    c.system = std::make_shared<SystemDefinition>(make_harmonic(1.0));
    c.horizon = 1.0;
    c.window = 1.0;
    c.windows = 1;
    c.iterations = 1;
    c.fine = {1e-3, 1.0};
    c.coarse = {0.1, 1.0};
    auto rep = predict_cost(c, 1, 0.0);
    CHECK(rep.regime == CostRegime::FineDominated);
    CHECK(rep.speedup == doctest::Approx(1.0));
}

TEST_CASE("coarse-dominated prediction carries the extra initial sweep") {
    PararealConfig ho;
    ho.system = std::make_shared<SystemDefinition>(make_harmonic(1.0));
    ho.horizon = 1e4;
    ho.window = 0.2;
    ho.windows = 50000;
    ho.iterations = 5;
    ho.fine = {1e-3, 0.2};
    ho.coarse = {0.1, 0.2};
    auto rep = predict_cost(ho, 5, 0.0);
    CHECK(rep.regime == CostRegime::CoarseDominated);
    CHECK(rep.predicted_cost == 6LL * 100000);
    CHECK(rep.sequential_cost == 10000000);
}

TEST_CASE("measured over predicted stays in band on a fine-dominated run") {
    PararealConfig c;
    c.system = std::make_shared<SystemDefinition>(make_kepler(1.0));
    c.horizon = 4.0;
    c.window = 1.0;
    c.windows = 4;
    c.iterations = 3;
    c.fine = {1e-3, 1.0};   // 1000 steps per window
    c.coarse = {0.5, 1.0};  // T/dT = 8
    PhasePoint u0 = kepler_initial_state(0.3);
    WindowExecutor exec(2);
    NullSink sink;
    auto run = run_plain(c, u0, exec, sink);
    auto rep = predict_cost(c, c.iterations, 0.0);
    REQUIRE(rep.regime == CostRegime::FineDominated);
    auto ratios = measured_vs_predicted(run, rep);
    REQUIRE(ratios.size() == 4);
    for (std::size_t k = 1; k < ratios.size(); ++k) {
        CHECK(ratios[k] >= 0.9);
        CHECK(ratios[k] <= 1.3);
    }
}
