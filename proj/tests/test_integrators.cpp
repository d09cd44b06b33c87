#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "parareal/errors.hpp"
#include "parareal/integrators.hpp"
#include "parareal/system.hpp"
#include "test_util.hpp"

using namespace parareal;

namespace {
const double kPi = 3.14159265358979323846;
}

TEST_CASE("verlet step matches the hand-evaluated oscillator update") {
    auto ho = make_harmonic(1.0);
    PhasePoint y({1.0}, {0.0});
    PhasePoint out = verlet_step(ho, y, 0.1);
    // q' = 1 + 0.1*0 - 0.005*1, p' = 0 - 0.05*(1 + 0.995)
    CHECK(out.q[0] == doctest::Approx(0.995).epsilon(1e-15));
    CHECK(out.p[0] == doctest::Approx(-0.09975).epsilon(1e-15));
}

TEST_CASE("origin is a fixed point of the oscillator flow") {
    auto ho = make_harmonic(1.0);
    PhasePoint y({0.0}, {0.0});
    for (double h : {1e-3, 0.1, -0.25}) {
        PhasePoint out = verlet_step(ho, y, h);
        CHECK(out.q[0] == 0.0);
        CHECK(out.p[0] == 0.0);
    }
}

TEST_CASE("verlet is symmetric: stepping h then -h returns the state") {
    auto ho = make_harmonic(1.0);
    auto kp = make_kepler(1.0);
    auto g = testutil::rng();
    for (int i = 0; i < 100; ++i) {
        PhasePoint y = testutil::random_ho_state(g);
        PhasePoint back = verlet_step(ho, verlet_step(ho, y, 0.1), -0.1);
        CHECK(rel_diff(back, y) <= 1e-11);

        PhasePoint z = testutil::random_kepler_state(g);
        PhasePoint zb = verlet_step(kp, verlet_step(kp, z, 0.05), -0.05);
        CHECK(rel_diff(zb, z) <= 1e-11);
    }
}

TEST_CASE("verlet is rho-reversible: rho o Psi_h = Psi_-h o rho") {
    auto kp = make_kepler(1.0);
    auto g = testutil::rng(7);
    for (int i = 0; i < 100; ++i) {
        PhasePoint y = testutil::random_kepler_state(g);
        PhasePoint lhs = momentum_flip(verlet_step(kp, y, 0.05));
        PhasePoint rhs = verlet_step(kp, momentum_flip(y), -0.05);
        CHECK(rel_diff(lhs, rhs) <= 1e-12);
    }
}

TEST_CASE("verlet is second order on the oscillator") {
    auto ho = make_harmonic(1.0);
    // exact flow of (q,p) = (1,0): q = cos t, p = -sin t
    auto max_err = [&](double h) {
        PhasePoint y({1.0}, {0.0});
        int steps = static_cast<int>(std::llround(2 * kPi / h));
        double worst = 0;
        EvalTally t;
        for (int s = 1; s <= steps; ++s) {
            y = verlet_step(ho, y, h);
            double time = s * h;
            PhasePoint exact({std::cos(time)}, {-std::sin(time)});
            worst = std::max(worst, norm(y - exact));
        }
        return worst;
    };
    double h = 2 * kPi / 256;
    double ratio = max_err(h) / max_err(h / 2);
    CHECK(ratio >= 3.5);
    CHECK(ratio <= 4.5);
}

TEST_CASE("one verlet step is symplectic (numerical Jacobian, d = 1)") {
    auto ho = make_harmonic(1.0);
    auto g = testutil::rng(11);
    const double eps = 1e-6;
    for (int i = 0; i < 100; ++i) {
        PhasePoint y = testutil::random_ho_state(g);
        auto shift = [&](double dq, double dp) {
            PhasePoint z = y;
            z.q[0] += dq;
            z.p[0] += dp;
            return verlet_step(ho, z, 0.1);
        };
        PhasePoint qp = shift(eps, 0), qm = shift(-eps, 0);
        PhasePoint pp = shift(0, eps), pm = shift(0, -eps);
        double a = (qp.q[0] - qm.q[0]) / (2 * eps);
        double b = (pp.q[0] - pm.q[0]) / (2 * eps);
        double c = (qp.p[0] - qm.p[0]) / (2 * eps);
        double d = (pp.p[0] - pm.p[0]) / (2 * eps);
        CHECK(std::abs(a * d - b * c - 1.0) <= 1e-6);
    }
}

TEST_CASE("verlet conserves Kepler angular momentum exactly") {
    auto kp = make_kepler(1.0);
    auto g = testutil::rng(13);
    const auto* L = kp.find_invariant("angular_momentum");
    REQUIRE(L != nullptr);
    // Kicks are parallel to q and drifts add p x p = 0, so any drift in L is
    // pure roundoff. Near-radial orbits (tiny L) make the relative measure
    // ill-conditioned and are excluded.
    for (int i = 0; i < 20; ++i) {
        PhasePoint y = testutil::random_kepler_state(g, 0.4);
        double L0 = L->value(y);
        for (int s = 0; s < 500; ++s) {
            y = verlet_step(kp, y, 0.01);
            CHECK(std::abs(L->value(y) - L0) <= 1e-12 * std::abs(L0));
        }
    }
}

TEST_CASE("propagate with one step equals verlet_step") {
    auto kp = make_kepler(1.0);
    PhasePoint y = kepler_initial_state(0.6);
    PhasePoint a = verlet_step(kp, y, 0.01);
    PhasePoint b = propagate(kp, y, {0.01, 0.01});
    CHECK(a.q == b.q);
    CHECK(a.p == b.p);
}

TEST_CASE("propagate closes the unit-frequency oscillator orbit over one period") {
    auto ho = make_harmonic(1.0);
    PhasePoint y({1.0}, {0.0});
    double period = 2 * kPi;
    double dt = period / 6284.0;  // ~1e-3, divides the period exactly
    PhasePoint out = propagate(ho, y, {dt, period});
    CHECK(norm(out - y) <= 1e-6);  // phase error ~ h^2/24 per period
}

TEST_CASE("propagate composes: forward then backward recovers a Kepler state") {
    auto kp = make_kepler(1.0);
    PhasePoint y = kepler_initial_state(0.6);
    PhasePoint fwd = propagate(kp, y, {1e-3, 2.0});
    PhasePoint back = propagate(kp, fwd, {-1e-3, -2.0});
    CHECK(rel_diff(back, y) <= 1e-10);
}

TEST_CASE("propagate validates the spec") {
    auto ho = make_harmonic(1.0);
    PhasePoint y({1.0}, {0.0});
    CHECK_THROWS_AS(propagate(ho, y, {0.1, -0.2}), ConfigError);     // sign mismatch
    CHECK_THROWS_AS(propagate(ho, y, {0.3, 0.2}), ConfigError);      // non-integer ratio
    CHECK_THROWS_AS(propagate(ho, y, {0.0, 0.2}), ConfigError);      // zero step
    CHECK_NOTHROW(propagate(ho, y, {-0.1, -0.2}));
}

TEST_CASE("near-collision Kepler orbit raises an integration blowup") {
    auto kp = make_kepler(1.0);
    PhasePoint y({1e-161, 0.0}, {0.0, 0.0});
    try {
        propagate(kp, y, {1e-3, 1.0});
        FAIL("expected IntegrationBlowup");
    } catch (const IntegrationBlowup& e) {
        CHECK(e.step_index >= 0);
    }
}

TEST_CASE("inverse_coarse of a symmetric method is the negated propagation, bit for bit") {
    auto kp = make_kepler(1.0);
    PhasePoint y = kepler_initial_state(0.6);
    PropagatorSpec spec{-0.01, -0.2};  // the usual G_{-DT/2} piece
    PhasePoint inv = inverse_coarse(kp, y, spec);
    PhasePoint neg = propagate(kp, y, spec.negated());
    CHECK(inv.q == neg.q);
    CHECK(inv.p == neg.p);
}

TEST_CASE("inverse_coarse round trip: propagate(inverse(y)) = y") {
    auto kp = make_kepler(1.0);
    auto g = testutil::rng(17);
    PropagatorSpec spec{-0.01, -0.1};
    for (int i = 0; i < 50; ++i) {
        PhasePoint y = testutil::random_kepler_state(g);
        PhasePoint z = inverse_coarse(kp, y, spec);
        CHECK(rel_diff(propagate(kp, z, spec), y) <= 1e-12);
    }
}

TEST_CASE("inverse of two backward oscillator steps is two forward steps") {
    auto ho = make_harmonic(1.0);
    PhasePoint y({0.7}, {0.3});
    PhasePoint inv = inverse_coarse(ho, y, {-0.1, -0.2});
    PhasePoint fwd = verlet_step(ho, verlet_step(ho, y, 0.1), 0.1);
    CHECK(inv.q[0] == fwd.q[0]);
    CHECK(inv.p[0] == fwd.p[0]);
}

TEST_CASE("fixed-point fallback inverts a non-symmetric one-step map") {
    auto kp = make_kepler(1.0);
    const double h = 1e-3;
    // forward Euler, deliberately not symmetric
    auto euler = [&](const PhasePoint& y) {
        Vec g(2);
        kp.potential_grad(y.q, g);
        PhasePoint out = y;
        out.q[0] += h * y.p[0];
        out.q[1] += h * y.p[1];
        out.p[0] -= h * g[0];
        out.p[1] -= h * g[1];
        return out;
    };
    PhasePoint y = kepler_initial_state(0.6);
    PhasePoint target = euler(y);
    PhasePoint z = invert_one_step_map(euler, target);
    CHECK(rel_diff(euler(z), target) <= 1e-11);
    CHECK(rel_diff(z, y) <= 1e-10);
}

TEST_CASE("fixed-point fallback reports non-convergence") {
    // A map far from the identity defeats plain fixed-point iteration.
    auto doubling = [](const PhasePoint& y) {
        PhasePoint out = y;
        for (double& v : out.q) v *= -3.0;
        for (double& v : out.p) v *= -3.0;
        return out;
    };
    PhasePoint target({1.0}, {1.0});
    CHECK_THROWS_AS(invert_one_step_map(doubling, target), InversionFailure);
}

TEST_CASE("propagation cost: one gradient per step plus one per call") {
    auto ho = make_harmonic(1.0);
    PhasePoint y({1.0}, {0.0});
    EvalTally t;
    propagate(ho, y, {0.1, 1.0}, &t);
    CHECK(t.step_evals == 10);
    CHECK(t.call_evals == 1);
    CHECK(t.total() == 11);
}
