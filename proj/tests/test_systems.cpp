#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <fstream>

#include "parareal/errors.hpp"
#include "parareal/system.hpp"
#include "test_util.hpp"

using namespace parareal;

TEST_CASE("oscillator energy and gradient at (1, 0)") {
    auto ho = make_harmonic(1.0);
    PhasePoint y({1.0}, {0.0});
    CHECK(eval_energy(ho, y) == doctest::Approx(0.5).epsilon(1e-15));
    Vec g = eval_grad_H(ho, y);
    CHECK(g[0] == 1.0);
    CHECK(g[1] == 0.0);
}

TEST_CASE("Kepler invariants at q=(1,0), p=(0,1)") {
    auto kp = make_kepler(1.0);
    PhasePoint y({1.0, 0.0}, {0.0, 1.0});
    CHECK(eval_energy(kp, y) == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK(kp.find_invariant("angular_momentum")->value(y) == doctest::Approx(1.0).epsilon(1e-15));
    Vec g = eval_grad_H(kp, y);
    CHECK(g[0] == doctest::Approx(1.0).epsilon(1e-15));  // dV = q/|q|^3
    CHECK(g[1] == doctest::Approx(0.0));
    CHECK(g[2] == doctest::Approx(0.0));
    CHECK(g[3] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("default Kepler state: eccentric orbit with H = -1/2, |A| = e") {
    auto kp = make_kepler(1.0);
    PhasePoint y = kepler_initial_state(0.6);
    CHECK(eval_energy(kp, y) == doctest::Approx(-0.5).epsilon(1e-14));
    CHECK(kp.find_invariant("angular_momentum")->value(y) == doctest::Approx(0.8).epsilon(1e-14));
    double a1 = kp.find_invariant("runge_lenz_1")->value(y);
    double a2 = kp.find_invariant("runge_lenz_2")->value(y);
    CHECK(std::hypot(a1, a2) == doctest::Approx(0.6).epsilon(1e-13));
}

namespace {

void check_gradients(const SystemDefinition& sys, const PhasePoint& y) {
    // potential gradient against central differences of the potential
    Vec gq(sys.dim);
    sys.potential_grad(y.q, gq);
    auto vq = [&](const PhasePoint& z) { return sys.potential(z.q); };
    Vec fd = testutil::fd_gradient(vq, y);
    double scale = 1.0 + norm(gq);
    for (int i = 0; i < sys.dim; ++i) CHECK(std::abs(fd[i] - gq[i]) <= 1e-6 * scale);

    // eval_grad_H against central differences of eval_energy
    Vec gh = eval_grad_H(sys, y);
    auto hq = [&](const PhasePoint& z) { return eval_energy(sys, z); };
    Vec fdh = testutil::fd_gradient(hq, y);
    double hscale = 1.0 + norm(gh);
    for (std::size_t i = 0; i < gh.size(); ++i) CHECK(std::abs(fdh[i] - gh[i]) <= 1e-6 * hscale);

    // each named invariant
    for (const auto& obs : sys.invariants) {
        Vec g = obs.gradient(y);
        Vec f = testutil::fd_gradient(obs.value, y);
        double s = 1.0 + norm(g);
        for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(f[i] - g[i]) <= 1e-6 * s);
    }
}

PhasePoint random_solar_state(std::mt19937_64& g, const PhasePoint& base) {
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    std::uniform_real_distribution<double> v(-1e-5, 1e-5);
    PhasePoint y = base;
    for (double& x : y.q) x += u(g);
    for (double& x : y.p) x += v(g);
    return y;
}

} // namespace

TEST_CASE("gradient consistency on all shipped systems") {
    auto g = testutil::rng(101);
    auto ho = make_harmonic(1.0);
    auto kp = make_kepler(1.0);
    for (int i = 0; i < 1000; ++i) check_gradients(ho, testutil::random_ho_state(g));
    for (int i = 0; i < 1000; ++i) check_gradients(kp, testutil::random_kepler_state(g));

    auto data = load_solar_data(testutil::solar_data_file());
    auto full = make_solar_full(data);
    auto simp = make_solar_simplified(data);
    PhasePoint base = solar_initial_state(data);
    for (int i = 0; i < 50; ++i) {
        PhasePoint y = random_solar_state(g, base);
        check_gradients(full, y);
        check_gradients(simp, y);
    }
}

TEST_CASE("full potential = simplified potential + planet-pair sum") {
    auto data = load_solar_data(testutil::solar_data_file());
    auto full = make_solar_full(data);
    auto simp = make_solar_simplified(data);
    auto g = testutil::rng(103);
    PhasePoint base = solar_initial_state(data);
    for (int i = 0; i < 200; ++i) {
        PhasePoint y = random_solar_state(g, base);
        double pair_sum = 0;
        for (int a = 1; a < kSolarBodies; ++a)
            for (int b = a + 1; b < kSolarBodies; ++b) {
                double dx = y.q[3 * a] - y.q[3 * b];
                double dy = y.q[3 * a + 1] - y.q[3 * b + 1];
                double dz = y.q[3 * a + 2] - y.q[3 * b + 2];
                pair_sum -= data.G * data.mass[a] * data.mass[b] / std::sqrt(dx * dx + dy * dy + dz * dz);
            }
        double vf = full.potential(y.q);
        double vs = simp.potential(y.q);
        CHECK(std::abs(vf - (vs + pair_sum)) <= 1e-14 * std::abs(vf));
    }
}

TEST_CASE("solar potentials are translation invariant") {
    auto data = load_solar_data(testutil::solar_data_file());
    auto full = make_solar_full(data);
    auto simp = make_solar_simplified(data);
    PhasePoint y = solar_initial_state(data);
    for (double c : {0.5, -2.0, 17.25}) {
        Vec shifted = y.q;
        for (double& v : shifted) v += c;
        CHECK(std::abs(full.potential(shifted) - full.potential(y.q)) <=
              1e-12 * std::abs(full.potential(y.q)));
        CHECK(std::abs(simp.potential(shifted) - simp.potential(y.q)) <=
              1e-12 * std::abs(simp.potential(y.q)));
    }
}

TEST_CASE("solar data file carries the expected shape") {
    auto data = load_solar_data(testutil::solar_data_file());
    CHECK(data.G == doctest::Approx(2.95912208286e-4).epsilon(1e-12));
    CHECK(data.mass[0] > 1.0);      // Sun plus inner planets
    CHECK(data.mass[0] / data.mass[1] > 1000.0);
    auto full = make_solar_full(data);
    CHECK(full.dim == 18);
    PhasePoint y = solar_initial_state(data);
    CHECK(y.dim() == 18);
    CHECK(eval_energy(full, y) < 0);  // bound system
}

TEST_CASE("missing or malformed solar data files raise config errors") {
    CHECK_THROWS_AS(load_solar_data("/nonexistent/file.dat"), ConfigError);
    std::string tmp = "/tmp/parareal_bad_solar.dat";
    std::ofstream(tmp) << "G = 1.0\nbody.1.mass = 1.0\n";  // incomplete
    CHECK_THROWS_AS(load_solar_data(tmp), ConfigError);
    std::ofstream(tmp) << "G = 1.0\nbogus_key = 2\n";
    CHECK_THROWS_AS(load_solar_data(tmp), ConfigError);
}

TEST_CASE("coincident bodies raise a singularity error") {
    auto data = load_solar_data(testutil::solar_data_file());
    auto full = make_solar_full(data);
    PhasePoint y = solar_initial_state(data);
    for (int c = 0; c < 3; ++c) y.q[3 * 1 + c] = y.q[3 * 2 + c];  // Jupiter onto Saturn
    CHECK_THROWS_AS(full.potential(y.q), SingularityError);
    Vec g(18);
    CHECK_THROWS_AS(full.potential_grad(y.q, g), SingularityError);

    auto kp = make_kepler(1.0);
    Vec origin{0.0, 0.0};
    CHECK_THROWS_AS(kp.potential(origin), SingularityError);
}

TEST_CASE("perturbation schedule must end at the exact value") {
    PerturbationSchedule s;
    s.values = {1.1, 0.9, 1.05, 0.95, 1.0};
    s.exact_value = 1.0;
    CHECK_NOTHROW(s.validate());
    s.values.back() = 0.999;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s.values.clear();
    CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("build_system dispatches by kind") {
    SystemParams p;
    p.omega = 2.0;
    CHECK(build_system(SystemKind::Harmonic, p).label == "harmonic(omega=2)");
    p.alpha = 0.9;
    CHECK(build_system(SystemKind::Kepler, p).dim == 2);
    p.data_file = testutil::solar_data_file();
    CHECK(build_system(SystemKind::SolarFull, p).label == "solar_full");
    CHECK(build_system(SystemKind::SolarSimplified, p).label == "solar_simplified");
    CHECK_THROWS_AS(make_harmonic(-1.0), ConfigError);
    CHECK_THROWS_AS(make_kepler(0.0), ConfigError);
    CHECK_THROWS_AS(kepler_initial_state(1.0), ConfigError);
}
