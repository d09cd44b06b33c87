#include "parareal/projection.hpp"

#include <cmath>

#include "parareal/errors.hpp"

namespace parareal {

void ManifoldSpec::validate() const {
    if (observables.empty() || observables.size() > 2)
        throw ConfigError("manifold needs one or two invariants");
    if (observables.size() != targets.size())
        throw ConfigError("manifold observables and targets differ in length");
    if (observables[0].name != "energy")
        throw ConfigError("the first manifold invariant must be the energy");
    for (double t : targets)
        if (!std::isfinite(t)) throw ConfigError("manifold target is not finite");
}

const char* to_string(StopReason r) {
    switch (r) {
        case StopReason::C1: return "C1";
        case StopReason::C2: return "C2";
        case StopReason::C3: return "C3";
    }
    return "?";
}

namespace {

double safe_abs(double x) { return x == 0 ? 1.0 : std::abs(x); }

double grad_eval(const InvariantObservable& obs, const PhasePoint& y, Vec& out, EvalTally* tally) {
    out = obs.gradient(y);
    if (tally) tally->step_evals += 1;
    return 0;
}

} // namespace

std::pair<PhasePoint, NewtonOutcome> project_standard(const SystemDefinition& sys,
                                                      const ManifoldSpec& manifold,
                                                      const PhasePoint& y_tilde,
                                                      const ProjectionConfig& cfg,
                                                      EvalTally* tally) {
    (void)sys;
    manifold.validate();
    const std::size_t m = manifold.observables.size();

    std::vector<Vec> g_base(m);
    for (std::size_t j = 0; j < m; ++j)
        grad_eval(manifold.observables[j], y_tilde, g_base[j], tally);

    std::vector<double> lambda(m, 0.0);
    PhasePoint y = y_tilde;

    auto residuals = [&](const PhasePoint& z, std::vector<double>& r) {
        double err = 0;
        for (std::size_t j = 0; j < m; ++j) {
            r[j] = manifold.observables[j].value(z) - manifold.targets[j];
            err += std::abs(r[j]) / safe_abs(manifold.targets[j]);
        }
        return err;
    };

    std::vector<double> r(m);
    double err = residuals(y, r);
    NewtonOutcome out{0, err, StopReason::C1};
    if (err <= cfg.tol) return {y, out};

    // Simplified Newton with the Gram matrix frozen at the base point,
    // J_ij = grad I_i(y~) . grad I_j(y~); no gradient re-evaluations inside
    // the loop.
    double J = 0, a = 0, b = 0, cc = 0, d = 0, det = 0;
    if (m == 1) {
        J = dot(g_base[0], g_base[0]);
        if (std::abs(J) < 1e-14)
            throw DegenerateProjection("singular projection system (gradient collapse)");
    } else {
        a = dot(g_base[0], g_base[0]);
        b = dot(g_base[0], g_base[1]);
        cc = dot(g_base[1], g_base[0]);
        d = dot(g_base[1], g_base[1]);
        det = a * d - b * cc;
        if (std::abs(det) < 1e-14 * (std::abs(a * d) + std::abs(b * cc) + 1e-300))
            throw DegenerateProjection("singular two-invariant projection system");
    }

    PhasePoint y_prev = y;
    double err_prev = err;
    while (true) {
        if (m == 1) {
            lambda[0] -= r[0] / J;
        } else {
            lambda[0] -= (d * r[0] - b * r[1]) / det;
            lambda[1] -= (-cc * r[0] + a * r[1]) / det;
        }
        y = y_tilde;
        for (std::size_t j = 0; j < m; ++j) add_scaled(y, lambda[j], g_base[j]);
        ++out.iterations;

        err = residuals(y, r);
        if (err <= cfg.tol) {
            out.stop = StopReason::C1;
            out.residual = err;
            return {y, out};
        }
        if (out.iterations >= cfg.max_iter) {
            out.stop = StopReason::C2;
            out.residual = err;
            return {y, out};
        }
        if (err > err_prev) {
            out.stop = StopReason::C3;
            out.residual = err_prev;
            return {y_prev, out};
        }
        y_prev = y;
        err_prev = err;
    }
}

ProjectedStep symmetric_projected_step(const SystemDefinition& sys, const InnerMap& inner,
                                       const PhasePoint& y_n, double H0, const ProjectionConfig& cfg,
                                       double mu0, EvalTally* tally) {
    Vec g_n;
    grad_eval(sys.invariants[0], y_n, g_n, tally);

    double mu = mu0;
    PhasePoint psi = inner(with_scaled(y_n, mu, g_n)); // Psi(y~_n)
    PhasePoint y = psi;                                // candidate y_{n+1}
    if (mu != 0) {
        Vec g_seed;
        grad_eval(sys.invariants[0], psi, g_seed, tally);
        add_scaled(y, mu, g_seed);
    }

    Vec g_y;
    grad_eval(sys.invariants[0], y, g_y, tally);

    const double h_scale = safe_abs(H0);
    auto residual = [&](const PhasePoint& yc, const PhasePoint& psic, double muc, const Vec& g_yc,
                        PhasePoint& S1, double& S2) {
        PhasePoint hat = psic;
        add_scaled(hat, muc, g_yc);
        S1 = yc - hat;
        S2 = eval_energy(sys, hat) - H0;
        return norm(S1) / std::max(norm(yc), 1e-300) + std::abs(S2) / h_scale;
    };

    PhasePoint S1;
    double S2;
    double err = residual(y, psi, mu, g_y, S1, S2);
    NewtonOutcome out{0, err, StopReason::C1};
    if (err <= cfg.tol) return {y, mu, out};

    PhasePoint y_prev = y;
    double mu_prev = mu, err_prev = err;
    while (true) {
        // hat = Psi(y~_n) + mu grad H(y_{n+1}) is where the paper-style
        // Jacobian evaluates grad H for the bottom-right scalar.
        PhasePoint hat = psi;
        add_scaled(hat, mu, g_y);
        Vec g_hat;
        grad_eval(sys.invariants[0], hat, g_hat, tally);

        Vec coupling(g_n.size());
        for (std::size_t i = 0; i < coupling.size(); ++i) coupling[i] = g_n[i] + g_y[i];
        double s = dot(g_hat, coupling);
        if (std::abs(s) < 1e-14)
            throw DegenerateProjection("degenerate symmetric projection (gradient scalar ~ 0)");

        double dmu = -S2 / s;
        // Block solve: I * dy + (-coupling) * dmu = -S1.
        PhasePoint dy = S1;
        for (std::size_t i = 0; i < dy.q.size(); ++i) dy.q[i] = -S1.q[i] + coupling[i] * dmu;
        const std::size_t d = dy.q.size();
        for (std::size_t i = 0; i < dy.p.size(); ++i) dy.p[i] = -S1.p[i] + coupling[d + i] * dmu;
        y = y + dy;
        mu += dmu;
        ++out.iterations;

        psi = inner(with_scaled(y_n, mu, g_n));
        grad_eval(sys.invariants[0], y, g_y, tally);
        err = residual(y, psi, mu, g_y, S1, S2);
        if (err <= cfg.tol) {
            out.stop = StopReason::C1;
            out.residual = err;
            return {y, mu, out};
        }
        if (out.iterations >= cfg.max_iter) {
            out.stop = StopReason::C2;
            out.residual = err;
            return {y, mu, out};
        }
        if (err > err_prev) {
            out.stop = StopReason::C3;
            out.residual = err_prev;
            return {y_prev, mu_prev, out};
        }
        y_prev = y;
        mu_prev = mu;
        err_prev = err;
    }
}

ProjectedStep quasi_symmetric_projected_step(const SystemDefinition& sys, const InnerMap& inner,
                                             const PhasePoint& y_n, double H0,
                                             const ProjectionConfig& cfg, double mu0,
                                             EvalTally* tally) {
    Vec g_n;
    grad_eval(sys.invariants[0], y_n, g_n, tally);

    const double h_scale = safe_abs(H0);
    double mu = mu0;

    Vec g_tilde_n = g_n; // grad H(y~_n); equals g_n while mu == 0
    auto forward = [&](double muc, PhasePoint& yc) {
        PhasePoint y_tilde = with_scaled(y_n, muc, g_n);
        if (muc != 0) grad_eval(sys.invariants[0], y_tilde, g_tilde_n, tally);
        PhasePoint psi = inner(y_tilde);
        yc = std::move(psi);
        if (muc != 0) {
            Vec g_psi;
            grad_eval(sys.invariants[0], yc, g_psi, tally);
            add_scaled(yc, muc, g_psi);
        }
    };

    PhasePoint y;
    forward(mu, y);
    double S = eval_energy(sys, y) - H0;
    double err = std::abs(S) / h_scale;
    NewtonOutcome out{0, err, StopReason::C1};
    if (err <= cfg.tol) return {y, mu, out};

    PhasePoint y_prev = y;
    double mu_prev = mu, err_prev = err;
    while (true) {
        Vec g_y;
        grad_eval(sys.invariants[0], y, g_y, tally);
        double s = 0;
        for (std::size_t i = 0; i < g_y.size(); ++i) s += g_y[i] * (g_n[i] + g_tilde_n[i]);
        if (std::abs(s) < 1e-14)
            throw DegenerateProjection("degenerate quasi-symmetric projection (derivative ~ 0)");

        mu -= S / s;
        ++out.iterations;

        forward(mu, y);
        S = eval_energy(sys, y) - H0;
        err = std::abs(S) / h_scale;
        if (err <= cfg.tol) {
            out.stop = StopReason::C1;
            out.residual = err;
            return {y, mu, out};
        }
        if (out.iterations >= cfg.max_iter) {
            out.stop = StopReason::C2;
            out.residual = err;
            return {y, mu, out};
        }
        if (err > err_prev) {
            out.stop = StopReason::C3;
            out.residual = err_prev;
            return {y_prev, mu_prev, out};
        }
        y_prev = y;
        mu_prev = mu;
        err_prev = err;
    }
}

} // namespace parareal
