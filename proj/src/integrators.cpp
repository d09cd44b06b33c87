#include "parareal/integrators.hpp"

#include <cmath>
#include <cstdlib>
#include <string>

#include "parareal/errors.hpp"

namespace parareal {

int PropagatorSpec::steps() const {
    if (step == 0 || duration == 0)
        throw ConfigError("propagator spec needs non-zero step and duration");
    if ((step > 0) != (duration > 0))
        throw ConfigError("propagator step and duration must share a sign");
    double ratio = duration / step;
    double rounded = std::round(ratio);
    if (rounded < 1 || std::abs(ratio - rounded) > 1e-9 * std::abs(ratio))
        throw ConfigError("propagator duration must be a positive integer multiple of the step");
    return static_cast<int>(rounded);
}

namespace {

// In-place Verlet sweep reusing the trailing gradient between steps.
void verlet_sweep(const SystemDefinition& sys, PhasePoint& y, double h, int m, EvalTally* tally) {
    const int d = sys.dim;
    Vec grad(d), grad_next(d);
    Vec inv_mass(d);
    for (int i = 0; i < d; ++i) inv_mass[i] = 1.0 / sys.mass_diag[i];

    sys.potential_grad(y.q, grad);
    const double half_h = 0.5 * h;
    const double half_h2 = 0.5 * h * h;
    for (int s = 0; s < m; ++s) {
        double probe = 0;
        for (int i = 0; i < d; ++i) {
            y.q[i] += inv_mass[i] * (h * y.p[i] - half_h2 * grad[i]);
            probe += y.q[i];
        }
        sys.potential_grad(y.q, grad_next);
        for (int i = 0; i < d; ++i) {
            y.p[i] -= half_h * (grad[i] + grad_next[i]);
            probe += y.p[i];
        }
        if (!std::isfinite(probe) && !y.is_finite())
            throw IntegrationBlowup("non-finite state after integration step " + std::to_string(s), s);
        grad.swap(grad_next);
    }
    if (tally) {
        tally->step_evals += m;
        tally->call_evals += 1;
    }
}

} // namespace

PhasePoint verlet_step(const SystemDefinition& sys, const PhasePoint& y, double h, EvalTally* tally) {
    if (h == 0) throw ConfigError("verlet_step needs h != 0");
    PhasePoint out = y;
    verlet_sweep(sys, out, h, 1, tally);
    return out;
}

PhasePoint propagate(const SystemDefinition& sys, const PhasePoint& y, const PropagatorSpec& spec,
                     EvalTally* tally) {
    int m = spec.steps();
    PhasePoint out = y;
    verlet_sweep(sys, out, spec.step, m, tally);
    return out;
}

PhasePoint inverse_coarse(const SystemDefinition& sys, const PhasePoint& y, const PropagatorSpec& spec,
                          EvalTally* tally) {
    switch (spec.method) {
        case OneStepMethod::VelocityVerlet:
            // Psi_{-h}^{-1} = Psi_h, so G_{tau}^{-1} = G_{-tau} computed forward.
            return propagate(sys, y, spec.negated(), tally);
    }
    auto map = [&](const PhasePoint& z) { return propagate(sys, z, spec, tally); };
    return invert_one_step_map(map, y);
}

PhasePoint invert_one_step_map(const std::function<PhasePoint(const PhasePoint&)>& map,
                               const PhasePoint& target, double rel_tol, int max_iter) {
    PhasePoint z = target;
    const double scale = 1.0 + norm(target);
    for (int it = 0; it < max_iter; ++it) {
        PhasePoint r = map(z) - target;
        if (norm(r) <= rel_tol * scale) return z;
        z = z - r;
    }
    throw InversionFailure("fixed-point inversion did not converge after " + std::to_string(max_iter) +
                           " iterations");
}

} // namespace parareal
