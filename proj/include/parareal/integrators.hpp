#pragma once

#include <functional>

#include "parareal/phase_point.hpp"
#include "parareal/system.hpp"

namespace parareal {

// Gradient-evaluation tally. A propagate call over m steps performs m + 1
// potential-gradient evaluations: one per step plus the leading one that
// consecutive steps share. `step_evals` carries the per-step charges (the
// quantity the complexity model is written in), `call_evals` the once-per-call
// extras. Single gradient evaluations made by projections count as one
// step_eval.
struct EvalTally {
    long long step_evals = 0;
    long long call_evals = 0;

    long long total() const { return step_evals + call_evals; }
    EvalTally& operator+=(const EvalTally& o) {
        step_evals += o.step_evals;
        call_evals += o.call_evals;
        return *this;
    }
};

enum class OneStepMethod { VelocityVerlet };

// One-step method plus inner step and signed total duration. Instantiates the
// fine map (step = fine dt) and the coarse map (step = coarse dt), including
// backward pieces such as duration -DT/2 with step -dt.
struct PropagatorSpec {
    double step = 0;
    double duration = 0;
    OneStepMethod method = OneStepMethod::VelocityVerlet;

    // duration / step; throws ConfigError unless it is a positive integer
    // and step and duration share a sign.
    int steps() const;

    PropagatorSpec negated() const { return {-step, -duration, method}; }
    PropagatorSpec half_duration() const { return {step, duration / 2, method}; }
};

// One velocity Verlet step of size h:
//   q' = q + M^-1 (h p - h^2/2 dV(q)),  p' = p - h/2 (dV(q) + dV(q')).
// Explicit, order 2, symmetric, symplectic.
PhasePoint verlet_step(const SystemDefinition& sys, const PhasePoint& y, double h,
                       EvalTally* tally = nullptr);

// m-fold composition of the one-step method, m = spec.duration / spec.step.
PhasePoint propagate(const SystemDefinition& sys, const PhasePoint& y, const PropagatorSpec& spec,
                     EvalTally* tally = nullptr);

// z such that propagate(sys, z, spec) == y. Verlet is symmetric, so the
// inverse is exactly the propagation with step and duration negated; a
// fixed-point fallback (tolerance 1e-12 relative, 50 iterations) covers
// non-symmetric one-step methods.
PhasePoint inverse_coarse(const SystemDefinition& sys, const PhasePoint& y, const PropagatorSpec& spec,
                          EvalTally* tally = nullptr);

// Fixed-point inversion of a near-identity one-step map; used by the
// inverse_coarse fallback and exposed for testing. Throws InversionFailure.
PhasePoint invert_one_step_map(const std::function<PhasePoint(const PhasePoint&)>& map,
                               const PhasePoint& target, double rel_tol = 1e-12, int max_iter = 50);

} // namespace parareal
