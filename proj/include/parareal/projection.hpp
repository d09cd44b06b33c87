#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "parareal/integrators.hpp"
#include "parareal/phase_point.hpp"
#include "parareal/system.hpp"

namespace parareal {

// Target manifold { I_j(q,p) = target_j }. One or two invariants; the first
// one is always the energy.
struct ManifoldSpec {
    std::vector<InvariantObservable> observables;
    std::vector<double> targets;

    void validate() const;
};

enum class ProjectionMode { Standard, Symmetric, QuasiSymmetric };

struct ProjectionConfig {
    double tol = 1e-7;
    int max_iter = 2;
    ProjectionMode mode = ProjectionMode::Standard;
};

// Why the Newton loop stopped:
//   C1 - the error dropped below tol,
//   C2 - max_iter updates were spent,
//   C3 - the error rose, so the previous iterate is kept.
enum class StopReason { C1, C2, C3 };

const char* to_string(StopReason r);

struct NewtonOutcome {
    // Residual evaluations spent, the entry check included: an input already
    // inside the tolerance reports 1, and max_iter = 2 admits one update.
    int iterations = 0;
    double residual = 0;  // error of the returned state
    StopReason stop = StopReason::C1;
};

// y = y~ + sum_j lambda_j grad I_j(y~) with the multipliers determined by
// Newton iteration on I_j(y) = target_j starting from lambda = 0. The error
// driving C1/C3 is sum_j |I_j(y) - target_j| / |target_j|.
std::pair<PhasePoint, NewtonOutcome> project_standard(const SystemDefinition& sys,
                                                      const ManifoldSpec& manifold,
                                                      const PhasePoint& y_tilde,
                                                      const ProjectionConfig& cfg,
                                                      EvalTally* tally = nullptr);

using InnerMap = std::function<PhasePoint(const PhasePoint&)>;

struct ProjectedStep {
    PhasePoint state;
    double mu = 0;
    NewtonOutcome outcome;
};

// Symmetric projection wrapped around a symmetric map Psi:
//   y~_n = y_n + mu grad H(y_n),  y~_{n+1} = Psi(y~_n),
//   y_{n+1} = y~_{n+1} + mu grad H(y_{n+1}),   H(y_{n+1}) = H0,
// solved as a coupled system for (y_{n+1}, mu) with an approximate Jacobian
// that only requires gradients of H. Residual for C1/C3 is
// |S1|/|y_{n+1}| + |S2|/|H0|.
//
// Contract for callers tracking side effects of `inner`: the returned iterate
// corresponds to the latest inner-map evaluation for stops C1 and C2, and to
// the one before it for C3.
ProjectedStep symmetric_projected_step(const SystemDefinition& sys, const InnerMap& inner,
                                       const PhasePoint& y_n, double H0, const ProjectionConfig& cfg,
                                       double mu0 = 0.0, EvalTally* tally = nullptr);

// Quasi-symmetric variant: the post-correction uses grad H(y~_{n+1}), making
// y_{n+1} explicit once mu is known. Scalar Newton on H(y_{n+1}(mu)) = H0 with
// derivative grad H(y_{n+1})^T (grad H(y_n) + grad H(y~_n)); the C1/C3 error is
// the relative energy error. Same inner-evaluation contract as above.
ProjectedStep quasi_symmetric_projected_step(const SystemDefinition& sys, const InnerMap& inner,
                                             const PhasePoint& y_n, double H0,
                                             const ProjectionConfig& cfg, double mu0 = 0.0,
                                             EvalTally* tally = nullptr);

} // namespace parareal
