#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace parareal {

using Vec = std::vector<double>;

// State u = (q, p) of a separable Hamiltonian system, dimension d each.
struct PhasePoint {
    Vec q;
    Vec p;

    PhasePoint() = default;
    PhasePoint(Vec q_, Vec p_) : q(std::move(q_)), p(std::move(p_)) {}

    int dim() const { return static_cast<int>(q.size()); }

    bool is_finite() const {
        for (double v : q)
            if (!std::isfinite(v)) return false;
        for (double v : p)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

inline PhasePoint operator+(const PhasePoint& a, const PhasePoint& b) {
    PhasePoint r = a;
    for (std::size_t i = 0; i < r.q.size(); ++i) r.q[i] += b.q[i];
    for (std::size_t i = 0; i < r.p.size(); ++i) r.p[i] += b.p[i];
    return r;
}

inline PhasePoint operator-(const PhasePoint& a, const PhasePoint& b) {
    PhasePoint r = a;
    for (std::size_t i = 0; i < r.q.size(); ++i) r.q[i] -= b.q[i];
    for (std::size_t i = 0; i < r.p.size(); ++i) r.p[i] -= b.p[i];
    return r;
}

// y += a * g where g is a phase-space vector of length 2d, q-part first.
inline void add_scaled(PhasePoint& y, double a, const Vec& g) {
    const std::size_t d = y.q.size();
    for (std::size_t i = 0; i < d; ++i) y.q[i] += a * g[i];
    for (std::size_t i = 0; i < d; ++i) y.p[i] += a * g[d + i];
}

inline PhasePoint with_scaled(const PhasePoint& y, double a, const Vec& g) {
    PhasePoint r = y;
    add_scaled(r, a, g);
    return r;
}

inline double norm(const Vec& v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

inline double norm(const PhasePoint& y) {
    double s = 0;
    for (double x : y.q) s += x * x;
    for (double x : y.p) s += x * x;
    return std::sqrt(s);
}

inline double dot(const Vec& a, const Vec& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// rho(q, p) = (q, -p), the momentum reversal map.
inline PhasePoint momentum_flip(const PhasePoint& y) {
    PhasePoint r = y;
    for (double& v : r.p) v = -v;
    return r;
}

// ||a - b|| / (1 + ||b||); the workhorse of most tolerance checks.
inline double rel_diff(const PhasePoint& a, const PhasePoint& b) {
    return norm(a - b) / (1.0 + norm(b));
}

} // namespace parareal
