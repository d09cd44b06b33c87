#pragma once

#include <stdexcept>
#include <string>

namespace parareal {

// Base class for everything thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad experiment description: grid ratios, missing fields, unreadable files.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// A propagation produced a non-finite state (e.g. a near-collision in a
// gravitational system). `step_index` is the inner step inside the offending
// propagate call; `window`/`iteration` are filled in by the scheme driver.
class IntegrationBlowup : public Error {
public:
    explicit IntegrationBlowup(const std::string& msg, long long step_index = -1)
        : Error(msg), step_index(step_index) {}
    long long step_index = -1;
    int window = -1;
    int iteration = -1;
};

// Fixed-point inversion of a coarse map did not converge.
class InversionFailure : public Error {
public:
    explicit InversionFailure(const std::string& msg) : Error(msg) {}
    int window = -1;
    int iteration = -1;
};

// Newton system for a manifold projection is (numerically) singular.
class DegenerateProjection : public Error {
public:
    explicit DegenerateProjection(const std::string& msg) : Error(msg) {}
    int window = -1;
    int iteration = -1;
};

// Potential evaluated at a singular configuration (coincident bodies).
class SingularityError : public Error {
public:
    explicit SingularityError(const std::string& msg) : Error(msg) {}
};

} // namespace parareal
