#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace maxid {

// Bad user input: malformed files, inconsistent dimensions, invalid options.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// A computation that should have succeeded did not (Cholesky breakdown,
// non-finite likelihood term, root bracketing failure, ...).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// Adaptive integration ran out of subdivisions. Carries the best estimate
// so callers can decide whether to accept it anyway.
class QuadratureError : public NumericalError {
public:
    QuadratureError(const std::string& msg, std::vector<double> best)
        : NumericalError(msg), estimate(std::move(best)) {}
    std::vector<double> estimate;
};

} // namespace maxid
