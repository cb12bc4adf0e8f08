#pragma once

#include <stdexcept>
#include <string>

namespace bslab {

// Validation failures (bad geometry, bad parameters, malformed configs).
class validation_error : public std::invalid_argument {
public:
    explicit validation_error(const std::string& what) : std::invalid_argument(what) {}
};

// Numerical failures (non-convergence, lost positivity, overflow).
class numerical_error : public std::runtime_error {
public:
    explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

class spectral_failure : public numerical_error {
public:
    spectral_failure(const std::string& what, double last_residual)
        : numerical_error(what), residual(last_residual) {}
    double residual;
};

} // namespace bslab
