#pragma once

#include <stdexcept>
#include <string>

namespace tfrp {

/// Bad argument: value outside the mathematical domain of an operation.
struct DomainError : std::domain_error {
    explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

/// A computation failed numerically (non-convergence, singular factor, blow-up).
/// `diagnostic` carries the quantity that triggered the failure.
struct NumericError : std::runtime_error {
    double diagnostic;
    explicit NumericError(const std::string& what, double diag = 0.0)
        : std::runtime_error(what), diagnostic(diag) {}
};

}  // namespace tfrp
