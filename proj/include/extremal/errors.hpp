#pragma once

#include <stdexcept>
#include <string>

namespace extremal {

/// A mathematical operation evaluated outside its domain (vanishing f',
/// inadmissible tau bounds, singular integrands).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// An iterative eigenvalue method failed to reach its tolerance.
class EigenSolverError : public std::runtime_error {
public:
    EigenSolverError(const std::string& what, double residual) : std::runtime_error(what), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

}  // namespace extremal
