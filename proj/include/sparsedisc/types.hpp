#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace sparsedisc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index  = Eigen::Index;

// ============================================================================
// Error types
// ============================================================================

// Bad shapes, non-finite entries, out-of-range parameters.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A computation that cannot proceed for numerical reasons.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// I - (tau/2) A is singular in the bilinear transform.
class SingularPencil : public NumericalError {
public:
    using NumericalError::NumericalError;
};

// Arguments outside the region where a scalar bound is defined.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Truncation bound requested with tau * ||A||_2 >= 3.
class BoundInapplicable : public DomainError {
public:
    using DomainError::DomainError;
};

// A caller-supplied object breaks a structural promise (e.g. Phi_x[1] != I).
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Locality masks exclude a diagonal entry of Phi_x[1], so Phi_x[1] = I is impossible.
class MaskIdentityConflict : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

// No gamma in [0, 1) yields a feasible synthesis problem.
class AllInfeasible : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public InvalidInput {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& message)
        : InvalidInput(source + ":" + std::to_string(line) + ": " + message), line_(line) {}

    [[nodiscard]] std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// Throws InvalidInput if any entry of m is NaN or infinite.
void require_finite(const Matrix& m, std::string_view what);

}  // namespace sparsedisc
