#pragma once

#include <stdexcept>
#include <string>

namespace pmonge {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

/// A cost evaluator produced NaN, a negative value or an infinity.
class EvaluationError : public Error {
public:
    using Error::Error;
};

/// Malformed input data: bad CSV, negative weights, unbalanced marginals.
class InvalidInput : public Error {
public:
    using Error::Error;
};

class ImbalanceError : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

/// The transportation simplex exceeded its pivot budget.
class CycleGuardError : public Error {
public:
    using Error::Error;
};

class SolverBugError : public Error {
public:
    using Error::Error;
};

class NonConvergence : public Error {
public:
    NonConvergence(const std::string& what, double achieved)
        : Error(what), achieved_(achieved) {}
    [[nodiscard]] double achieved() const noexcept { return achieved_; }

private:
    double achieved_;
};

class CoverFailure : public Error {
public:
    using Error::Error;
};

class WrongCell : public DomainError {
public:
    using DomainError::DomainError;
};

class EmptyTarget : public DomainError {
public:
    using DomainError::DomainError;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// The epsilon budget cannot be met at the working resolution. `slice` names
/// the budget slice that ran out ("oscillation", "plan", "truncation", ...).
class BudgetExhausted : public Error {
public:
    BudgetExhausted(const std::string& what, std::string slice)
        : Error(what), slice_(std::move(slice)) {}
    [[nodiscard]] const std::string& slice() const noexcept { return slice_; }

private:
    std::string slice_;
};

/// kappa search fell below its floor: the cost is effectively discontinuous
/// at the sampling resolution.
class ModulusFailure : public BudgetExhausted {
public:
    explicit ModulusFailure(const std::string& what) : BudgetExhausted(what, "oscillation") {}
};

/// The tail curve never dropped below the requested level on the radius grid.
class TailDivergence : public BudgetExhausted {
public:
    explicit TailDivergence(const std::string& what) : BudgetExhausted(what, "truncation") {}
};

/// A plan on the path exceeded its certified optimality slack.
class AuditFailure : public BudgetExhausted {
public:
    AuditFailure(const std::string& what, std::string slice)
        : BudgetExhausted(what, std::move(slice)) {}
};

}  // namespace pmonge
