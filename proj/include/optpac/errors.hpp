#pragma once

#include <stdexcept>
#include <string>

namespace optpac {

/// An MDP, policy, or model file violates a structural invariant. The message
/// names the first offending coordinates (1-based stage).
class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A policy enumeration would exceed its budget. `required` is the number of
/// policies that would have been visited (as a floating count, since it can
/// overflow 64 bits).
class BudgetExceeded : public std::runtime_error {
public:
    BudgetExceeded(long double required, unsigned long long budget);
    long double required() const { return required_; }
    unsigned long long budget() const { return budget_; }

private:
    long double required_;
    unsigned long long budget_;
};

/// Invalid user-supplied configuration (epsilon, delta, seeds, ...).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An internal consistency check failed, e.g. an empirical transition
/// estimate puts mass on a successor the true model cannot produce.
class ConsistencyError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace optpac
