#pragma once

#include <stdexcept>
#include <string>

namespace gffdrift {

/// Invalid user-supplied configuration (kernel, grid, simulation or bound
/// parameters). The CLI maps this family to exit code 2.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of a bound function.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Numerical or runtime fault inside a module (exit code 1).
class NumericFault : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class QuadratureFault : public NumericFault {
public:
    QuadratureFault(const std::string& what, double worst_a, double worst_b)
        : NumericFault(what), worst_a_(worst_a), worst_b_(worst_b) {}
    double worst_a() const noexcept { return worst_a_; }
    double worst_b() const noexcept { return worst_b_; }

private:
    double worst_a_;
    double worst_b_;
};

class IntegrationFault : public NumericFault {
public:
    using NumericFault::NumericFault;
};

class StatisticsError : public NumericFault {
public:
    using NumericFault::NumericFault;
};

class FitError : public NumericFault {
public:
    using NumericFault::NumericFault;
};

} // namespace gffdrift
