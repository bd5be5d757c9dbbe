#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace qudit {

// Base for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid user input: bad files, flags, or parameter combinations.
class ConfigError : public Error {
public:
    using Error::Error;
};

// A numerical routine failed to reach its target (non-convergence, lost bistability, ...).
class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what, std::vector<double> residuals = {})
        : Error(what), residuals_(std::move(residuals)) {}

    // Best residual norms reached before giving up, when applicable.
    const std::vector<double>& residuals() const noexcept { return residuals_; }

private:
    std::vector<double> residuals_;
};

// A parameter-consistency identity does not hold; `identity()` names it.
class ConsistencyError : public Error {
public:
    ConsistencyError(std::string identity, const std::string& what)
        : Error(what), identity_(std::move(identity)) {}

    const std::string& identity() const noexcept { return identity_; }

private:
    std::string identity_;
};

}  // namespace qudit
