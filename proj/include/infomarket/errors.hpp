#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace infomarket {

/// Invalid parameters or configuration. Maps to CLI exit code 2.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed or unusable input data. Maps to CLI exit code 3.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;

    DataError(const std::string& source, std::size_t line, const std::string& what)
        : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

    /// 1-based line of the offending row, 0 when not tied to a line.
    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_ = 0;
};

/// Statistic undefined for the given input (zero variance, too few points).
class DegenerateInput : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

}  // namespace infomarket
