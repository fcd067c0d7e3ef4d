#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace flam {

/// A point query fell outside the domain of an analytic field.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A point query fell outside the convex hull of the grid.
class OutOfMapError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// Invalid or inconsistent configuration.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed input file; carries the 1-based line number when known.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& file, std::size_t line, const std::string& what)
        : std::runtime_error(file + ":" + std::to_string(line) + ": " + what),
          file_(file),
          line_(line) {}

    [[nodiscard]] const std::string& file() const noexcept { return file_; }
    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::string file_;
    std::size_t line_;
};

}  // namespace flam
