#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace linereg {

/// Malformed argument (degenerate segment, bad config value, ...).
class InvalidInput : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// The input is well-formed but geometrically degenerate for the requested
/// estimate (collinear points, parallel planes, uninformative line pair).
class DegenerateInput : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Fewer constraints than the solver needs.
class UnderConstrained : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Parse failure in a text file; carries the 1-based line number.
class ParseError : public std::runtime_error {
  public:
    ParseError(const std::string &file, std::size_t line, const std::string &what)
        : std::runtime_error(file + ":" + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};

} // namespace linereg
