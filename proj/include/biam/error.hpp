#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace biam {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed scenario, suite or cache document. Carries the 1-based location.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& what)
      : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class BoundsError : public Error {
 public:
  using Error::Error;
};

class NoFreeSpaceError : public Error {
 public:
  using Error::Error;
};

class ObstacleError : public Error {
 public:
  using Error::Error;
};

class MetricError : public Error {
 public:
  using Error::Error;
};

class TreeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Goal outside the map or inside an obstacle.
class GoalError : public Error {
 public:
  using Error::Error;
};

}  // namespace biam
