#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace pflow {

/// Base for every error raised by the library. Messages are expected to name
/// the operation that failed and, where meaningful, the measured values.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error {
public:
  using Error::Error;
};

/// Projection requested at a point where the nearest point on the target is not unique.
class CutLocusError : public Error {
public:
  using Error::Error;
};

class OffManifoldError : public Error {
public:
  using Error::Error;
};

class OffTangentError : public Error {
public:
  using Error::Error;
};

class RangeError : public Error {
public:
  using Error::Error;
};

/// Heat-kernel scale outside the range where periodization error is negligible.
class ScaleOutOfRangeError : public RangeError {
public:
  using RangeError::RangeError;
};

class IoError : public Error {
public:
  using Error::Error;
};

class FormatError : public Error {
public:
  using Error::Error;
};

class ParseError : public Error {
public:
  ParseError(const std::string& file, int line, const std::string& what)
      : Error(file + ":" + std::to_string(line) + ": " + what), line_(line) {}
  [[nodiscard]] int line() const { return line_; }

private:
  int line_;
};

class ValidationError : public Error {
public:
  ValidationError(std::string field, const std::string& what)
      : Error(field + " " + what), field_(std::move(field)) {}
  [[nodiscard]] const std::string& field() const { return field_; }

private:
  std::string field_;
};

/// Non-finite values appeared during time stepping.
class BlowupDetected : public Error {
public:
  BlowupDetected(double time, std::size_t cell)
      : Error("non-finite value at t=" + std::to_string(time) + " cell=" + std::to_string(cell)),
        time_(time), cell_(cell) {}
  [[nodiscard]] double time() const { return time_; }
  [[nodiscard]] std::size_t cell() const { return cell_; }

private:
  double time_;
  std::size_t cell_;
};

}  // namespace pflow
