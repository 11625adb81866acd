#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rfrecon {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Input shapes or sizes disagree, or a required dimension is zero.
class ShapeError : public Error {
public:
  using Error::Error;
};

// A documented precondition does not hold (e.g. p < n for interpolation).
class PreconditionError : public Error {
public:
  using Error::Error;
};

class NumericalError : public Error {
public:
  using Error::Error;
};

class IllConditionedError : public NumericalError {
public:
  IllConditionedError(const std::string &what, double condition_estimate)
      : NumericalError(what), condition_estimate_(condition_estimate) {}
  double condition_estimate() const { return condition_estimate_; }

private:
  double condition_estimate_;
};

class SolverError : public NumericalError {
public:
  SolverError(const std::string &what, std::size_t iterations,
              double condition_estimate)
      : NumericalError(what), iterations_(iterations),
        condition_estimate_(condition_estimate) {}
  std::size_t iterations() const { return iterations_; }
  double condition_estimate() const { return condition_estimate_; }

private:
  std::size_t iterations_;
  double condition_estimate_;
};

class FormatError : public Error {
public:
  FormatError(const std::string &what, std::size_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

private:
  std::size_t offset_;
};

} // namespace rfrecon
