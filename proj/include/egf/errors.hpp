#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace egf {

enum class ErrorKind {
  validation,   // bad input, inconsistent data
  blow_up,      // NaN/inf or oscillation growth during a flow
  no_progress,  // step budget exhausted before t_end
  shock,        // characteristics crossed; oracle invalid
  resonance,    // small divisor below floor in the cohomological equation
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(ErrorKind::validation, what) {}
};

class BlowUpError : public Error {
 public:
  BlowUpError(const std::string& what, double last_valid_t)
      : Error(ErrorKind::blow_up, what), last_valid_t_(last_valid_t) {}
  double last_valid_t() const noexcept { return last_valid_t_; }

 private:
  double last_valid_t_;
};

class ProgressError : public Error {
 public:
  ProgressError(const std::string& what, double reached_t)
      : Error(ErrorKind::no_progress, what), reached_t_(reached_t) {}
  double reached_t() const noexcept { return reached_t_; }

 private:
  double reached_t_;
};

class ShockError : public Error {
 public:
  ShockError(const std::string& what, double t) : Error(ErrorKind::shock, what), t_(t) {}
  double t() const noexcept { return t_; }

 private:
  double t_;
};

class ResonanceError : public Error {
 public:
  ResonanceError(const std::string& what, std::vector<int> worst_mode)
      : Error(ErrorKind::resonance, what), worst_mode_(std::move(worst_mode)) {}
  const std::vector<int>& worst_mode() const noexcept { return worst_mode_; }

 private:
  std::vector<int> worst_mode_;
};

}  // namespace egf
