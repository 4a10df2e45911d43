#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mkv {

enum class ErrorKind {
  dimension,
  shape,
  capacity,
  parameter,
  normalization,
  model_evaluation,
  ellipticity_violation,
  degeneracy,
  nonconvergence,
  precision,
  inconsistency,
  infeasible,
  divergence,
  unsupported_model,
  configuration,
  nonstationarity,
  degenerate_fit,
  io,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// A particle state became non-finite.
class DivergenceError : public Error {
 public:
  DivergenceError(double time, const std::string& what)
      : Error(ErrorKind::divergence, what), time_(time) {}

  double time() const noexcept { return time_; }

 private:
  double time_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) throw Error(kind, what);
}

// Literal messages: no allocation unless the check fails.
inline void require(bool cond, ErrorKind kind, const char* what) {
  if (!cond) throw Error(kind, what);
}

}  // namespace mkv
