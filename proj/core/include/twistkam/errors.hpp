#pragma once

#include <stdexcept>
#include <string>

namespace twistkam {

enum class ErrorKind {
  invalid_argument,
  unknown_family,
  audit_failed,
  no_convergence,
  not_transverse,
  not_in_aubry,
  ambiguous_partner,
  not_lagrangian,
  grid_mismatch,
  graph_rejected,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised by implicit solvers that exhaust their iteration budget.
class NoConvergence : public Error {
 public:
  explicit NoConvergence(const std::string& what) : Error(ErrorKind::no_convergence, what) {}
};

/// Green-slope propagation produced a subspace that is not a graph over dx.
class NotTransverse : public Error {
 public:
  NotTransverse(const std::string& what, int n) : Error(ErrorKind::not_transverse, what), n_(n) {}
  int n() const noexcept { return n_; }

 private:
  int n_;
};

}  // namespace twistkam
