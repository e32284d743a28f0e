#pragma once

#include <stdexcept>
#include <string>

namespace nodalflow {

// Failure categories surfaced to callers. Tests and the CLI dispatch on
// code(), so new categories are additions to the public contract.
enum class errc {
  argument,                    // malformed inputs, out-of-range indices
  indistinguishable_partition, // two partition points snap to one grid node
  pole,                        // secular equation evaluated at a pole
  discretization,              // eigensolve failed or flow lost monotonicity
  degeneracy,                  // simple-branch operation hit a near-degenerate pair
  truncation,                  // factor truncation too small for the window
  consistency,                 // two routes to the same quantity disagreed
  gap,                         // no positive spectral gap where one is required
  shift_collision,             // shift lies on (or numerically at) an eigenvalue
  ambiguous_count,             // an eigenvalue sits on the counting threshold
  decomposition,               // grid cannot resolve the nodal decomposition
};

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& what, long hint = -1)
      : std::runtime_error(what), code_(code), hint_(hint) {}

  errc code() const noexcept { return code_; }

  // Optional payload; e.g. a truncation order that would have sufficed.
  long hint() const noexcept { return hint_; }

 private:
  errc code_;
  long hint_;
};

[[noreturn]] inline void fail(errc code, const std::string& what, long hint = -1) {
  throw Error(code, what, hint);
}

}  // namespace nodalflow
