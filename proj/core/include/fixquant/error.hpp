#pragma once

#include <stdexcept>
#include <string>

namespace fixquant {

// Error categories. The CLI maps these onto process exit codes:
// input-class errors -> 2, infeasible -> 3, internal -> 4.
enum class errc {
  input,             // bad argument or malformed input data
  range,             // numeric argument outside its documented range
  degenerate_stats,  // statistics too degenerate to derive a format
  undefined_sqnr,    // zero signal energy
  parse,             // manifest/plan/report syntax error
  shape_mismatch,    // tensor data inconsistent with declared shape
  missing_blob,      // referenced blob file absent
  io,                // filesystem read/write failure
  structure,         // layer graph violates an operation's assumptions
  plan_coverage,     // quantization plan does not cover the model
  infeasible,        // constraint unreachable under the given bounds
  guard,             // complexity guard exceeded
  internal,          // invariant violation inside the library
};

const char* errc_name(errc code) noexcept;

class Error : public std::runtime_error {
public:
  Error(errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  errc code() const noexcept { return code_; }

private:
  errc code_;
};

[[noreturn]] inline void raise(errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace fixquant
