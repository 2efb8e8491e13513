#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cascade {

enum class ErrorKind {
  invalid_parameter,
  not_stable,
  q_function_undefined,
  truncation_too_small,
  step_too_large,
  not_converged,
  accuracy,
  blowup,
  io,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_parameter: return "invalid-parameter";
    case ErrorKind::not_stable: return "not-stable";
    case ErrorKind::q_function_undefined: return "q-function-undefined";
    case ErrorKind::truncation_too_small: return "truncation-too-small";
    case ErrorKind::step_too_large: return "step-too-large";
    case ErrorKind::not_converged: return "not-converged";
    case ErrorKind::accuracy: return "accuracy";
    case ErrorKind::blowup: return "blowup";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace cascade
