#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace shadowcert {

enum class ErrorKind {
  invalid_distance,
  invalid_level,
  invalid_argument,
  invalid_config,
  needs_normalization,
  empty_support,
  too_large,
  record_mismatch,
  interactive_required,
  empty_model_list,
  construction_failed,
  degenerate_denominator,
  training_diverged,
  parse_error,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace shadowcert
