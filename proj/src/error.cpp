#include "shadowcert/error.hpp"

namespace shadowcert {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_distance: return "invalid-distance";
    case ErrorKind::invalid_level: return "invalid-level";
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::invalid_config: return "invalid-config";
    case ErrorKind::needs_normalization: return "needs-normalization";
    case ErrorKind::empty_support: return "empty-support";
    case ErrorKind::too_large: return "too-large";
    case ErrorKind::record_mismatch: return "record-mismatch";
    case ErrorKind::interactive_required: return "interactive-required";
    case ErrorKind::empty_model_list: return "empty-model-list";
    case ErrorKind::construction_failed: return "construction-failed";
    case ErrorKind::degenerate_denominator: return "degenerate-denominator";
    case ErrorKind::training_diverged: return "training-diverged";
    case ErrorKind::parse_error: return "parse-error";
  }
  return "unknown";
}

}  // namespace shadowcert
