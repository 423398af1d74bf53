#pragma once

// Local escape property: per-vertex checks and the enforcing query wrapper.

#include <optional>
#include <string_view>
#include <vector>

#include "shadowcert/models.hpp"

namespace shadowcert {

struct EscapeParams {
  double alpha = 0.5;
  double c_upper_prime = 0.0;  // 0 -> max(c_upper, n)
  double c_upper = 5.0;
  double c_lower = 1.0 / 11.0;
  double nu = 0.0;  // 0 -> 2^-n

  void validate() const;
  // Fills the n-dependent defaults.
  EscapeParams resolved(int n) const;
  Json to_json() const;
};

enum class EscapeCondition { none, weight, good_neighbors, good_paths };
std::string_view to_string(EscapeCondition c);

struct EscapeCheck {
  EscapeCondition violated = EscapeCondition::none;
  bool pass() const noexcept { return violated == EscapeCondition::none; }
};

// Pointwise access to pi through the model's normalization.
class EscapeChecker {
 public:
  // norm defaults to the model's norm hint (needs-normalization otherwise).
  EscapeChecker(const QueryModel& model, EscapeParams params, std::optional<double> norm = std::nullopt);

  double pi(Bits x) const;
  bool good(Bits x) const;
  int num_qubits() const noexcept { return n_; }
  const EscapeParams& params() const noexcept { return params_; }
  double norm() const noexcept { return norm_; }
  // Minimum number of good neighbors / all-good paths: ceil(alpha n).
  int required() const noexcept { return required_; }

  // Runs the three checks for the queried vertex in order (0), (1), (2).
  EscapeCheck check(Bits x) const;

 private:
  const QueryModel& model_;
  EscapeParams params_;
  double norm_;
  int n_;
  int required_;
};

// Same verdicts as EscapeChecker::check for every vertex, from one global
// pass over all good pairs (n <= 16).
std::vector<EscapeCheck> check_all_escape(const QueryModel& model, const EscapeParams& params,
                                          std::optional<double> norm = std::nullopt);

// Psi'(x) = Psi(x) when x passes, else sqrt(nu * norm) with the phase of Psi(x).
class EnforcedModel final : public QueryModel {
 public:
  // precompute: run check_all_escape once instead of checking per query.
  EnforcedModel(ModelPtr base, EscapeParams params, bool precompute = false,
                std::optional<double> norm = std::nullopt);

  int num_qubits() const override { return base_->num_qubits(); }
  Amplitude amplitude(Bits x) const override;
  Json descriptor() const override;
  bool passes(Bits x) const;

 private:
  ModelPtr base_;
  EscapeChecker checker_;
  std::vector<EscapeCheck> table_;
};

}  // namespace shadowcert
