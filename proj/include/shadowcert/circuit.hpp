#pragma once

// Greedy preparation of IQP+T targets with actions that are diagonal in the
// Hadamard-rotated frame: H(x)H CZ H(x)H on (i, i+1), H T H and H T^-1 H.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "shadowcert/models.hpp"

namespace shadowcert {

enum class ActionKind { noop, t, tdg, cz };

struct Action {
  ActionKind kind = ActionKind::noop;
  int site = 0;  // cz acts on (site, site + 1)

  std::string label() const;
  static Action parse(std::string_view text);
  bool operator==(const Action&) const = default;
};

// Candidate set in index order: noop, T on 0..n-1, T^-1 on 0..n-1, CZ on 0..n-2.
std::vector<Action> action_set(int n);

// Frame phase c(b) = sum_i t_i b_i + 4 sum_{cz edges} b_i b_{i+1} (mod 8).
class FramePhase {
 public:
  explicit FramePhase(int n);
  static FramePhase from_target(const CliffordTPhaseModel& target);
  static FramePhase from_actions(int n, const std::vector<Action>& seq);

  int n() const noexcept { return n_; }
  void apply(const Action& a);
  int eighth_count(Bits b) const noexcept;
  // c(b with bit j = 1) - c(b with bit j = 0), mod 8.
  int local_count(Bits b, int j) const noexcept;
  const std::vector<int>& t_counts() const noexcept { return t_; }
  Bits cz_edges() const noexcept { return cz_; }  // bit i set: CZ on (i, i+1)
  bool operator==(const FramePhase&) const = default;

 private:
  int n_;
  std::vector<int> t_;
  Bits cz_ = 0;
};

// Uniform-magnitude model 2^{-n/2} exp(2 pi i c(b) / 8) for a frame phase.
class FramePhaseModel final : public QueryModel {
 public:
  explicit FramePhaseModel(FramePhase phase);
  int num_qubits() const override { return phase_.n(); }
  Amplitude amplitude(Bits x) const override;
  std::optional<double> norm_hint() const override { return 1.0; }
  bool uniform_magnitude() const override { return true; }
  Json descriptor() const override;

 private:
  FramePhase phase_;
  double scale_;
};

// Monte Carlo scores over T strings.
double score_fidelity(const FramePhase& candidate, const FramePhase& target, std::uint64_t samples,
                      RandomSource& rng);
double score_shadow(const FramePhase& candidate, const FramePhase& target, std::uint64_t samples, RandomSource& rng);

// Exact versions by enumeration (fidelity n <= 24, shadow n <= 20).
double exact_score_fidelity(const FramePhase& candidate, const FramePhase& target);
double exact_score_shadow(const FramePhase& candidate, const FramePhase& target);

// Redraws the T pattern until it has at least min_t gates.
CliffordTPhaseModel random_iqp_target(int n, int min_t, RandomSource& rng);

enum class Objective { fidelity, shadow };
std::string_view to_string(Objective o);
Objective parse_objective(std::string_view s);

struct GreedyConfig {
  int max_steps = 100;
  Objective objective = Objective::shadow;
  std::uint64_t samples = 10000;
  bool stop_when_converged = true;  // stop once the no-op wins a step

  void validate() const;
};

struct TraceRow {
  int step = 0;
  Action action;
  double fidelity = 0.0;  // fresh-sample estimates after the step
  double shadow = 0.0;
};

struct GreedyResult {
  std::vector<Action> sequence;  // no-ops omitted
  std::vector<TraceRow> trace;   // row 0: the empty sequence
  FramePhase final_phase{1};
  std::optional<double> exact_fidelity;  // n <= 24
  std::optional<double> exact_shadow;    // n <= 20
};

GreedyResult greedy_optimize(const CliffordTPhaseModel& target, const GreedyConfig& config, RandomSource& rng);

// step,action,fidelity,shadow
void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace);

}  // namespace shadowcert
