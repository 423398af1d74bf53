#include "shadowcert/circuit.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <ostream>

#include "shadowcert/error.hpp"
#include "shadowcert/parallel.hpp"

namespace shadowcert {

namespace {

int mod8(int c) { return ((c % 8) + 8) % 8; }

const std::array<Amplitude, 8>& phasors() {
  static const std::array<Amplitude, 8> table = [] {
    std::array<Amplitude, 8> t;
    for (int k = 0; k < 8; ++k) t[k] = std::polar(1.0, std::numbers::pi / 4 * k);
    return t;
  }();
  return table;
}

// |<+_c|+_c'>|^2 = (1 + cos(pi/4 (c - c'))) / 2 for (|0> + e^{i pi c/4}|1>)/sqrt2.
const std::array<double, 8>& local_overlap_table() {
  static const std::array<double, 8> table = [] {
    std::array<double, 8> t;
    for (int k = 0; k < 8; ++k) t[k] = 0.5 * (1.0 + std::cos(std::numbers::pi / 4 * k));
    return t;
  }();
  return table;
}

// Change of c(b) caused by one action.
int action_delta(const Action& a, Bits b) {
  switch (a.kind) {
    case ActionKind::noop: return 0;
    case ActionKind::t: return bit_of(b, a.site);
    case ActionKind::tdg: return -bit_of(b, a.site);
    case ActionKind::cz: return 4 * (bit_of(b, a.site) & bit_of(b, a.site + 1));
  }
  return 0;
}

// Change of the local count at qubit j caused by one action.
int action_local_delta(const Action& a, Bits b, int j) {
  switch (a.kind) {
    case ActionKind::noop: return 0;
    case ActionKind::t: return a.site == j ? 1 : 0;
    case ActionKind::tdg: return a.site == j ? -1 : 0;
    case ActionKind::cz:
      if (a.site == j) return 4 * bit_of(b, j + 1);
      if (a.site + 1 == j) return 4 * bit_of(b, j - 1);
      return 0;
  }
  return 0;
}

}  // namespace

std::string Action::label() const {
  switch (kind) {
    case ActionKind::noop: return "noop";
    case ActionKind::t: return "T" + std::to_string(site);
    case ActionKind::tdg: return "Tdg" + std::to_string(site);
    case ActionKind::cz: return "CZ" + std::to_string(site);
  }
  return "?";
}

Action Action::parse(std::string_view text) {
  auto site_of = [&](std::size_t skip) {
    const std::string digits(text.substr(skip));
    if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos) {
      throw Error(ErrorKind::parse_error, "bad action '" + std::string(text) + "'");
    }
    return std::stoi(digits);
  };
  if (text == "noop") return {};
  if (text.starts_with("Tdg")) return {ActionKind::tdg, site_of(3)};
  if (text.starts_with("CZ")) return {ActionKind::cz, site_of(2)};
  if (text.starts_with("T")) return {ActionKind::t, site_of(1)};
  throw Error(ErrorKind::parse_error, "bad action '" + std::string(text) + "'");
}

std::vector<Action> action_set(int n) {
  std::vector<Action> out{{}};
  for (int i = 0; i < n; ++i) out.push_back({ActionKind::t, i});
  for (int i = 0; i < n; ++i) out.push_back({ActionKind::tdg, i});
  for (int i = 0; i + 1 < n; ++i) out.push_back({ActionKind::cz, i});
  return out;
}

FramePhase::FramePhase(int n) : n_(n), t_(static_cast<std::size_t>(n), 0) {
  if (n < 1 || n > kMaxQubits) throw Error(ErrorKind::invalid_argument, "qubit count out of range");
}

FramePhase FramePhase::from_target(const CliffordTPhaseModel& target) {
  FramePhase f(target.num_qubits());
  for (int i = 0; i < f.n_; ++i) f.t_[i] = mod8(target.t_pattern()[i]);
  if (target.cz_chain()) f.cz_ = low_mask(f.n_ - 1);
  return f;
}

FramePhase FramePhase::from_actions(int n, const std::vector<Action>& seq) {
  FramePhase f(n);
  for (const auto& a : seq) f.apply(a);
  return f;
}

void FramePhase::apply(const Action& a) {
  const int limit = a.kind == ActionKind::cz ? n_ - 1 : n_;
  if (a.kind != ActionKind::noop && (a.site < 0 || a.site >= limit)) {
    throw Error(ErrorKind::invalid_argument, "action site out of range: " + a.label());
  }
  switch (a.kind) {
    case ActionKind::noop: break;
    case ActionKind::t: t_[a.site] = mod8(t_[a.site] + 1); break;
    case ActionKind::tdg: t_[a.site] = mod8(t_[a.site] - 1); break;
    case ActionKind::cz: cz_ ^= Bits{1} << a.site; break;
  }
}

int FramePhase::eighth_count(Bits b) const noexcept {
  int c = 0;
  for (int i = 0; i < n_; ++i) c += t_[i] * bit_of(b, i);
  c += 4 * popcount(b & (b >> 1) & cz_);
  return c & 7;
}

int FramePhase::local_count(Bits b, int j) const noexcept {
  int c = t_[j];
  if (j > 0 && bit_of(cz_, j - 1)) c += 4 * bit_of(b, j - 1);
  if (j + 1 < n_ && bit_of(cz_, j)) c += 4 * bit_of(b, j + 1);
  return c & 7;
}

FramePhaseModel::FramePhaseModel(FramePhase phase)
    : phase_(std::move(phase)), scale_(std::sqrt(std::ldexp(1.0, -phase_.n()))) {}

Amplitude FramePhaseModel::amplitude(Bits x) const { return scale_ * phasors()[phase_.eighth_count(x)]; }

Json FramePhaseModel::descriptor() const {
  return {{"family", "frame-phase"}, {"n", phase_.n()}, {"t_counts", phase_.t_counts()}, {"cz_edges", phase_.cz_edges()}};
}

double score_fidelity(const FramePhase& candidate, const FramePhase& target, std::uint64_t samples,
                      RandomSource& rng) {
  if (samples == 0) throw Error(ErrorKind::invalid_argument, "need at least one sample");
  const Bits mask = low_mask(target.n());
  Amplitude acc = 0.0;
  for (std::uint64_t s = 0; s < samples; ++s) {
    const Bits b = rng() & mask;
    acc += phasors()[mod8(candidate.eighth_count(b) - target.eighth_count(b))];
  }
  return std::norm(acc / static_cast<double>(samples));
}

double score_shadow(const FramePhase& candidate, const FramePhase& target, std::uint64_t samples, RandomSource& rng) {
  if (samples == 0) throw Error(ErrorKind::invalid_argument, "need at least one sample");
  const int n = target.n();
  const Bits mask = low_mask(n);
  double acc = 0.0;
  for (std::uint64_t s = 0; s < samples; ++s) {
    const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    const Bits b = rng() & mask;
    acc += local_overlap_table()[mod8(candidate.local_count(b, j) - target.local_count(b, j))];
  }
  return acc / static_cast<double>(samples);
}

double exact_score_fidelity(const FramePhase& candidate, const FramePhase& target) {
  const int n = target.n();
  if (n > 24) throw Error(ErrorKind::too_large, "exact fidelity score needs n <= 24");
  Amplitude acc = 0.0;
  for (Bits b = 0; b < (Bits{1} << n); ++b) acc += phasors()[mod8(candidate.eighth_count(b) - target.eighth_count(b))];
  return std::norm(acc / std::ldexp(1.0, n));
}

double exact_score_shadow(const FramePhase& candidate, const FramePhase& target) {
  const int n = target.n();
  if (n > 20) throw Error(ErrorKind::too_large, "exact shadow score needs n <= 20");
  double acc = 0.0;
  for (int j = 0; j < n; ++j) {
    for (Bits b = 0; b < (Bits{1} << n); ++b) {
      if (bit_of(b, j)) continue;
      acc += local_overlap_table()[mod8(candidate.local_count(b, j) - target.local_count(b, j))];
    }
  }
  return acc / (n * std::ldexp(1.0, n - 1));
}

CliffordTPhaseModel random_iqp_target(int n, int min_t, RandomSource& rng) {
  if (min_t > n) throw Error(ErrorKind::invalid_argument, "cannot place more T gates than qubits");
  for (;;) {
    auto m = CliffordTPhaseModel::random(n, true, rng);
    if (m.t_gate_count() >= min_t) return m;
  }
}

std::string_view to_string(Objective o) { return o == Objective::fidelity ? "fidelity" : "shadow"; }

Objective parse_objective(std::string_view s) {
  if (s == "fidelity") return Objective::fidelity;
  if (s == "shadow") return Objective::shadow;
  throw Error(ErrorKind::invalid_config, "objective must be fidelity or shadow");
}

void GreedyConfig::validate() const {
  if (max_steps < 1) throw Error(ErrorKind::invalid_config, "max_steps must be >= 1");
  if (samples < 1) throw Error(ErrorKind::invalid_config, "samples must be >= 1");
}

namespace {

// Scores every action against one shared batch of draws.
std::vector<double> score_actions(const std::vector<Action>& actions, const FramePhase& cur, const FramePhase& target,
                                  Objective objective, std::uint64_t samples, RandomSource& rng) {
  const int n = target.n();
  const Bits mask = low_mask(n);
  std::vector<Bits> bs(samples);
  std::vector<int> js(samples, 0), base(samples);
  for (std::uint64_t s = 0; s < samples; ++s) {
    if (objective == Objective::shadow) js[s] = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    bs[s] = rng() & mask;
    base[s] = objective == Objective::shadow ? cur.local_count(bs[s], js[s]) - target.local_count(bs[s], js[s])
                                             : cur.eighth_count(bs[s]) - target.eighth_count(bs[s]);
  }
  std::vector<double> scores(actions.size());
  parallel_shards(actions.size(), [&](std::size_t k) {
    const Action& a = actions[k];
    if (objective == Objective::shadow) {
      double acc = 0.0;
      for (std::uint64_t s = 0; s < samples; ++s) {
        acc += local_overlap_table()[mod8(base[s] + action_local_delta(a, bs[s], js[s]))];
      }
      scores[k] = acc / static_cast<double>(samples);
    } else {
      Amplitude acc = 0.0;
      for (std::uint64_t s = 0; s < samples; ++s) acc += phasors()[mod8(base[s] + action_delta(a, bs[s]))];
      scores[k] = std::norm(acc / static_cast<double>(samples));
    }
  });
  return scores;
}

}  // namespace

GreedyResult greedy_optimize(const CliffordTPhaseModel& target, const GreedyConfig& config, RandomSource& rng) {
  config.validate();
  const int n = target.num_qubits();
  const FramePhase truth = FramePhase::from_target(target);
  const auto actions = action_set(n);
  const RandomSource base = rng.split(rng());

  GreedyResult res;
  FramePhase cur(n);
  auto evaluate = [&](int step, const Action& a) {
    RandomSource r = base.split(2 * static_cast<std::uint64_t>(step) + 1);
    TraceRow row{step, a, score_fidelity(cur, truth, config.samples, r), score_shadow(cur, truth, config.samples, r)};
    res.trace.push_back(row);
  };
  evaluate(0, {});
  for (int step = 1; step <= config.max_steps; ++step) {
    RandomSource r = base.split(2 * static_cast<std::uint64_t>(step));
    const auto scores = score_actions(actions, cur, truth, config.objective, config.samples, r);
    std::size_t best = 0;
    for (std::size_t k = 1; k < scores.size(); ++k) {
      if (scores[k] > scores[best]) best = k;
    }
    const Action& a = actions[best];
    cur.apply(a);
    if (a.kind != ActionKind::noop) res.sequence.push_back(a);
    evaluate(step, a);
    if (a.kind == ActionKind::noop && config.stop_when_converged) break;
  }
  res.final_phase = cur;
  if (n <= 24) res.exact_fidelity = exact_score_fidelity(cur, truth);
  if (n <= 20) res.exact_shadow = exact_score_shadow(cur, truth);
  return res;
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace) {
  out << "step,action,fidelity,shadow\n";
  out.precision(17);
  for (const auto& r : trace) out << r.step << ',' << r.action.label() << ',' << r.fidelity << ',' << r.shadow << '\n';
}

}  // namespace shadowcert
