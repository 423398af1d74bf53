#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "shadowcert/chain.hpp"
#include "shadowcert/circuit.hpp"
#include "shadowcert/error.hpp"
#include "shadowcert/state.hpp"

using namespace shadowcert;

namespace {

using Vec = std::vector<Amplitude>;

void apply_h(Vec& v, int q) {
  const double s = 1.0 / std::sqrt(2.0);
  for (Bits x = 0; x < v.size(); ++x) {
    if (bit_of(x, q)) continue;
    const Bits y = flip(x, q);
    const Amplitude a = v[x], b = v[y];
    v[x] = s * (a + b);
    v[y] = s * (a - b);
  }
}

void apply_phase(Vec& v, int q, double angle) {
  for (Bits x = 0; x < v.size(); ++x)
    if (bit_of(x, q)) v[x] *= std::polar(1.0, angle);
}

void apply_cz(Vec& v, int a, int b) {
  for (Bits x = 0; x < v.size(); ++x)
    if (bit_of(x, a) && bit_of(x, b)) v[x] = -v[x];
}

// Applies the literal gate sequence of one action.
void apply_action(Vec& v, const Action& a) {
  const double t = std::numbers::pi / 4;
  switch (a.kind) {
    case ActionKind::noop: break;
    case ActionKind::t: apply_h(v, a.site); apply_phase(v, a.site, t); apply_h(v, a.site); break;
    case ActionKind::tdg: apply_h(v, a.site); apply_phase(v, a.site, -t); apply_h(v, a.site); break;
    case ActionKind::cz:
      apply_h(v, a.site); apply_h(v, a.site + 1);
      apply_cz(v, a.site, a.site + 1);
      apply_h(v, a.site); apply_h(v, a.site + 1);
      break;
  }
}

Vec target_circuit(const CliffordTPhaseModel& m) {
  const int n = m.num_qubits();
  Vec v(std::size_t{1} << n, 0.0);
  v[0] = 1.0;
  for (int q = 0; q < n; ++q) apply_h(v, q);
  for (int q = 0; q < n; ++q) apply_phase(v, q, std::numbers::pi / 4 * m.t_pattern()[q]);
  if (m.cz_chain())
    for (int q = 0; q + 1 < n; ++q) apply_cz(v, q, q + 1);
  for (int q = 0; q < n; ++q) apply_h(v, q);
  return v;
}

double overlap2(const Vec& a, const Vec& b) {
  Amplitude s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return std::norm(s);
}

std::vector<Action> random_sequence(int n, int len, RandomSource& rng) {
  auto acts = action_set(n);
  std::vector<Action> seq;
  for (int i = 0; i < len; ++i) seq.push_back(acts[rng.below(acts.size())]);
  return seq;
}

}  // namespace

TEST_CASE("actions") {
  auto acts = action_set(4);
  CHECK(acts.size() == 1 + 4 + 4 + 3);
  CHECK(acts[0].kind == ActionKind::noop);
  for (const auto& a : acts) CHECK(Action::parse(a.label()) == a);
  CHECK_THROWS_AS(Action::parse("CZx"), Error);
  FramePhase f(3);
  CHECK_THROWS_AS(f.apply({ActionKind::cz, 2}), Error);
}

TEST_CASE("target phase rules") {
  CliffordTPhaseModel cz_only(2, {0, 0}, true);
  auto f = FramePhase::from_target(cz_only);
  CHECK(f.eighth_count(0) == 0);
  CHECK(f.eighth_count(0b11) == 4);
  CliffordTPhaseModel one_t(3, {1, 0, 0}, false);
  CHECK(FramePhase::from_target(one_t).eighth_count(0b001) == 1);
  CliffordTPhaseModel tdg(3, {-1, 0, 0}, false);
  CHECK(FramePhase::from_target(tdg).eighth_count(0b001) == 7);
  RandomSource rng(1);
  for (int k = 0; k < 20; ++k) {
    auto m = CliffordTPhaseModel::random(8, k % 2, rng);
    auto fp = FramePhase::from_target(m);
    for (Bits b = 0; b < 256; ++b) CHECK(fp.eighth_count(b) == m.eighth_count(b));
  }
}

TEST_CASE("action sequences match dense gate simulation") {
  RandomSource rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + trial % 6;
    auto target = CliffordTPhaseModel::random(n, true, rng);
    auto seq = random_sequence(n, 3 + trial, rng);
    Vec v(std::size_t{1} << n, 0.0);
    v[0] = 1.0;
    for (const auto& a : seq) apply_action(v, a);
    const double dense = overlap2(target_circuit(target), v);
    const auto cand = FramePhase::from_actions(n, seq);
    const auto truth = FramePhase::from_target(target);
    CHECK(exact_score_fidelity(cand, truth) == doctest::Approx(dense).epsilon(1e-10));
  }
}

TEST_CASE("exact shadow score equals Tr(L rho)") {
  RandomSource rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 3 + trial % 6;
    auto target = CliffordTPhaseModel::random(n, true, rng);
    const auto cand = FramePhase::from_actions(n, random_sequence(n, 2 * n, rng));
    const auto truth = FramePhase::from_target(target);
    FramePhaseModel cand_model(cand);
    NoisyState rho(DenseState::from_model(cand_model));
    const double tl = expectation(rho, build_observable_L(target, 1));
    CHECK(exact_score_shadow(cand, truth) == doctest::Approx(tl).epsilon(1e-10));
  }
}

TEST_CASE("Monte Carlo scores match exact values") {
  const int n = 8;
  RandomSource rng(4);
  int f_ok = 0, s_ok = 0;
  for (int trial = 0; trial < 20; ++trial) {
    auto target = CliffordTPhaseModel::random(n, true, rng);
    const auto truth = FramePhase::from_target(target);
    auto seq = action_set(n);
    std::vector<Action> partial;
    // Half of the target's gates: fidelity well away from 0 and 1.
    for (int q = 0; q < n / 2; ++q)
      if (target.t_pattern()[q]) partial.push_back({target.t_pattern()[q] > 0 ? ActionKind::t : ActionKind::tdg, q});
    for (int q = 0; q + 1 < n; ++q) partial.push_back({ActionKind::cz, q});
    const auto cand = FramePhase::from_actions(n, partial);
    const std::uint64_t T = 10000;
    const double ef = exact_score_fidelity(cand, truth);
    const double es = exact_score_shadow(cand, truth);
    const double mf = score_fidelity(cand, truth, T, rng);
    const double ms = score_shadow(cand, truth, T, rng);
    // |mean phasor|^2 has standard deviation about 2 sqrt(F / T) for F >> 1/T.
    f_ok += std::abs(mf - ef) <= 3 * (2 * std::sqrt(ef / T) + 1.0 / T);
    s_ok += std::abs(ms - es) <= 3 * 0.5 / std::sqrt(double(T));
  }
  CHECK(f_ok >= 19);
  CHECK(s_ok >= 19);
}

TEST_CASE("scores of exact and perturbed sequences") {
  RandomSource rng(5);
  const int n = 10;
  auto target = random_iqp_target(n, 5, rng);
  const auto truth = FramePhase::from_target(target);
  std::vector<Action> exact;
  for (int q = 0; q < n; ++q)
    if (target.t_pattern()[q]) exact.push_back({target.t_pattern()[q] > 0 ? ActionKind::t : ActionKind::tdg, q});
  for (int q = 0; q + 1 < n; ++q) exact.push_back({ActionKind::cz, q});
  const auto cand = FramePhase::from_actions(n, exact);
  CHECK(cand == truth);
  CHECK(score_fidelity(cand, truth, 1000, rng) == doctest::Approx(1.0));
  CHECK(score_shadow(cand, truth, 1000, rng) == doctest::Approx(1.0));

  // One extra local T: the shadow score drops by (1/n)(1 - cos(pi/4))/2.
  auto off = cand;
  off.apply({ActionKind::t, 3});
  const double drop = 1.0 - exact_score_shadow(off, truth);
  CHECK(drop == doctest::Approx((1.0 - std::cos(std::numbers::pi / 4)) / 2 / n));

  // Appending T then T^-1 at one site changes nothing.
  auto seq = random_sequence(n, 15, rng);
  const auto a = FramePhase::from_actions(n, seq);
  seq.push_back({ActionKind::t, 4});
  seq.push_back({ActionKind::tdg, 4});
  const auto b = FramePhase::from_actions(n, seq);
  CHECK(exact_score_fidelity(a, truth) == exact_score_fidelity(b, truth));
  CHECK(exact_score_shadow(a, truth) == exact_score_shadow(b, truth));

  // Empty sequence against a dense T pattern.
  RandomSource r2(6);
  auto dense = random_iqp_target(20, 12, r2);
  CHECK(score_fidelity(FramePhase(20), FramePhase::from_target(dense), 10000, r2) < 0.05);
}

TEST_CASE("greedy optimization") {
  RandomSource rng(7);
  CliffordTPhaseModel identity(6, {0, 0, 0, 0, 0, 0}, false);
  GreedyConfig cfg;
  auto r0 = greedy_optimize(identity, cfg, rng);
  CHECK(r0.sequence.empty());
  CHECK(*r0.exact_fidelity == doctest::Approx(1.0));
  CHECK(r0.trace.front().shadow == doctest::Approx(1.0));

  auto target = random_iqp_target(12, 6, rng);
  auto res = greedy_optimize(target, cfg, rng);
  CHECK(*res.exact_fidelity > 0.99);
  for (std::size_t k = 1; k < res.trace.size(); ++k) {
    CHECK(res.trace[k].shadow >= res.trace[k - 1].shadow - 3 * 0.5 / std::sqrt(double(cfg.samples)) * std::sqrt(2.0));
  }
  std::ostringstream out;
  write_trace_csv(out, res.trace);
  CHECK(out.str().rfind("step,action,fidelity,shadow\n", 0) == 0);

  RandomSource again(7);
  greedy_optimize(identity, cfg, again);
  random_iqp_target(12, 6, again);
  auto res2 = greedy_optimize(target, cfg, again);
  CHECK(res2.sequence == res.sequence);
}
