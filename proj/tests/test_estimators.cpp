#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "shadowcert/benchmark.hpp"
#include "shadowcert/chain.hpp"
#include "shadowcert/error.hpp"
#include "shadowcert/estimators.hpp"
#include "shadowcert/protocol.hpp"

using namespace shadowcert;

namespace {

// Dense Pauli-sum matrix built by Kronecker products (qubit 0 = least significant).
Eigen::MatrixXcd dense_pauli(int n, const PauliTerm& t) {
  Eigen::Matrix2cd I = Eigen::Matrix2cd::Identity(), X, Y, Z;
  X << 0, 1, 1, 0;
  Y << 0, Amplitude(0, -1), Amplitude(0, 1), 0;
  Z << 1, 0, 0, -1;
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Identity(1, 1);
  for (int q = n - 1; q >= 0; --q) {
    const bool xb = bit_of(t.x_mask, q), zb = bit_of(t.z_mask, q);
    const Eigen::Matrix2cd& f = xb && zb ? Y : xb ? X : zb ? Z : I;
    Eigen::MatrixXcd next(out.rows() * 2, out.cols() * 2);
    for (Eigen::Index a = 0; a < out.rows(); ++a)
      for (Eigen::Index b = 0; b < out.cols(); ++b) next.block(2 * a, 2 * b, 2, 2) = out(a, b) * f;
    out = next;
  }
  return t.coeff * out;
}

Eigen::MatrixXcd dense_sum(const PauliSum& h) {
  const int d = 1 << h.num_qubits();
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(d, d);
  for (const auto& t : h.terms()) m += dense_pauli(h.num_qubits(), t);
  return m;
}

Eigen::VectorXcd as_vector(const DenseState& s) {
  return Eigen::Map<const Eigen::VectorXcd>(s.amplitudes().data(), static_cast<Eigen::Index>(s.dim()));
}

// Tr(rho_A^2) by explicit partial trace.
double dense_purity(const DenseState& s, Bits a_mask) {
  const int n = s.n();
  std::vector<int> a, b;
  for (int q = 0; q < n; ++q) (bit_of(a_mask, q) ? a : b).push_back(q);
  const int da = 1 << a.size(), db = 1 << b.size();
  Eigen::MatrixXcd m(da, db);
  for (Bits x = 0; x < s.dim(); ++x) {
    int ia = 0, ib = 0;
    for (std::size_t k = 0; k < a.size(); ++k) ia |= bit_of(x, a[k]) << k;
    for (std::size_t k = 0; k < b.size(); ++k) ib |= bit_of(x, b[k]) << k;
    m(ia, ib) = s[x];
  }
  Eigen::MatrixXcd rho = m * m.adjoint();
  return (rho * rho).trace().real();
}

}  // namespace

TEST_CASE("exact fidelity") {
  DenseState a = DenseState::from_model(DenseModel::haar(5, 1));
  CHECK(exact_fidelity(NoisyState(a), a) == doctest::Approx(1.0));
  CHECK(exact_fidelity(NoisyState(DenseState::basis(3, 1)), DenseState::basis(3, 2)) == 0.0);
  CHECK(exact_fidelity(NoisyState(a, 0.3), a) == doctest::Approx(0.7 + 0.3 / 32));
}

TEST_CASE("phase fidelity") {
  PhaseStateModel m(12, PhaseSource::pseudorandom_continuous, 4);
  auto truth = [&](Bits x) { return m.phase(x); };
  RandomSource rng(1);
  CHECK(phase_fidelity(truth, truth, 12, 1000, rng) == doctest::Approx(1.0));
  CHECK(phase_fidelity(truth, [&](Bits x) { return m.phase(x) + std::numbers::pi; }, 12, 1000, rng) ==
        doctest::Approx(1.0));
  PhaseStateModel other(12, PhaseSource::pseudorandom_continuous, 5);
  CHECK(phase_fidelity(truth, [&](Bits x) { return other.phase(x); }, 12, 10000, rng) < 10.0 / 10000);
}

TEST_CASE("XEB") {
  DenseModel haar = DenseModel::haar(8, 2);
  auto p = exact_distribution(haar);
  auto sampler = measurement_sampler(haar);
  RandomSource rng(3);
  std::vector<Bits> s(100000);
  for (auto& x : s) x = sampler(rng);
  auto r = xeb(s, p);
  CHECK(std::abs(r.value - 1.0) < 5 * r.std_error);
  for (auto& x : s) x = rng() & 255;
  auto u = xeb(s, p);
  CHECK(std::abs(u.value) < 5 * u.std_error);

  auto flat = exact_distribution(PhaseStateModel(6, PhaseSource::pseudorandom_binary, 1));
  std::vector<Bits> few{1, 2, 3};
  try {
    xeb(few, flat);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::degenerate_denominator);
  }
}

TEST_CASE("normalized shadow overlap") {
  for (int m = 1; m <= 3; ++m) {
    for (int n = m; n <= 8; ++n) {
      CHECK(normalized_shadow_overlap(1.0, m, n) == doctest::Approx(1.0));
      CHECK(normalized_shadow_overlap(std::ldexp(1.0, -m), m, n) == doctest::Approx(std::ldexp(1.0, -n)));
      const double a = normalized_shadow_overlap(0.3, m, n), b = normalized_shadow_overlap(0.7, m, n);
      const double mid = normalized_shadow_overlap(0.5, m, n);
      CHECK(b > a);
      CHECK(mid == doctest::Approx(0.5 * (a + b)));
    }
  }
  CHECK(normalized_shadow_overlap(0.75, 1, 2) == doctest::Approx(0.625));
}

TEST_CASE("Pauli rows match dense matrices") {
  RandomSource rng(4);
  auto h = PauliSum::random_local(5, 3, 12, rng);
  h = PauliSum(5, [&] {
    auto t = h.terms();
    t.push_back(PauliTerm::parse(Amplitude(0.5, 0), "YIYXZ"));
    return t;
  }());
  auto dense = dense_sum(h);
  std::vector<SparseEntry> row;
  Eigen::MatrixXcd rebuilt = Eigen::MatrixXcd::Zero(32, 32);
  for (Bits x = 0; x < 32; ++x) {
    h.row(x, row);
    for (const auto& e : row) rebuilt(x, e.y) += e.value;
  }
  CHECK((dense - rebuilt).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((dense - dense.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(h.hermitian());
  auto back = PauliSum::from_json(h.to_json());
  CHECK((dense_sum(back) - dense).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(PauliTerm::parse(1.0, "XQ"), Error);
}

TEST_CASE("sparse expectation: trivial cases") {
  const int n = 6;
  PhaseStateModel plus(n, PhaseSource::constant, 0);
  auto sampler = measurement_sampler(plus);
  RandomSource rng(5);
  PauliSum xi(n, {PauliTerm::parse(1.0, "IIXIII")});
  auto est = sparse_expectation(plus, sampler, xi, MoMConfig::from_bound(0.1, 0.05, 1.0), rng);
  CHECK(est.value == Amplitude(1.0));
  CHECK(est.variance == doctest::Approx(0.0).epsilon(1e-12));
  PauliSum zi(n, {PauliTerm::parse(1.0, "IZIIII")});
  auto ez = sparse_expectation(plus, sampler, zi, MoMConfig::from_bound(0.1, 0.05, 1.0), rng);
  CHECK(std::abs(ez.value) <= 0.1);
}

TEST_CASE("sparse expectation matches the dense oracle within the MoM contract") {
  const int n = 8;
  RandomSource gen(6);
  auto h = PauliSum::random_local(n, 2, 20, gen);
  DenseModel target = DenseModel::haar(n, 6);
  auto psi = as_vector(DenseState::from_model(target));
  auto hd = dense_sum(h);
  const Amplitude exact = psi.dot(hd * psi);
  const double second = psi.dot(hd * hd * psi).real();
  auto cfg = MoMConfig::from_bound(0.5, 0.05, second);
  auto sampler = measurement_sampler(target);
  int hits = 0;
  for (int seed = 0; seed < 100; ++seed) {
    RandomSource rng(seed);
    auto est = sparse_expectation(target, sampler, h, cfg, rng);
    hits += std::abs(est.value.real() - exact.real()) <= cfg.epsilon;
  }
  CHECK(hits >= 95);
}

TEST_CASE("sparse estimator variance is bounded by <O^2>") {
  const int n = 8;
  RandomSource gen(7);
  DenseModel target = DenseModel::haar(n, 7);
  auto psi = as_vector(DenseState::from_model(target));
  auto sampler = measurement_sampler(target);
  for (int k = 0; k < 10; ++k) {
    auto h = PauliSum::random_local(n, 3, 5, gen);
    auto hd = dense_sum(h);
    const double second = psi.dot(hd * hd * psi).real();
    MoMConfig cfg;
    cfg.batch_size = 10000;
    cfg.batches = 10;
    auto est = sparse_expectation(target, sampler, h, cfg, gen);
    CHECK(est.variance <= 1.1 * second);
  }
}

TEST_CASE("median of means beats the mean on heavy tails") {
  RandomSource rng(8);
  const int budget = 450, trials = 2000;
  std::vector<double> err_mean, err_mom;
  std::vector<double> v(budget);
  for (int t = 0; t < trials; ++t) {
    for (auto& x : v) x = rng.uniform() < 1e-3 ? (rng.uniform() < 0.5 ? -1000.0 : 1000.0) : rng.normal();
    double mean = 0;
    for (double x : v) mean += x / budget;
    err_mean.push_back(std::abs(mean));
    err_mom.push_back(std::abs(median_of_means(v, 9)));
  }
  std::sort(err_mean.begin(), err_mean.end());
  std::sort(err_mom.begin(), err_mom.end());
  CHECK(err_mom[trials * 95 / 100] < err_mean[trials * 95 / 100]);
}

TEST_CASE("purity") {
  RandomSource rng(9);
  PhaseStateModel plus(6, PhaseSource::constant, 0);
  auto pe = purity(plus, measurement_sampler(plus), 0b000111, 2000, 10, rng);
  CHECK(pe.mean == doctest::Approx(1.0));

  const double h = 1.0 / std::sqrt(2.0);
  GhzXModel ghz(6, h, h);
  const double ghz_exact = dense_purity(DenseState::from_model(ghz), 0b000011);
  CHECK(ghz_exact == doctest::Approx(0.5));
  auto pg = purity(ghz, measurement_sampler(ghz), 0b000011, 30000, 10, rng);
  CHECK(std::abs(pg.mean - 0.5) < 3 * pg.std_error + 1e-12);

  PhaseStateModel pr(10, PhaseSource::pseudorandom_continuous, 3);
  const double exact = dense_purity(DenseState::from_model(pr), 0b0000000111);
  auto pp = purity(pr, measurement_sampler(pr), 0b0000000111, 30000, 10, rng);
  CHECK(std::abs(pp.mean - exact) < 3 * pp.std_error);
  CHECK(pp.reported >= 0.0);
  CHECK(pp.reported <= 1.0 + 3 * pp.std_error);
}

TEST_CASE("benchmark sweep") {
  DenseModel target = DenseModel::haar(4, 10);
  BenchmarkConfig cfg;
  cfg.shots = 20000;
  cfg.seed = 3;
  cfg.noise = {NoiseKind::white, NoiseKind::coherent_haar};
  auto rows = benchmark_sweep(target, cfg);
  REQUIRE(rows.size() == 22);
  const double d = 16;
  for (const auto& r : rows) {
    if (r.noise_type != "white") continue;
    const double expect = (d - 1) / d * (1 - r.p) + 1 / d;
    CHECK(std::abs(r.normalized_shadow_overlap - expect) <= 4 * r.shadow_se + 1e-12);
    CHECK(r.fidelity == doctest::Approx((1 - r.p) + r.p / d));
    CHECK(std::abs(r.xeb - (1 - r.p)) <= 5 * r.xeb_se + 1e-12);
  }
  // Same seed, same rows.
  auto again = benchmark_sweep(target, cfg);
  std::ostringstream a, b;
  write_benchmark_csv(a, rows);
  write_benchmark_csv(b, again);
  CHECK(a.str() == b.str());
  CHECK(a.str().substr(0, a.str().find('\n')) == kBenchmarkHeader);

  // Full shadows agree with the conditional estimator in expectation.
  cfg.estimator = OverlapEstimator::shadow;
  cfg.noise = {NoiseKind::white};
  cfg.p_grid = {0.0, 0.5};
  for (const auto& r : benchmark_sweep(target, cfg)) {
    const double expect = (d - 1) / d * (1 - r.p) + 1 / d;
    CHECK(std::abs(r.normalized_shadow_overlap - expect) <= 4 * r.shadow_se);
  }

  // Uniform target: XEB column is NaN, the rest is populated.
  PhaseStateModel flat(4, PhaseSource::pseudorandom_continuous, 1);
  cfg.estimator = OverlapEstimator::conditional;
  for (const auto& r : benchmark_sweep(flat, cfg)) {
    CHECK(std::isnan(r.xeb));
    CHECK(std::isfinite(r.normalized_shadow_overlap));
  }
  auto j = cfg.to_json();
  auto back = BenchmarkConfig::from_json(j);
  CHECK(back.to_json() == j);
}
