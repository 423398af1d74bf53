#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "shadowcert/chain.hpp"
#include "shadowcert/error.hpp"
#include "shadowcert/state.hpp"

using namespace shadowcert;

namespace {

Eigen::MatrixXd pauli_x_sum(int n) {
  const int d = 1 << n;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, d);
  for (int x = 0; x < d; ++x) {
    for (int i = 0; i < n; ++i) m(x, x ^ (1 << i)) += 1.0;
  }
  return m;
}

std::vector<double> sorted_desc(std::vector<double> v) {
  std::sort(v.begin(), v.end(), std::greater<>());
  return v;
}

}  // namespace

TEST_CASE("uniform level-1 walk is the lazy hypercube walk") {
  for (int n = 1; n <= 6; ++n) {
    auto w = build_walk(std::vector<double>(1u << n, 1.0), n, 1);
    Eigen::MatrixXd expect = 0.5 * Eigen::MatrixXd::Identity(1 << n, 1 << n) + pauli_x_sum(n) / (2.0 * n);
    CHECK((transition_matrix(w) - expect).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("small walks") {
  std::vector<double> single(8, 0.0);
  single[5] = 3.0;
  auto w = build_walk(single, 3, 1);
  auto p = transition_matrix(w);
  REQUIRE(p.rows() == 1);
  CHECK(p(0, 0) == doctest::Approx(1.0));
  auto rep = spectral_report(w);
  CHECK(rep.gap == 1.0);
  CHECK(rep.tau == 1.0);

  auto w1 = build_walk({2.0 / 3, 1.0 / 3}, 1, 1);
  auto p1 = transition_matrix(w1);
  CHECK(p1(0, 1) == doctest::Approx(1.0 / 3));
  CHECK(p1(0, 0) == doctest::Approx(2.0 / 3));
  CHECK(p1(1, 0) == doctest::Approx(2.0 / 3));

  CHECK_THROWS_AS(build_walk(std::vector<double>(4, 0.0), 2, 1), Error);
  try {
    build_walk(std::vector<double>(4, 0.0), 2, 1);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::empty_support);
  }
}

TEST_CASE("rows sum to one, W symmetric, pi stationary") {
  for (int seed = 0; seed < 6; ++seed) {
    for (int m = 1; m <= 3; ++m) {
      RandomSource rng(seed);
      auto pt = porter_thomas(6, rng);
      if (seed % 2) {
        for (std::size_t x = 0; x < pt.pi.size(); x += 3) pt.pi[x] = 0.0;  // holes in the support
      }
      auto w = build_walk(pt.pi, 6, m);
      auto P = transition_matrix(w);
      auto W = weight_matrix(w);
      Eigen::Map<const Eigen::RowVectorXd> pi(w.pi.data(), static_cast<Eigen::Index>(w.size()));
      CHECK((P.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
      CHECK((W - W.transpose()).cwiseAbs().maxCoeff() < 1e-15);
      CHECK((pi * P - pi).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("observable for the all-plus state") {
  for (int n = 1; n <= 5; ++n) {
    auto L = build_observable_L(PhaseStateModel(n, PhaseSource::constant, 0), 1);
    const int d = 1 << n;
    // (1/n) sum_i |+><+|_i (x) I, built from (I + X_i)/2.
    Eigen::MatrixXd expect = 0.5 * Eigen::MatrixXd::Identity(d, d) + pauli_x_sum(n) / (2.0 * n);
    CHECK((L - expect.cast<std::complex<double>>()).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("phase-state observable spectrum is 1 - j/n with multiplicity C(n, j)") {
  for (int n = 2; n <= 7; ++n) {
    auto L = build_observable_L(PhaseStateModel(n, PhaseSource::pseudorandom_continuous, 11 + n), 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(L, Eigen::EigenvaluesOnly);
    std::vector<double> got(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    std::vector<double> expect;
    for (int j = 0; j <= n; ++j) {
      for (std::uint64_t c = 0; c < binomial(n, j); ++c) expect.push_back(1.0 - double(j) / n);
    }
    got = sorted_desc(got);
    expect = sorted_desc(expect);
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == doctest::Approx(expect[i]).epsilon(1e-10));
  }
}

TEST_CASE("target state is a fixed point of L") {
  for (int m = 1; m <= 2; ++m) {
    DenseModel haar = DenseModel::haar(6, 21 + m);
    auto L = build_observable_L(haar, m);
    Eigen::Map<const Eigen::VectorXcd> psi(haar.amplitudes().data(), 64);
    CHECK((L * psi - psi).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(std::abs((psi.adjoint() * L * psi)(0, 0) - 1.0) < 1e-9);
  }
}

TEST_CASE("P and L are similar and 0 <= L <= I") {
  RandomSource rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 3 + trial % 6;
    const int m = 1 + trial % 2;
    ModelPtr model;
    if (trial % 4 == 3) {
      model = std::make_shared<GhzXModel>(n, Amplitude(0.8, 0), Amplitude(0, 0.6));
    } else {
      model = std::make_shared<DenseModel>(DenseModel::haar(n, 100 + trial));
    }
    auto w = build_walk(*model, m);
    Eigen::EigenSolver<Eigen::MatrixXd> ep(transition_matrix(w), false);
    std::vector<double> p_spec;
    for (Eigen::Index i = 0; i < ep.eigenvalues().size(); ++i) {
      CHECK(std::abs(ep.eigenvalues()(i).imag()) < 1e-8);
      p_spec.push_back(ep.eigenvalues()(i).real());
    }
    p_spec.resize(std::size_t{1} << n, 0.0);  // L is zero off the support
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> el(build_observable_L(*model, m), Eigen::EigenvaluesOnly);
    std::vector<double> l_spec(el.eigenvalues().data(), el.eigenvalues().data() + el.eigenvalues().size());
    p_spec = sorted_desc(p_spec);
    l_spec = sorted_desc(l_spec);
    for (std::size_t i = 0; i < l_spec.size(); ++i) {
      CHECK(std::abs(p_spec[i] - l_spec[i]) < 1e-8);
      CHECK(l_spec[i] >= -1e-9);
      CHECK(l_spec[i] <= 1 + 1e-9);
    }
  }
}

TEST_CASE("spectral reports") {
  for (int n = 2; n <= 8; ++n) {
    auto rep = spectral_report(build_walk(PhaseStateModel(n, PhaseSource::pseudorandom_binary, n), 1));
    CHECK(rep.tau == doctest::Approx(n).epsilon(1e-9));
    CHECK(rep.eigenvalues.front() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK_FALSE(rep.degenerate);
  }
  const double h = 1.0 / std::sqrt(2.0);
  auto ghz = spectral_report(build_walk(GhzXModel(6, h, h), 2, WalkMode::exact_jump));
  CHECK(ghz.tau == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(ghz.support_size == 32);

  auto ghzz = spectral_report(build_walk(GhzZModel(5, h, h), 1));
  CHECK(ghzz.degenerate);
  CHECK(ghzz.degeneracy == 2);
  CHECK(std::isinf(ghzz.tau));
  CHECK_FALSE(ghzz.tau_prime.has_value());
  auto j = ghzz.to_json();
  CHECK(j["tau"].is_null());
  CHECK(j["degeneracy"] == 2);
}

TEST_CASE("fidelity sandwich with exact quantities") {
  RandomSource rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + trial % 5;
    const int m = 1 + trial % 2;
    DenseModel target = DenseModel::haar(n, 500 + trial);
    auto rep = spectral_report(build_walk(target, m));
    auto L = build_observable_L(target, m);
    // Lab state: perturbed target with white noise.
    auto amp = target.amplitudes();
    const double eta = 0.05 * (trial % 7);
    for (auto& a : amp) a += eta * Amplitude(rng.normal(), rng.normal()) / std::sqrt(double(amp.size()));
    NoisyState rho(DenseState(n, amp), 0.1 * (trial % 4));
    const DenseState psi(n, target.amplitudes());
    const double fid = (1 - rho.white_p()) * std::norm(psi.inner(rho.base())) + rho.white_p() / amp.size();
    const double tl = expectation(rho, L);
    CHECK(tl >= fid - 1e-9);
    CHECK(fid >= 1.0 - rep.tau * (1.0 - tl) - 1e-9);
  }
}

TEST_CASE("degenerate top eigenspace certifies overlap with the whole eigenspace") {
  // Two blocks {x : x_0 = x_1 = 0} and {x : x_0 = x_1 = 1} are disconnected for m = 1.
  const int n = 5;
  RandomSource rng(8);
  std::vector<Amplitude> amp(1u << n, 0.0);
  for (Bits x = 0; x < amp.size(); ++x) {
    if ((x & 3) == 0 || (x & 3) == 3) amp[x] = Amplitude(rng.normal(), rng.normal());
  }
  DenseModel target(n, amp);
  auto rep = spectral_report(build_walk(target, 1));
  REQUIRE(rep.degenerate);
  CHECK(rep.degeneracy == 2);
  REQUIRE(rep.tau_prime.has_value());
  auto L = build_observable_L(target, 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(L);
  Eigen::MatrixXcd pi0 = Eigen::MatrixXcd::Zero(L.rows(), L.cols());
  for (Eigen::Index i = 0; i < L.rows(); ++i) {
    if (es.eigenvalues()(i) > 1 - 1e-9) pi0 += es.eigenvectors().col(i) * es.eigenvectors().col(i).adjoint();
  }
  CHECK(pi0.trace().real() == doctest::Approx(2.0));
  for (int trial = 0; trial < 20; ++trial) {
    auto a = target.amplitudes();
    for (auto& v : a) v = v * (trial % 3 == 0 ? Amplitude(1, 0) : Amplitude(rng.normal(), rng.normal())) +
                          0.1 * Amplitude(rng.normal(), rng.normal());
    NoisyState rho(DenseState(n, a), 0.05 * (trial % 3));
    const double ov = expectation(rho, pi0);
    CHECK(ov >= 1.0 - *rep.tau_prime * (1.0 - expectation(rho, L)) - 1e-9);
  }
  // GHZ in the Z basis: two isolated vertices, L is the projector onto them.
  const double h = 1.0 / std::sqrt(2.0);
  auto lz = build_observable_L(GhzZModel(4, h, h), 1);
  CHECK(lz(0, 0).real() == doctest::Approx(1.0));
  CHECK(lz(15, 15).real() == doctest::Approx(1.0));
  CHECK(std::abs(lz.trace() - 2.0) < 1e-12);
}

TEST_CASE("MCMC") {
  RandomSource rng(9);
  PhaseStateModel uni(6, PhaseSource::pseudorandom_continuous, 1);
  CHECK(mcmc_sample(uni, 1, 37, 0, rng) == 37);
  std::vector<double> freq(64, 0.0);
  const int chains = 100000;
  for (int c = 0; c < chains; ++c) freq[mcmc_sample(uni, 1, 0, 30, rng)] += 1.0 / chains;
  double tv = 0.0;
  for (double f : freq) tv += 0.5 * std::abs(f - 1.0 / 64);
  CHECK(tv < 0.05);

  DenseModel point(4, [] {
    std::vector<Amplitude> a(16, 0.0);
    a[0] = 1.0;
    return a;
  }());
  for (int m = 1; m <= 2; ++m) {
    McmcChain chain(point, m);
    CHECK(chain.run(0, 500, rng) == 0);
  }

  DenseModel haar = DenseModel::haar(4, 3);
  auto pi = exact_distribution(haar);
  std::vector<double> f2(16, 0.0);
  McmcChain chain(haar, 2);
  for (int c = 0; c < chains; ++c) f2[chain.run(rng() & 15, 60, rng)] += 1.0 / chains;
  double tv2 = 0.0;
  for (int x = 0; x < 16; ++x) tv2 += 0.5 * std::abs(f2[x] - pi[x]);
  CHECK(tv2 < 0.02);
}

TEST_CASE("Porter-Thomas weights") {
  RandomSource rng(10);
  auto pt = porter_thomas(12, rng);
  double mean = 0.0, sum = 0.0;
  for (double z : pt.z) mean += z / pt.z.size();
  for (double p : pt.pi) sum += p;
  CHECK(std::abs(mean - 1.0) < 0.05);
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));

  const int n = 8;
  const double t = 1.0 / (64.0 * n);
  long bad = 0, total = 0;
  for (int rep = 0; rep < 400; ++rep) {
    auto p = porter_thomas(n, rng);
    for (double z : p.z) {
      bad += z <= t;
      ++total;
    }
  }
  const double expect = 1.0 - std::exp(-t);
  const double sigma = std::sqrt(expect * (1 - expect) / total);
  CHECK(std::abs(double(bad) / total - expect) < 3 * sigma);
}
