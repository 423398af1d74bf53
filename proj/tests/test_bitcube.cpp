#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "shadowcert/bitcube.hpp"
#include "shadowcert/error.hpp"

using namespace shadowcert;

TEST_CASE("bit strings print qubit 0 first") {
  BitString x(1, 3);
  CHECK(x.to_string() == "100");
  CHECK(BitString::parse("100").value() == 1);
  CHECK(BitString::parse("0110") == BitString(6, 4));
  CHECK_THROWS_AS(BitString::parse("01a"), Error);
  CHECK_THROWS_AS(BitString(8, 3), Error);
}

TEST_CASE("neighbors at distance") {
  auto a = neighbors_at_distance(BitString(0, 2), 1);
  REQUIRE(a.size() == 2);
  CHECK(a[0].to_string() == "10");  // value 1
  CHECK(a[1].to_string() == "01");  // value 2
  CHECK(a[0].value() == 1);
  CHECK(a[1].value() == 2);

  auto b = neighbors_at_distance(BitString(0, 3), 2);
  REQUIRE(b.size() == 3);
  CHECK(b[0].value() == 3);
  CHECK(b[1].value() == 5);
  CHECK(b[2].value() == 6);

  CHECK(neighbors_at_distance(BitString(0, 10), 3).size() == 120);

  try {
    neighbors_at_distance(BitString(0, 3), 4);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::invalid_distance);
  }
  CHECK_THROWS_AS(neighbors_at_distance(BitString(0, 3), 0), Error);
}

TEST_CASE("neighbor enumeration is exhaustive up to n = 12") {
  for (int n = 1; n <= 12; ++n) {
    const Bits x = (0x9E3779B9u * static_cast<Bits>(n)) & low_mask(n);
    for (int r = 1; r <= n; ++r) {
      auto nb = neighbors_at_distance(BitString(x, n), r);
      REQUIRE(nb.size() == binomial(n, r));
      for (std::size_t k = 0; k < nb.size(); ++k) {
        CHECK(hamming(nb[k].value(), x) == r);
        if (k > 0) CHECK(nb[k - 1].value() < nb[k].value());
      }
    }
  }
}

TEST_CASE("binomial and subset counts") {
  CHECK(binomial(10, 3) == 120);
  CHECK(binomial(30, 15) == 155117520);
  CHECK(binomial(4, 5) == 0);
  CHECK(subsets_up_to(4, 2) == 10);
  CHECK(subsets_up_to(2, 2) == 3);
}

TEST_CASE("subset scatter and gather are inverse") {
  QubitSubset s({1, 3, 4}, 6);
  CHECK(s.mask() == 0b11010);
  for (Bits l = 0; l < 8; ++l) CHECK(s.gather(s.scatter(l)) == l);
  CHECK(s.scatter(0b101) == ((Bits{1} << 1) | (Bits{1} << 4)));
  const Bits x = 0b101101;
  const Bits compact = compress_outside(x, s.mask(), 6);
  CHECK(compact == 0b111);  // qubits 0, 2, 5
  CHECK(expand_outside(compact, s.mask(), 6) == (x & ~s.mask()));
  CHECK_THROWS_AS(QubitSubset({2, 1}, 4), Error);
  CHECK_THROWS_AS(QubitSubset({}, 4), Error);
}

namespace {

double chi_square(const std::map<Bits, long>& counts, std::size_t cells, long draws) {
  const double expected = static_cast<double>(draws) / static_cast<double>(cells);
  double chi = 0.0;
  std::size_t seen = 0;
  for (const auto& [k, c] : counts) {
    chi += (c - expected) * (c - expected) / expected;
    ++seen;
  }
  chi += static_cast<double>(cells - seen) * expected;
  return chi;
}

// Upper 1e-3 quantile of chi^2 with k dof (Wilson-Hilferty).
double chi_square_critical(int k) {
  const double z = 3.090232;
  const double a = 2.0 / (9.0 * k);
  return k * std::pow(1.0 - a + z * std::sqrt(a), 3.0);
}

}  // namespace

TEST_CASE("sample_subset small cases") {
  RandomSource rng(7);
  for (int t = 0; t < 200; ++t) CHECK(sample_subset(5, 1, rng).size() == 1);
  try {
    sample_subset(3, 0, rng);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::invalid_level);
  }
}

TEST_CASE("sample_subset is uniform over subsets of size at most m") {
  const long draws = 1000000;
  for (int n = 1; n <= 6; ++n) {
    for (int m = 1; m <= std::min(3, n); ++m) {
      RandomSource rng(1000 + 10 * n + m);
      std::map<Bits, long> counts;
      for (long t = 0; t < draws; ++t) {
        auto s = sample_subset(n, m, rng);
        REQUIRE(s.size() <= m);
        ++counts[s.mask()];
      }
      const auto cells = subsets_up_to(n, m);
      CHECK(counts.size() == cells);
      if (cells > 1) {
        CHECK(chi_square(counts, cells, draws) < chi_square_critical(static_cast<int>(cells) - 1));
      }
    }
  }
}

TEST_CASE("n=4 m=2 frequencies within 4 sigma of 1/10") {
  RandomSource rng(99);
  const long draws = 1000000;
  std::map<Bits, long> counts;
  for (long t = 0; t < draws; ++t) ++counts[sample_subset(4, 2, rng).mask()];
  REQUIRE(counts.size() == 10);
  const double sigma = std::sqrt(draws * 0.1 * 0.9);
  for (const auto& [mask, c] : counts) CHECK(std::abs(c - 0.1 * draws) < 4 * sigma);
}

TEST_CASE("random streams reproduce and split") {
  RandomSource a(42, 3), b(42, 3), c(42, 4);
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    const auto va = a();
    CHECK(va == b());
    differs |= va != c();
  }
  CHECK(differs);
  RandomSource p(5);
  auto s1 = p.split(1);
  auto s1b = p.split(1);
  CHECK(s1() == s1b());
  CHECK(p.counter() == 0);
  double mean = 0.0;
  RandomSource e(11);
  for (int i = 0; i < 100000; ++i) mean += e.exponential();
  CHECK(mean / 100000 == doctest::Approx(1.0).epsilon(0.02));
  std::set<std::uint64_t> bounded;
  for (int i = 0; i < 1000; ++i) bounded.insert(e.below(7));
  CHECK(bounded.size() == 7);
  CHECK(*bounded.rbegin() == 6);
}
