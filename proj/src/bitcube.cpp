#include "shadowcert/bitcube.hpp"

#include <algorithm>

#include "shadowcert/error.hpp"

namespace shadowcert {

std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t result = 1;
  for (int i = 1; i <= k; ++i) {
    result = result * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  }
  return result;
}

std::uint64_t subsets_up_to(int n, int m) {
  std::uint64_t total = 0;
  for (int k = 1; k <= std::min(m, n); ++k) total += binomial(n, k);
  return total;
}

BitString::BitString(Bits value, int n) : value_(value), n_(n) {
  if (n < 1 || n > kMaxQubits) {
    throw Error(ErrorKind::invalid_argument, "qubit count out of range: " + std::to_string(n));
  }
  if ((value & ~low_mask(n)) != 0) {
    throw Error(ErrorKind::invalid_argument, "bit string value exceeds 2^n");
  }
}

std::string BitString::to_string() const {
  std::string out(static_cast<std::size_t>(n_), '0');
  for (int i = 0; i < n_; ++i) {
    if (bit(i)) out[static_cast<std::size_t>(i)] = '1';
  }
  return out;
}

BitString BitString::parse(std::string_view text) {
  if (text.empty() || text.size() > kMaxQubits) {
    throw Error(ErrorKind::parse_error, "bad bit string length");
  }
  Bits value = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '1') {
      value |= Bits{1} << i;
    } else if (text[i] != '0') {
      throw Error(ErrorKind::parse_error, "bit string may only contain 0 and 1");
    }
  }
  return BitString(value, static_cast<int>(text.size()));
}

std::vector<BitString> neighbors_at_distance(const BitString& x, int r) {
  if (r < 1 || r > x.n()) {
    throw Error(ErrorKind::invalid_distance,
                "distance " + std::to_string(r) + " outside [1, " + std::to_string(x.n()) + "]");
  }
  std::vector<Bits> values;
  values.reserve(binomial(x.n(), r));
  for_each_mask_of_weight(x.n(), r, [&](Bits mask) { values.push_back(x.value() ^ mask); });
  std::sort(values.begin(), values.end());
  std::vector<BitString> out;
  out.reserve(values.size());
  for (Bits v : values) out.emplace_back(v, x.n());
  return out;
}

QubitSubset::QubitSubset(std::vector<int> indices, int n) : indices_(std::move(indices)), n_(n) {
  if (indices_.empty() || static_cast<int>(indices_.size()) > n) {
    throw Error(ErrorKind::invalid_argument, "subset size must be in [1, n]");
  }
  for (std::size_t j = 0; j < indices_.size(); ++j) {
    if (indices_[j] < 0 || indices_[j] >= n) {
      throw Error(ErrorKind::invalid_argument, "subset index out of range");
    }
    if (j > 0 && indices_[j] <= indices_[j - 1]) {
      throw Error(ErrorKind::invalid_argument, "subset indices must be strictly increasing");
    }
    mask_ |= Bits{1} << indices_[j];
  }
}

QubitSubset QubitSubset::from_mask(Bits mask, int n) {
  std::vector<int> idx;
  for (int i = 0; i < n; ++i) {
    if (bit_of(mask, i)) idx.push_back(i);
  }
  return QubitSubset(std::move(idx), n);
}

Bits QubitSubset::scatter(Bits local) const noexcept {
  Bits out = 0;
  for (std::size_t j = 0; j < indices_.size(); ++j) {
    out |= static_cast<Bits>((local >> j) & 1U) << indices_[j];
  }
  return out;
}

Bits QubitSubset::gather(Bits x) const noexcept {
  Bits out = 0;
  for (std::size_t j = 0; j < indices_.size(); ++j) {
    out |= static_cast<Bits>((x >> indices_[j]) & 1U) << j;
  }
  return out;
}

namespace {

std::vector<int> floyd_sample(int n, int r, RandomSource& rng) {
  std::vector<int> chosen;
  chosen.reserve(static_cast<std::size_t>(r));
  Bits used = 0;
  for (int j = n - r; j < n; ++j) {
    const int t = static_cast<int>(rng.below(static_cast<std::uint64_t>(j) + 1));
    const int pick = bit_of(used, t) ? j : t;
    used |= Bits{1} << pick;
    chosen.push_back(pick);
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

}  // namespace

QubitSubset sample_subset(int n, int m, RandomSource& rng) {
  if (m < 1) throw Error(ErrorKind::invalid_level, "level must be >= 1");
  if (m > n) throw Error(ErrorKind::invalid_level, "level exceeds qubit count");
  std::uint64_t u = rng.below(subsets_up_to(n, m));
  int r = 1;
  for (; r < m; ++r) {
    const std::uint64_t c = binomial(n, r);
    if (u < c) break;
    u -= c;
  }
  return QubitSubset(floyd_sample(n, r, rng), n);
}

QubitSubset sample_subset_exact(int n, int r, RandomSource& rng) {
  if (r < 1 || r > n) throw Error(ErrorKind::invalid_level, "subset size outside [1, n]");
  return QubitSubset(floyd_sample(n, r, rng), n);
}

Bits compress_outside(Bits x, Bits mask, int n) noexcept {
  Bits out = 0;
  int j = 0;
  for (int i = 0; i < n; ++i) {
    if (bit_of(mask, i)) continue;
    out |= static_cast<Bits>(bit_of(x, i)) << j;
    ++j;
  }
  return out;
}

Bits expand_outside(Bits compact, Bits mask, int n) noexcept {
  Bits out = 0;
  int j = 0;
  for (int i = 0; i < n; ++i) {
    if (bit_of(mask, i)) continue;
    out |= static_cast<Bits>(bit_of(compact, j)) << i;
    ++j;
  }
  return out;
}

std::vector<Bits> hypercube_path(Bits s, Bits t, int i, int n) {
  if (i < 0 || i >= n) throw Error(ErrorKind::invalid_argument, "path start bit out of range");
  std::vector<Bits> path{s};
  Bits cur = flip(s, i);
  path.push_back(cur);
  for (int k = 1; k <= n; ++k) {
    const int j = (i + k) % n;
    if (bit_of(cur ^ t, j)) {
      cur = flip(cur, j);
      path.push_back(cur);
    }
  }
  return path;
}

}  // namespace shadowcert
