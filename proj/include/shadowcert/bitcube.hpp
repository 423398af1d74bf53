#pragma once

// Bit-string arithmetic on the Boolean hypercube {0,1}^n.
//
// Convention: bit i of the integer value is the state of qubit i
// (little-endian). Every textual form in this project writes qubit 0 first,
// so "100" with n = 3 is the integer 1.

#include <bit>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "shadowcert/random.hpp"

namespace shadowcert {

using Bits = std::uint64_t;

inline constexpr int kMaxQubits = 63;
inline constexpr int kMaxDenseQubits = 30;

inline int popcount(Bits x) noexcept { return std::popcount(x); }
inline int hamming(Bits a, Bits b) noexcept { return std::popcount(a ^ b); }
inline int bit_of(Bits x, int i) noexcept { return static_cast<int>((x >> i) & 1U); }
inline Bits flip(Bits x, int i) noexcept { return x ^ (Bits{1} << i); }
inline Bits low_mask(int n) noexcept { return n >= 64 ? ~Bits{0} : (Bits{1} << n) - 1; }

std::uint64_t binomial(int n, int k);

// Number of nonempty subsets of {0..n-1} with size <= m.
std::uint64_t subsets_up_to(int n, int m);

class BitString {
 public:
  BitString(Bits value, int n);

  Bits value() const noexcept { return value_; }
  int n() const noexcept { return n_; }
  int bit(int i) const noexcept { return bit_of(value_, i); }
  int weight() const noexcept { return popcount(value_); }

  std::string to_string() const;
  static BitString parse(std::string_view text);

  friend bool operator==(const BitString&, const BitString&) = default;

 private:
  Bits value_;
  int n_;
};

// All strings at Hamming distance exactly r from x, ascending by value.
std::vector<BitString> neighbors_at_distance(const BitString& x, int r);

// Visits every r-bit mask over n positions in ascending order.
template <class Fn>
void for_each_mask_of_weight(int n, int r, Fn&& fn) {
  if (r < 0 || r > n) return;
  if (r == 0) {
    fn(Bits{0});
    return;
  }
  Bits mask = low_mask(r);
  const Bits limit = Bits{1} << n;
  while (mask < limit) {
    fn(mask);
    const Bits c = mask & (~mask + 1);
    const Bits r2 = mask + c;
    mask = (((r2 ^ mask) >> 2) / c) | r2;
  }
}

class QubitSubset {
 public:
  QubitSubset() = default;
  QubitSubset(std::vector<int> indices, int n);
  static QubitSubset from_mask(Bits mask, int n);

  const std::vector<int>& indices() const noexcept { return indices_; }
  int size() const noexcept { return static_cast<int>(indices_.size()); }
  int n() const noexcept { return n_; }
  Bits mask() const noexcept { return mask_; }

  // Scatter an r-bit local value into the subset positions.
  Bits scatter(Bits local) const noexcept;
  // Gather the subset positions of x into an r-bit local value.
  Bits gather(Bits x) const noexcept;

  friend bool operator==(const QubitSubset& a, const QubitSubset& b) {
    return a.n_ == b.n_ && a.indices_ == b.indices_;
  }

 private:
  std::vector<int> indices_;
  int n_ = 0;
  Bits mask_ = 0;
};

// Uniform over all sum_{k=1}^{m} C(n,k) nonempty subsets of size <= m.
QubitSubset sample_subset(int n, int m, RandomSource& rng);

// Uniform over the C(n,r) subsets of size exactly r.
QubitSubset sample_subset_exact(int n, int r, RandomSource& rng);

// Compact the bits of x outside `mask` into an (n - |mask|)-bit string.
Bits compress_outside(Bits x, Bits mask, int n) noexcept;
// Inverse of compress_outside; positions inside `mask` are left at zero.
Bits expand_outside(Bits compact, Bits mask, int n) noexcept;

// Vertices of the hypercube path from s to t that flips bit i first, then walks
// bits i+1, ..., n-1, 0, ..., i flipping wherever the current vertex differs
// from t. Length |s^t| when i is a differing bit, |s^t| + 2 otherwise.
std::vector<Bits> hypercube_path(Bits s, Bits t, int i, int n);

}  // namespace shadowcert
