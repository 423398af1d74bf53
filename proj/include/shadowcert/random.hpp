#pragma once

#include <cstdint>
#include <limits>

namespace shadowcert {

// Stateless 64-bit mixer. Used wherever a value must be a pure function of
// its inputs (pseudorandom phases, feature seeds, stream derivation).
std::uint64_t mix64(std::uint64_t x) noexcept;
std::uint64_t hash64(std::uint64_t a, std::uint64_t b) noexcept;

/// Counter-based, splittable generator.
///
/// Draw k of the stream identified by (seed, stream) is a pure function of
/// (seed, stream, k), so shards that derive their own stream via split()
/// reproduce bit-for-bit regardless of scheduling. Satisfies
/// UniformRandomBitGenerator.
class RandomSource {
 public:
  using result_type = std::uint64_t;

  explicit RandomSource(std::uint64_t seed, std::uint64_t stream = 0) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }
  std::uint64_t counter() const noexcept { return counter_; }

  // Child stream; does not advance this source.
  RandomSource split(std::uint64_t id) const noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }
  result_type operator()() noexcept;

  double uniform() noexcept;                        // [0, 1)
  double uniform_open() noexcept;                   // (0, 1)
  double normal() noexcept;                         // N(0, 1)
  double exponential() noexcept;                    // Exp(1)
  std::uint64_t below(std::uint64_t bound) noexcept;  // uniform in [0, bound)
  bool bernoulli(double p) noexcept;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace shadowcert
