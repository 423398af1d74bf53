#pragma once

// Running moments and the fixed-shard reduction used by every Monte Carlo loop.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "shadowcert/parallel.hpp"
#include "shadowcert/random.hpp"

namespace shadowcert {

inline constexpr std::uint64_t kShardSize = 8192;

struct Moments {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::uint64_t count = 0;

  void add(double w) {
    sum += w;
    sum_sq += w * w;
    ++count;
  }
  void merge(const Moments& o) {
    sum += o.sum;
    sum_sq += o.sum_sq;
    count += o.count;
  }
  double mean() const { return count ? sum / static_cast<double>(count) : 0.0; }
  // Unbiased sample variance.
  double variance() const {
    if (count < 2) return 0.0;
    const double c = static_cast<double>(count);
    return std::max(0.0, (sum_sq - c * mean() * mean()) / (c - 1.0));
  }
  double std_error() const { return count ? std::sqrt(variance() / static_cast<double>(count)) : 0.0; }
};

// Runs body(shard_rng, index, acc) over fixed-size shards, shard s drawing
// from base.split(s), and merges the accumulators in shard order. Results do
// not depend on the worker count.
template <class Acc, class Body>
Acc sharded(std::uint64_t total, const RandomSource& base, Body&& body) {
  const std::uint64_t shards = (total + kShardSize - 1) / kShardSize;
  std::vector<Acc> parts(shards);
  parallel_shards(shards, [&](std::size_t s) {
    RandomSource rng = base.split(s);
    const std::uint64_t begin = s * kShardSize;
    const std::uint64_t end = std::min(total, begin + kShardSize);
    for (std::uint64_t i = begin; i < end; ++i) body(rng, i, parts[s]);
  });
  Acc out;
  for (const auto& p : parts) out.merge(p);
  return out;
}

// Fresh stream for one experiment, advancing the caller's generator once.
inline RandomSource derive(RandomSource& rng) { return rng.split(rng()); }

}  // namespace shadowcert
