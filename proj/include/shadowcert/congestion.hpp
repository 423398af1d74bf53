#pragma once

// Canonical paths on the hypercube with low-weight vertices routed around,
// and the congestion bound on the level-1 walk: tau <= rho.

#include <iosfwd>
#include <vector>

#include "shadowcert/bitcube.hpp"
#include "shadowcert/random.hpp"

namespace shadowcert {

class CanonicalPaths {
 public:
  // z: unnormalized weights over {0,1}^n. Bad vertices have z <= 1/(64 n).
  // Without rng the first all-good start bit (and lowest good neighbor) is
  // used; with rng the choice is uniform among the valid ones.
  CanonicalPaths(std::vector<double> z, int n, RandomSource* rng = nullptr);

  int n() const noexcept { return n_; }
  bool bad(Bits x) const { return bad_[x] != 0; }
  std::size_t bad_count() const noexcept { return bad_count_; }
  double threshold() const noexcept { return 1.0 / (64.0 * n_); }
  // Designated good neighbor of x (x itself when x is good).
  Bits anchor(Bits x) const { return anchor_[x]; }

  // Vertices from x to y (x != y); construction_failed when good endpoints
  // have no all-good path.
  std::vector<Bits> path(Bits x, Bits y) const;
  void path(Bits x, Bits y, std::vector<Bits>& out) const;

 private:
  int n_;
  std::vector<double> z_;
  std::vector<char> bad_;
  std::vector<Bits> anchor_;
  std::size_t bad_count_ = 0;
  RandomSource* rng_;
};

struct EdgeLoad {
  Bits from = 0;
  int bit = 0;        // edge (from, from ^ 2^bit)
  double load = 0.0;  // sum of pi(x) pi(y) |gamma_xy| over paths using the oriented edge
  double capacity = 0.0;  // Q(e) = pi(u) P(u, v) = (1/n) pi(u) pi(v) / (pi(u) + pi(v))
  double congestion() const { return load / capacity; }
  std::uint64_t id(int n) const { return from * static_cast<std::uint64_t>(n) + static_cast<std::uint64_t>(bit); }
};

struct CongestionResult {
  double rho = 0.0;
  EdgeLoad worst;
  std::vector<EdgeLoad> edges;  // every oriented edge with nonzero load, ordered by id
  int max_path_length = 0;
  std::size_t bad_count = 0;
};

// Exact max-over-edges congestion of the canonical path system (n <= 12).
CongestionResult congestion_bound(const std::vector<double>& z, int n, RandomSource* rng = nullptr);

// edge_id,from,to,load,capacity,congestion
void write_edge_loads_csv(std::ostream& out, const CongestionResult& result, int n);

}  // namespace shadowcert
