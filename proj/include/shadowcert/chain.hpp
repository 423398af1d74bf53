#pragma once

// The level-m hypercube walk whose stationary law is pi(x) = |<x|psi>|^2:
// weights W, transitions P, the observable L, and its spectrum.

#include <Eigen/Dense>
#include <limits>
#include <optional>
#include <vector>

#include "shadowcert/bitcube.hpp"
#include "shadowcert/models.hpp"

namespace shadowcert {

// up_to: moves to strings at distance 1..m (N = sum_k C(n,k)).
// exact_jump: moves to strings at distance exactly m (N = C(n,m)).
enum class WalkMode { up_to, exact_jump };

inline constexpr std::size_t kMaxDenseSupport = 4096;

struct WalkSpec {
  int n = 0;
  int m = 1;
  WalkMode mode = WalkMode::up_to;
  std::uint64_t num_moves = 0;  // N
  std::vector<Bits> support;    // ascending
  std::vector<double> pi;       // on support, sums to 1
  std::vector<int> index;       // 2^n -> support position or -1

  std::size_t size() const noexcept { return support.size(); }
  Json to_json() const;
};

std::uint64_t walk_moves(int n, int m, WalkMode mode);

// Visits the move masks of the walk (ascending weight, ascending value).
template <class Fn>
void for_each_move(int n, int m, WalkMode mode, Fn&& fn) {
  for (int r = mode == WalkMode::up_to ? 1 : m; r <= m; ++r) for_each_mask_of_weight(n, r, fn);
}

// pi over all 2^n strings, normalized internally.
WalkSpec build_walk(const std::vector<double>& pi, int n, int m, WalkMode mode = WalkMode::up_to);
WalkSpec build_walk(const QueryModel& model, int m, WalkMode mode = WalkMode::up_to);

// Dense |S| x |S| matrices indexed by support position.
Eigen::MatrixXd weight_matrix(const WalkSpec& walk);
Eigen::MatrixXd transition_matrix(const WalkSpec& walk);
// S^{-1/2} W S^{-1/2}.
Eigen::MatrixXd symmetric_walk_matrix(const WalkSpec& walk);

// Full 2^n x 2^n observable L = F S^{1/2} P S^{-1/2} F^dagger, zero off the support.
Eigen::MatrixXcd build_observable_L(const QueryModel& model, int m, WalkMode mode = WalkMode::up_to);

struct SpectralReport {
  std::vector<double> eigenvalues;  // descending
  double gap = 0.0;
  double tau = 0.0;        // +inf when degenerate
  int degeneracy = 1;      // multiplicity of the top eigenvalue
  bool degenerate = false;
  std::optional<double> tau_prime;  // 1 / (lambda_0 - first eigenvalue below the top cluster)
  std::size_t support_size = 0;

  Json to_json(bool with_eigenvalues = true) const;
};

inline constexpr double kDegeneracyTolerance = 1e-9;

SpectralReport spectral_report(const WalkSpec& walk);

// Random-walk trajectory using amplitude ratios only (no normalization).
class McmcChain {
 public:
  McmcChain(const QueryModel& model, int m, WalkMode mode = WalkMode::up_to);

  Bits step(Bits x, RandomSource& rng) const;
  Bits run(Bits start, std::uint64_t steps, RandomSource& rng) const;

 private:
  const QueryModel* model_;
  int m_;
  WalkMode mode_;
};

Bits mcmc_sample(const QueryModel& model, int m, Bits start, std::uint64_t steps, RandomSource& rng);

// Sampler running `steps` moves from a uniformly random start.
Sampler mcmc_sampler(ModelPtr model, int m, std::uint64_t steps);

struct PorterThomas {
  std::vector<double> z;   // i.i.d. Exp(1)
  std::vector<double> pi;  // z / sum z
};

PorterThomas porter_thomas(int n, RandomSource& rng);

}  // namespace shadowcert
