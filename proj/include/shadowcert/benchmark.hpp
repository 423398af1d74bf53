#pragma once

// Noise sweeps comparing fidelity, normalized shadow overlap and XEB.

#include <iosfwd>
#include <string>
#include <vector>

#include "shadowcert/models.hpp"
#include "shadowcert/state.hpp"

namespace shadowcert {

// conditional: average the exact conditional overlap <post|L_z|post> per
// round (no Pauli sampling). shadow: full randomized-Pauli shadows.
enum class OverlapEstimator { conditional, shadow };

struct BenchmarkConfig {
  int m = 1;
  std::vector<NoiseKind> noise{NoiseKind::white};
  std::vector<double> p_grid{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::uint64_t shots = 10000;
  std::uint64_t seed = 0;
  OverlapEstimator estimator = OverlapEstimator::conditional;

  void validate(int n) const;
  Json to_json() const;
  static BenchmarkConfig from_json(const Json& j);
};

struct BenchmarkRow {
  std::string noise_type;
  double p = 0.0;
  double fidelity = 0.0;
  double normalized_shadow_overlap = 0.0;
  double shadow_se = 0.0;
  double xeb = 0.0;  // NaN when the target distribution is uniform
  double xeb_se = 0.0;
  int n = 0;
  int m = 0;
  std::uint64_t shots = 0;
  std::uint64_t seed = 0;
};

std::vector<BenchmarkRow> benchmark_sweep(const QueryModel& target, const BenchmarkConfig& config);

inline constexpr const char* kBenchmarkHeader =
    "noise_type,p,fidelity,normalized_shadow_overlap,shadow_se,xeb,xeb_se,n,m,shots,seed";
void write_benchmark_csv(std::ostream& out, const std::vector<BenchmarkRow>& rows);

}  // namespace shadowcert
