#pragma once

// Fidelity, XEB, normalized shadow overlap, sparse-observable Monte Carlo,
// purity and median-of-means aggregation.

#include <functional>
#include <span>
#include <vector>

#include "shadowcert/models.hpp"
#include "shadowcert/state.hpp"

namespace shadowcert {

// (1 - p) |<psi|base>|^2 + p / d.
double exact_fidelity(const NoisyState& rho, const DenseState& psi);
double exact_fidelity(const NoisyState& rho, const QueryModel& model);

using PhaseFunction = std::function<double(Bits)>;

// |mean_x exp(i (pred(x) - truth(x)))|^2 over T uniform strings.
double phase_fidelity(const PhaseFunction& truth, const PhaseFunction& pred, int n, std::uint64_t samples,
                      RandomSource& rng);

struct XebResult {
  double value = 0.0;  // normalized linear XEB
  double std_error = 0.0;
  double raw = 0.0;            // mean of p(sample)
  double normalization = 0.0;  // sum_x p(x)^2
};

// Raises degenerate_denominator when sum p^2 - 1/d <= 1e-12 / d.
XebResult xeb(std::span<const Bits> samples, std::span<const double> ideal);

// (2^m / (2^m - 1)) ((d - 1) / d) (omega - 2^-m) + 1/d with d = 2^n.
double normalized_shadow_overlap(double omega, int m, int n);
// Standard error mapped through the same affine map.
double normalized_shadow_overlap_se(double omega_se, int m, int n);

struct SparseEntry {
  Bits y;
  Amplitude value;  // <x|O|y>
};

class SparseObservable {
 public:
  virtual ~SparseObservable() = default;
  virtual int num_qubits() const = 0;
  // Clears `out` and appends the nonzero entries of row x.
  virtual void row(Bits x, std::vector<SparseEntry>& out) const = 0;
  virtual std::size_t sparsity() const = 0;
};

struct PauliTerm {
  Amplitude coeff;
  Bits x_mask = 0;  // X or Y positions
  Bits z_mask = 0;  // Z or Y positions

  // "XIZY" style, qubit 0 first.
  static PauliTerm parse(Amplitude coeff, std::string_view label);
};

class PauliSum final : public SparseObservable {
 public:
  PauliSum(int n, std::vector<PauliTerm> terms);

  int num_qubits() const override { return n_; }
  void row(Bits x, std::vector<SparseEntry>& out) const override;
  std::size_t sparsity() const override { return terms_.size(); }
  const std::vector<PauliTerm>& terms() const noexcept { return terms_; }
  bool hermitian() const;

  Json to_json() const;
  static PauliSum from_json(const Json& j);
  // Sum of random Pauli terms of weight <= k with N(0,1) real coefficients.
  static PauliSum random_local(int n, int k, int terms, RandomSource& rng);

 private:
  int n_;
  std::vector<PauliTerm> terms_;
};

struct MoMConfig {
  double epsilon = 0.1;
  double delta = 0.05;
  std::uint64_t batch_size = 0;  // B
  std::uint64_t batches = 0;     // K

  // B = ceil(34 second_moment / eps^2), K = ceil(2 ln(2/delta)).
  static MoMConfig from_bound(double epsilon, double delta, double second_moment);
  void validate() const;
};

struct MoMEstimate {
  Amplitude value;   // componentwise median of the batch means
  Amplitude mean;    // plain mean over all samples
  double variance = 0.0;  // sample variance of the complex per-sample values
  std::uint64_t samples = 0;
  std::uint64_t resampled = 0;  // draws rejected for a zero amplitude
  std::vector<Amplitude> batch_means;
};

// Median of means over consecutive batches of size values.size() / batches.
MoMEstimate median_of_means(std::span<const Amplitude> values, std::uint64_t batches);
double median_of_means(std::span<const double> values, std::uint64_t batches);

// sum_y O_xy Psi(y) / Psi(x) for x drawn from `sampler`.
MoMEstimate sparse_expectation(const QueryModel& model, const Sampler& sampler, const SparseObservable& op,
                               const MoMConfig& config, RandomSource& rng);

struct PurityEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  double mom = 0.0;
  double reported = 0.0;  // mean clamped to [0, 1 + 3 std_error]
  std::uint64_t pairs = 0;
  std::uint64_t resampled = 0;
};

// Tr(rho_A^2) from pairs (x, x') via Re[Psi(x'_A x_B) Psi(x_A x'_B) / (Psi(x) Psi(x'))].
PurityEstimate purity(const QueryModel& model, const Sampler& sampler, Bits subsystem, std::uint64_t pairs,
                      std::uint64_t batches, RandomSource& rng);

}  // namespace shadowcert
