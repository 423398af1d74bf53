#pragma once

// Amplitude oracles Psi(x) for the target-state families.

#include <complex>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "shadowcert/bitcube.hpp"
#include "shadowcert/random.hpp"

namespace shadowcert {

using Amplitude = std::complex<double>;
using Json = nlohmann::json;

class QueryModel {
 public:
  virtual ~QueryModel() = default;

  virtual int num_qubits() const = 0;
  // Unnormalized amplitude; deterministic and reentrant.
  virtual Amplitude amplitude(Bits x) const = 0;
  // Known value of sum_x |Psi(x)|^2, when available.
  virtual std::optional<double> norm_hint() const { return std::nullopt; }
  // True when |Psi(x)| is the same for every x.
  virtual bool uniform_magnitude() const { return false; }
  virtual Json descriptor() const = 0;

  Amplitude query(const BitString& x) const;
};

using ModelPtr = std::shared_ptr<const QueryModel>;

enum class PhaseSource { pseudorandom_binary, pseudorandom_continuous, correlated, constant };

std::string_view to_string(PhaseSource s);
PhaseSource parse_phase_source(std::string_view s);

// Psi(x) = exp(i phi(x)), unnormalized (norm 2^n).
class PhaseStateModel final : public QueryModel {
 public:
  PhaseStateModel(int n, PhaseSource source, std::uint64_t seed);

  int num_qubits() const override { return n_; }
  Amplitude amplitude(Bits x) const override { return std::polar(1.0, phase(x)); }
  std::optional<double> norm_hint() const override;
  bool uniform_magnitude() const override { return true; }
  Json descriptor() const override;

  double phase(Bits x) const;
  PhaseSource source() const noexcept { return source_; }
  std::uint64_t seed() const noexcept { return seed_; }
  // Multiples of pi/2 per pair (i, (i+10) mod n); only meaningful for the correlated source.
  const std::vector<int>& pair_multiples() const noexcept { return pair_k_; }

 private:
  int n_;
  PhaseSource source_;
  std::uint64_t seed_;
  std::vector<int> pair_k_;
};

// prod_i (cos r_i or sin r_i) * exp(i phi(x)); r_i ~ N(pi/4, (0.01 pi)^2), phi uniform.
class RotatedProductPhaseModel final : public QueryModel {
 public:
  RotatedProductPhaseModel(int n, std::uint64_t seed);

  int num_qubits() const override { return n_; }
  Amplitude amplitude(Bits x) const override;
  std::optional<double> norm_hint() const override { return 1.0; }
  Json descriptor() const override;

  const std::vector<double>& rotations() const noexcept { return rotation_; }

 private:
  int n_;
  std::uint64_t seed_;
  std::vector<double> rotation_;
};

// alpha0 |+...+> + alpha1 |-...->, written in the computational basis.
class GhzXModel final : public QueryModel {
 public:
  GhzXModel(int n, Amplitude alpha0, Amplitude alpha1);

  int num_qubits() const override { return n_; }
  Amplitude amplitude(Bits x) const override;
  std::optional<double> norm_hint() const override;
  bool uniform_magnitude() const override;
  Json descriptor() const override;

 private:
  int n_;
  Amplitude a0_, a1_;
  double scale_;
};

// alpha0 |0^n> + alpha1 |1^n>.
class GhzZModel final : public QueryModel {
 public:
  GhzZModel(int n, Amplitude alpha0, Amplitude alpha1);

  int num_qubits() const override { return n_; }
  Amplitude amplitude(Bits x) const override;
  std::optional<double> norm_hint() const override;
  Json descriptor() const override;

 private:
  int n_;
  Amplitude a0_, a1_;
};

// Explicit amplitude table. Haar states are a DenseModel tagged with their seed.
class DenseModel final : public QueryModel {
 public:
  DenseModel(int n, std::vector<Amplitude> amplitudes);
  static DenseModel haar(int n, std::uint64_t seed);

  int num_qubits() const override { return n_; }
  Amplitude amplitude(Bits x) const override { return amp_[x]; }
  std::optional<double> norm_hint() const override { return norm_; }
  Json descriptor() const override;

  const std::vector<Amplitude>& amplitudes() const noexcept { return amp_; }

 private:
  int n_;
  std::vector<Amplitude> amp_;
  double norm_;
  std::optional<std::uint64_t> haar_seed_;
};

// X-basis amplitudes of H^n D H^n |0^n>, where D is a T / T^-1 pattern and an
// optional nearest-neighbour CZ chain: Psi(b) = exp(2 pi i c(b) / 8) / sqrt(2^n).
class CliffordTPhaseModel final : public QueryModel {
 public:
  CliffordTPhaseModel(int n, std::vector<int> t_pattern, bool cz_chain);
  // Draws t_i uniformly from {-1, 0, 1}.
  static CliffordTPhaseModel random(int n, bool cz_chain, RandomSource& rng);

  int num_qubits() const override { return n_; }
  Amplitude amplitude(Bits x) const override;
  std::optional<double> norm_hint() const override { return 1.0; }
  bool uniform_magnitude() const override { return true; }
  Json descriptor() const override;

  int eighth_count(Bits b) const noexcept;
  const std::vector<int>& t_pattern() const noexcept { return t_; }
  bool cz_chain() const noexcept { return cz_; }
  int t_gate_count() const noexcept;

 private:
  int n_;
  std::vector<int> t_;
  bool cz_;
  double scale_;
};

// c * Psi(x).
class ScaledModel final : public QueryModel {
 public:
  ScaledModel(ModelPtr base, Amplitude scale);

  int num_qubits() const override { return base_->num_qubits(); }
  Amplitude amplitude(Bits x) const override { return scale_ * base_->amplitude(x); }
  std::optional<double> norm_hint() const override;
  bool uniform_magnitude() const override { return base_->uniform_magnitude(); }
  Json descriptor() const override;

 private:
  ModelPtr base_;
  Amplitude scale_;
};

ModelPtr model_from_json(const Json& j);

// pi(x) = |Psi(x)|^2 / norm over all 2^n strings (n <= kMaxDenseQubits).
std::vector<double> exact_distribution(const QueryModel& model);
// Normalized amplitude vector, norm computed by enumeration.
std::vector<Amplitude> dense_amplitudes(const QueryModel& model);
// |Psi(x)|^2 / norm_hint; needs-normalization without a hint.
double probability(const QueryModel& model, Bits x);

using Sampler = std::function<Bits(RandomSource&)>;

// Exact sampler from pi: closed form for uniform-magnitude families, a
// cumulative table otherwise.
Sampler measurement_sampler(const QueryModel& model);

}  // namespace shadowcert
