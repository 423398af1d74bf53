#pragma once

// Dense simulation of the lab state: noise, partial Z measurement and
// randomized single-qubit Pauli measurement.

#include <Eigen/Dense>
#include <array>
#include <memory>
#include <string>
#include <vector>

#include "shadowcert/bitcube.hpp"
#include "shadowcert/models.hpp"
#include "shadowcert/random.hpp"

namespace shadowcert {

class DenseState {
 public:
  DenseState(int n, std::vector<Amplitude> amplitudes);  // normalizes
  static DenseState from_model(const QueryModel& model);
  static DenseState basis(int n, Bits x);

  int n() const noexcept { return n_; }
  std::size_t dim() const noexcept { return amp_.size(); }
  const std::vector<Amplitude>& amplitudes() const noexcept { return amp_; }
  Amplitude operator[](Bits x) const { return amp_[x]; }

  Amplitude inner(const DenseState& other) const;  // <this|other>

 private:
  int n_;
  std::vector<Amplitude> amp_;
};

enum class NoiseKind { none, white, coherent_haar, coherent_phase };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::none;
  double p = 0.0;

  // "white:0.1", "coherent_haar:0.2", "coherent_phase:0.05", "none".
  static NoiseSpec parse(std::string_view text);
  std::string to_string() const;
};

std::string_view to_string(NoiseKind k);

// (1 - white_p) |base><base| + white_p I / 2^n. Coherent noise has already
// been folded into `base`.
class NoisyState {
 public:
  explicit NoisyState(DenseState base, double white_p = 0.0);

  const DenseState& base() const noexcept { return base_; }
  double white_p() const noexcept { return white_p_; }
  int n() const noexcept { return base_.n(); }

  // One computational-basis shot; sets *from_noise when the mixed branch fired.
  Bits sample(RandomSource& rng, bool* from_noise = nullptr) const;

 private:
  DenseState base_;
  double white_p_;
  std::shared_ptr<const std::vector<double>> cdf_;
};

NoisyState apply_noise(const DenseState& state, const NoiseSpec& noise, RandomSource& rng);

struct ZMeasurement {
  Bits z_full = 0;       // full n-bit outcome with kept positions zeroed
  Bits z = 0;            // the n - r measured bits, compacted in ascending qubit order
  std::vector<Amplitude> post;  // normalized 2^r vector over the kept qubits
  double weight = 0.0;   // Born probability of z under the mixture
};

ZMeasurement measure_z_except(const NoisyState& state, const QubitSubset& keep, RandomSource& rng);

enum class Basis { X, Y, Z };
enum class Eigenstate { zero, one, plus, minus, iplus, iminus };

std::string_view to_string(Basis b);
std::string_view to_string(Eigenstate s);
Basis parse_basis(std::string_view s);
Eigenstate parse_eigenstate(std::string_view s);
Basis basis_of(Eigenstate s) noexcept;
Eigenstate eigenstate(Basis b, int outcome) noexcept;  // outcome 0 -> +1 eigenvalue
std::array<Amplitude, 2> ket(Eigenstate s) noexcept;

// 2x2 matrix 3|s><s| - I as row-major {00, 01, 10, 11}.
std::array<Amplitude, 4> shadow_factor_matrix(Eigenstate s) noexcept;

struct ShadowFactor {
  Basis basis;
  Eigenstate outcome;
};

// Each qubit gets an independent uniform basis and a Born-sampled outcome.
std::vector<ShadowFactor> shadow_measure(std::vector<Amplitude> post, RandomSource& rng);

// Measures a fixed basis per qubit; used by the exact-branch tests.
double branch_probability(const std::vector<Amplitude>& post, const std::vector<Eigenstate>& outcomes);

// Tensor product of 3|s><s| - I factors; qubit j is bit j of the row index.
Eigen::MatrixXcd shadow_matrix(const std::vector<ShadowFactor>& factors);

// Tr(O rho) for a 2^n x 2^n operator.
double expectation(const NoisyState& state, const Eigen::MatrixXcd& op);

}  // namespace shadowcert
