#include "shadowcert/state.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>

#include "shadowcert/error.hpp"

namespace shadowcert {

DenseState::DenseState(int n, std::vector<Amplitude> amplitudes) : n_(n), amp_(std::move(amplitudes)) {
  if (n < 1 || n > kMaxDenseQubits) throw Error(ErrorKind::too_large, "dense state needs 1 <= n <= 30");
  if (amp_.size() != (std::size_t{1} << n)) {
    throw Error(ErrorKind::invalid_argument, "amplitude vector must have 2^n entries");
  }
  double norm = 0.0;
  for (const auto& a : amp_) norm += std::norm(a);
  if (!(norm > 0.0)) throw Error(ErrorKind::empty_support, "zero state vector");
  const double s = 1.0 / std::sqrt(norm);
  for (auto& a : amp_) a *= s;
}

DenseState DenseState::from_model(const QueryModel& model) {
  return DenseState(model.num_qubits(), dense_amplitudes(model));
}

DenseState DenseState::basis(int n, Bits x) {
  std::vector<Amplitude> amp(std::size_t{1} << n);
  amp.at(x) = 1.0;
  return DenseState(n, std::move(amp));
}

Amplitude DenseState::inner(const DenseState& other) const {
  if (other.n_ != n_) throw Error(ErrorKind::invalid_argument, "qubit counts differ");
  Amplitude acc = 0.0;
  for (std::size_t x = 0; x < amp_.size(); ++x) acc += std::conj(amp_[x]) * other.amp_[x];
  return acc;
}

std::string_view to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::none: return "none";
    case NoiseKind::white: return "white";
    case NoiseKind::coherent_haar: return "coherent_haar";
    case NoiseKind::coherent_phase: return "coherent_phase";
  }
  return "?";
}

NoiseSpec NoiseSpec::parse(std::string_view text) {
  NoiseSpec spec;
  const auto colon = text.find(':');
  const auto name = text.substr(0, colon);
  if (name == "none") spec.kind = NoiseKind::none;
  else if (name == "white") spec.kind = NoiseKind::white;
  else if (name == "coherent_haar") spec.kind = NoiseKind::coherent_haar;
  else if (name == "coherent_phase") spec.kind = NoiseKind::coherent_phase;
  else throw Error(ErrorKind::invalid_config, "unknown noise model '" + std::string(text) + "'");
  if (colon != std::string_view::npos) {
    try {
      std::size_t used = 0;
      const std::string num(text.substr(colon + 1));
      spec.p = std::stod(num, &used);
      if (used != num.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw Error(ErrorKind::invalid_config, "bad noise strength in '" + std::string(text) + "'");
    }
  }
  if (!(spec.p >= 0.0 && spec.p <= 1.0)) throw Error(ErrorKind::invalid_config, "noise strength outside [0, 1]");
  return spec;
}

std::string NoiseSpec::to_string() const {
  std::string out(shadowcert::to_string(kind));
  if (kind != NoiseKind::none) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, p);
    out += ':';
    out.append(buf, ptr);
  }
  return out;
}

NoisyState::NoisyState(DenseState base, double white_p) : base_(std::move(base)), white_p_(white_p) {
  if (!(white_p >= 0.0 && white_p <= 1.0)) throw Error(ErrorKind::invalid_argument, "white noise p outside [0, 1]");
  auto cdf = std::make_shared<std::vector<double>>(base_.dim());
  double acc = 0.0;
  for (std::size_t x = 0; x < base_.dim(); ++x) {
    acc += std::norm(base_[x]);
    (*cdf)[x] = acc;
  }
  cdf_ = std::move(cdf);
}

Bits NoisyState::sample(RandomSource& rng, bool* from_noise) const {
  const bool noisy = white_p_ > 0.0 && rng.bernoulli(white_p_);
  if (from_noise) *from_noise = noisy;
  if (noisy) return rng() & low_mask(n());
  const auto& cdf = *cdf_;
  const double u = rng.uniform() * cdf.back();
  auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  if (it == cdf.end()) --it;
  return static_cast<Bits>(it - cdf.begin());
}

NoisyState apply_noise(const DenseState& state, const NoiseSpec& noise, RandomSource& rng) {
  if (noise.p < 0.0 || noise.p > 1.0) throw Error(ErrorKind::invalid_argument, "noise strength outside [0, 1]");
  switch (noise.kind) {
    case NoiseKind::none:
      return NoisyState(state, 0.0);
    case NoiseKind::white:
      return NoisyState(state, noise.p);
    case NoiseKind::coherent_haar: {
      const double d = static_cast<double>(state.dim());
      auto amp = state.amplitudes();
      for (auto& a : amp) {
        const double g1 = rng.normal();
        const double g2 = rng.normal();
        a += noise.p * Amplitude(g1, g2) / d;
      }
      return NoisyState(DenseState(state.n(), std::move(amp)), 0.0);
    }
    case NoiseKind::coherent_phase: {
      const double sqrt_d = std::sqrt(static_cast<double>(state.dim()));
      auto amp = state.amplitudes();
      for (auto& a : amp) {
        a *= std::polar(1.0, std::numbers::pi / 2 * noise.p * rng.normal());
        const double g1 = rng.normal();
        const double g2 = rng.normal();
        a += 0.75 * noise.p * Amplitude(g1, g2) / sqrt_d;
      }
      return NoisyState(DenseState(state.n(), std::move(amp)), 0.0);
    }
  }
  return NoisyState(state, 0.0);
}

ZMeasurement measure_z_except(const NoisyState& state, const QubitSubset& keep, RandomSource& rng) {
  const int n = state.n();
  const int r = keep.size();
  if (keep.n() != n) throw Error(ErrorKind::invalid_argument, "subset built for a different qubit count");
  bool noisy = false;
  const Bits x = state.sample(rng, &noisy);

  ZMeasurement out;
  out.z_full = x & ~keep.mask();
  out.z = compress_outside(x, keep.mask(), n);
  const std::size_t local_dim = std::size_t{1} << r;
  out.post.assign(local_dim, 0.0);
  double ideal_weight = 0.0;
  for (Bits l = 0; l < local_dim; ++l) {
    const Amplitude a = state.base()[out.z_full | keep.scatter(l)];
    ideal_weight += std::norm(a);
    if (!noisy) out.post[l] = a;
  }
  if (noisy) {
    out.post[keep.gather(x)] = 1.0;
  } else {
    const double s = 1.0 / std::sqrt(ideal_weight);
    for (auto& a : out.post) a *= s;
  }
  out.weight = (1.0 - state.white_p()) * ideal_weight + state.white_p() * std::ldexp(1.0, r - n);
  return out;
}

std::string_view to_string(Basis b) {
  switch (b) {
    case Basis::X: return "X";
    case Basis::Y: return "Y";
    case Basis::Z: return "Z";
  }
  return "?";
}

std::string_view to_string(Eigenstate s) {
  switch (s) {
    case Eigenstate::zero: return "0";
    case Eigenstate::one: return "1";
    case Eigenstate::plus: return "+";
    case Eigenstate::minus: return "-";
    case Eigenstate::iplus: return "i+";
    case Eigenstate::iminus: return "i-";
  }
  return "?";
}

Basis parse_basis(std::string_view s) {
  if (s == "X") return Basis::X;
  if (s == "Y") return Basis::Y;
  if (s == "Z") return Basis::Z;
  throw Error(ErrorKind::parse_error, "unknown basis '" + std::string(s) + "'");
}

Eigenstate parse_eigenstate(std::string_view s) {
  if (s == "0") return Eigenstate::zero;
  if (s == "1") return Eigenstate::one;
  if (s == "+") return Eigenstate::plus;
  if (s == "-") return Eigenstate::minus;
  if (s == "i+") return Eigenstate::iplus;
  if (s == "i-") return Eigenstate::iminus;
  throw Error(ErrorKind::parse_error, "unknown outcome '" + std::string(s) + "'");
}

Basis basis_of(Eigenstate s) noexcept {
  switch (s) {
    case Eigenstate::zero:
    case Eigenstate::one: return Basis::Z;
    case Eigenstate::plus:
    case Eigenstate::minus: return Basis::X;
    default: return Basis::Y;
  }
}

Eigenstate eigenstate(Basis b, int outcome) noexcept {
  switch (b) {
    case Basis::Z: return outcome ? Eigenstate::one : Eigenstate::zero;
    case Basis::X: return outcome ? Eigenstate::minus : Eigenstate::plus;
    case Basis::Y: return outcome ? Eigenstate::iminus : Eigenstate::iplus;
  }
  return Eigenstate::zero;
}

std::array<Amplitude, 2> ket(Eigenstate s) noexcept {
  const double h = std::numbers::sqrt2 / 2;
  switch (s) {
    case Eigenstate::zero: return {1.0, 0.0};
    case Eigenstate::one: return {0.0, 1.0};
    case Eigenstate::plus: return {h, h};
    case Eigenstate::minus: return {h, -h};
    case Eigenstate::iplus: return {Amplitude(h, 0), Amplitude(0, h)};
    case Eigenstate::iminus: return {Amplitude(h, 0), Amplitude(0, -h)};
  }
  return {1.0, 0.0};
}

std::array<Amplitude, 4> shadow_factor_matrix(Eigenstate s) noexcept {
  const auto k = ket(s);
  return {3.0 * k[0] * std::conj(k[0]) - 1.0, 3.0 * k[0] * std::conj(k[1]),
          3.0 * k[1] * std::conj(k[0]), 3.0 * k[1] * std::conj(k[1]) - 1.0};
}

namespace {

// Projects qubit j of v onto |s>, leaving the product form |s> (x) rest.
// Returns the probability of that outcome relative to the current norm.
double project_qubit(std::vector<Amplitude>& v, int j, Eigenstate s) {
  const auto k = ket(s);
  const Bits bit = Bits{1} << j;
  double prob = 0.0;
  for (Bits i = 0; i < v.size(); ++i) {
    if (i & bit) continue;
    const Amplitude c = std::conj(k[0]) * v[i] + std::conj(k[1]) * v[i | bit];
    v[i] = c * k[0];
    v[i | bit] = c * k[1];
    prob += std::norm(c);
  }
  return prob;
}

double squared_norm(const std::vector<Amplitude>& v) {
  double s = 0.0;
  for (const auto& a : v) s += std::norm(a);
  return s;
}

int local_qubits(std::size_t dim) {
  if (dim == 0 || (dim & (dim - 1)) != 0) throw Error(ErrorKind::invalid_argument, "local state dimension must be 2^r");
  return std::countr_zero(dim);
}

}  // namespace

std::vector<ShadowFactor> shadow_measure(std::vector<Amplitude> post, RandomSource& rng) {
  const int r = local_qubits(post.size());
  if (r < 1) throw Error(ErrorKind::invalid_argument, "shadow measurement needs r >= 1");
  std::vector<ShadowFactor> out;
  out.reserve(static_cast<std::size_t>(r));
  double norm = squared_norm(post);
  for (int j = 0; j < r; ++j) {
    const auto basis = static_cast<Basis>(rng.below(3));
    auto trial = post;
    const double p0 = project_qubit(trial, j, eigenstate(basis, 0)) / norm;
    const int outcome = rng.uniform() < p0 ? 0 : 1;
    const Eigenstate s = eigenstate(basis, outcome);
    if (outcome == 0) {
      post = std::move(trial);
    } else {
      project_qubit(post, j, s);
    }
    norm = squared_norm(post);
    out.push_back({basis, s});
  }
  return out;
}

double branch_probability(const std::vector<Amplitude>& post, const std::vector<Eigenstate>& outcomes) {
  const int r = local_qubits(post.size());
  if (static_cast<int>(outcomes.size()) != r) throw Error(ErrorKind::record_mismatch, "outcome count differs from r");
  auto v = post;
  const double norm = squared_norm(v);
  for (int j = 0; j < r; ++j) project_qubit(v, j, outcomes[static_cast<std::size_t>(j)]);
  return squared_norm(v) / norm;
}

Eigen::MatrixXcd shadow_matrix(const std::vector<ShadowFactor>& factors) {
  const int r = static_cast<int>(factors.size());
  const Eigen::Index dim = Eigen::Index{1} << r;
  std::vector<std::array<Amplitude, 4>> f;
  for (const auto& fac : factors) f.push_back(shadow_factor_matrix(fac.outcome));
  Eigen::MatrixXcd m(dim, dim);
  for (Eigen::Index a = 0; a < dim; ++a) {
    for (Eigen::Index b = 0; b < dim; ++b) {
      Amplitude v = 1.0;
      for (int j = 0; j < r; ++j) v *= f[static_cast<std::size_t>(j)][2 * ((a >> j) & 1) + ((b >> j) & 1)];
      m(a, b) = v;
    }
  }
  return m;
}

double expectation(const NoisyState& state, const Eigen::MatrixXcd& op) {
  const auto dim = static_cast<Eigen::Index>(state.base().dim());
  if (op.rows() != dim || op.cols() != dim) throw Error(ErrorKind::invalid_argument, "operator dimension mismatch");
  Eigen::Map<const Eigen::VectorXcd> psi(state.base().amplitudes().data(), dim);
  const double pure = (psi.adjoint() * op * psi)(0, 0).real();
  const double trace = op.trace().real() / static_cast<double>(dim);
  return (1.0 - state.white_p()) * pure + state.white_p() * trace;
}

}  // namespace shadowcert
