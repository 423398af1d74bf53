#include "shadowcert/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "shadowcert/error.hpp"

namespace shadowcert {

namespace {

constexpr double kPi = std::numbers::pi;

void check_n(int n, int cap) {
  if (n < 1 || n > cap) {
    throw Error(ErrorKind::invalid_argument,
                "qubit count " + std::to_string(n) + " outside [1, " + std::to_string(cap) + "]");
  }
}

Json complex_json(Amplitude a) { return Json::array({a.real(), a.imag()}); }

Amplitude complex_from(const Json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (!j.is_array() || j.size() != 2) {
    throw Error(ErrorKind::invalid_config, "complex value must be [re, im]");
  }
  return {j.at(0).get<double>(), j.at(1).get<double>()};
}

double unit_from_hash(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

}  // namespace

Amplitude QueryModel::query(const BitString& x) const {
  if (x.n() != num_qubits()) {
    throw Error(ErrorKind::invalid_argument, "bit string length does not match the model");
  }
  return amplitude(x.value());
}

std::string_view to_string(PhaseSource s) {
  switch (s) {
    case PhaseSource::pseudorandom_binary: return "binary";
    case PhaseSource::pseudorandom_continuous: return "continuous";
    case PhaseSource::correlated: return "correlated";
    case PhaseSource::constant: return "constant";
  }
  return "?";
}

PhaseSource parse_phase_source(std::string_view s) {
  if (s == "binary") return PhaseSource::pseudorandom_binary;
  if (s == "continuous") return PhaseSource::pseudorandom_continuous;
  if (s == "correlated") return PhaseSource::correlated;
  if (s == "constant") return PhaseSource::constant;
  throw Error(ErrorKind::invalid_config, "unknown phase source '" + std::string(s) + "'");
}

// ---- phase states

PhaseStateModel::PhaseStateModel(int n, PhaseSource source, std::uint64_t seed)
    : n_(n), source_(source), seed_(seed) {
  check_n(n, kMaxQubits);
  if (source == PhaseSource::correlated) {
    RandomSource rng(seed, 0xC0DE);
    pair_k_.resize(static_cast<std::size_t>(n));
    for (auto& k : pair_k_) k = static_cast<int>(rng.below(4));
  }
}

std::optional<double> PhaseStateModel::norm_hint() const { return std::ldexp(1.0, n_); }

double PhaseStateModel::phase(Bits x) const {
  switch (source_) {
    case PhaseSource::pseudorandom_binary:
      return (hash64(seed_, x) >> 63) ? kPi : 0.0;
    case PhaseSource::pseudorandom_continuous:
      return 2.0 * kPi * unit_from_hash(hash64(seed_, x));
    case PhaseSource::correlated: {
      int quarters = 0;
      for (int i = 0; i < n_; ++i) {
        const int j = (i + 10) % n_;
        quarters += pair_k_[static_cast<std::size_t>(i)] * bit_of(x, i) * bit_of(x, j);
      }
      return 0.5 * kPi * static_cast<double>(quarters % 4);
    }
    case PhaseSource::constant:
      return 0.0;
  }
  return 0.0;
}

Json PhaseStateModel::descriptor() const {
  return {{"family", "phase"}, {"n", n_}, {"seed", seed_}, {"phases", std::string(to_string(source_))}};
}

// ---- rotated product with random phases

RotatedProductPhaseModel::RotatedProductPhaseModel(int n, std::uint64_t seed) : n_(n), seed_(seed) {
  check_n(n, kMaxQubits);
  RandomSource rng(seed, 0x707);
  rotation_.resize(static_cast<std::size_t>(n));
  for (auto& r : rotation_) r = kPi / 4 + 0.01 * kPi * rng.normal();
}

Amplitude RotatedProductPhaseModel::amplitude(Bits x) const {
  double mag = 1.0;
  for (int i = 0; i < n_; ++i) {
    const double r = rotation_[static_cast<std::size_t>(i)];
    mag *= bit_of(x, i) ? std::sin(r) : std::cos(r);
  }
  return std::polar(mag, 2.0 * kPi * unit_from_hash(hash64(seed_ ^ 0x5EED, x)));
}

Json RotatedProductPhaseModel::descriptor() const {
  return {{"family", "rotated-phase"}, {"n", n_}, {"seed", seed_}};
}

// ---- GHZ

GhzXModel::GhzXModel(int n, Amplitude alpha0, Amplitude alpha1)
    : n_(n), a0_(alpha0), a1_(alpha1), scale_(std::sqrt(std::ldexp(1.0, -n))) {
  check_n(n, kMaxQubits);
}

Amplitude GhzXModel::amplitude(Bits x) const {
  return (popcount(x) % 2 == 0 ? a0_ + a1_ : a0_ - a1_) * scale_;
}

std::optional<double> GhzXModel::norm_hint() const {
  return 0.5 * (std::norm(a0_ + a1_) + std::norm(a0_ - a1_));
}

bool GhzXModel::uniform_magnitude() const {
  return std::abs(std::abs(a0_ + a1_) - std::abs(a0_ - a1_)) < 1e-15;
}

Json GhzXModel::descriptor() const {
  return {{"family", "ghz-x"}, {"n", n_}, {"alpha0", complex_json(a0_)}, {"alpha1", complex_json(a1_)}};
}

GhzZModel::GhzZModel(int n, Amplitude alpha0, Amplitude alpha1) : n_(n), a0_(alpha0), a1_(alpha1) {
  check_n(n, kMaxQubits);
}

Amplitude GhzZModel::amplitude(Bits x) const {
  if (x == 0) return a0_;
  if (x == low_mask(n_)) return a1_;
  return {0.0, 0.0};
}

std::optional<double> GhzZModel::norm_hint() const { return std::norm(a0_) + std::norm(a1_); }

Json GhzZModel::descriptor() const {
  return {{"family", "ghz-z"}, {"n", n_}, {"alpha0", complex_json(a0_)}, {"alpha1", complex_json(a1_)}};
}

// ---- dense

DenseModel::DenseModel(int n, std::vector<Amplitude> amplitudes) : n_(n), amp_(std::move(amplitudes)) {
  check_n(n, kMaxDenseQubits);
  if (amp_.size() != (std::size_t{1} << n)) {
    throw Error(ErrorKind::invalid_argument, "amplitude table must have 2^n entries");
  }
  norm_ = 0.0;
  for (const auto& a : amp_) norm_ += std::norm(a);
}

DenseModel DenseModel::haar(int n, std::uint64_t seed) {
  check_n(n, 20);
  RandomSource rng(seed, 0x4A4A);
  std::vector<Amplitude> amp(std::size_t{1} << n);
  double norm = 0.0;
  for (auto& a : amp) {
    const double re = rng.normal();
    const double im = rng.normal();
    a = {re, im};
    norm += re * re + im * im;
  }
  const double s = 1.0 / std::sqrt(norm);
  for (auto& a : amp) a *= s;
  DenseModel out(n, std::move(amp));
  out.haar_seed_ = seed;
  return out;
}

Json DenseModel::descriptor() const {
  if (haar_seed_) return {{"family", "haar"}, {"n", n_}, {"seed", *haar_seed_}};
  Json table = Json::array();
  for (const auto& a : amp_) table.push_back(complex_json(a));
  return {{"family", "dense"}, {"n", n_}, {"amplitudes", table}};
}

// ---- Clifford+T

CliffordTPhaseModel::CliffordTPhaseModel(int n, std::vector<int> t_pattern, bool cz_chain)
    : n_(n), t_(std::move(t_pattern)), cz_(cz_chain) {
  check_n(n, kMaxQubits);
  if (static_cast<int>(t_.size()) != n) {
    throw Error(ErrorKind::invalid_argument, "t_pattern must have n entries");
  }
  for (int t : t_) {
    if (t < -1 || t > 1) throw Error(ErrorKind::invalid_argument, "t_pattern entries must be -1, 0 or 1");
  }
  scale_ = std::sqrt(std::ldexp(1.0, -n));
}

CliffordTPhaseModel CliffordTPhaseModel::random(int n, bool cz_chain, RandomSource& rng) {
  std::vector<int> t(static_cast<std::size_t>(n));
  for (auto& v : t) v = static_cast<int>(rng.below(3)) - 1;
  return CliffordTPhaseModel(n, std::move(t), cz_chain);
}

int CliffordTPhaseModel::eighth_count(Bits b) const noexcept {
  int c = 0;
  for (int i = 0; i < n_; ++i) c += t_[static_cast<std::size_t>(i)] * bit_of(b, i);
  if (cz_) {
    for (int i = 0; i + 1 < n_; ++i) c += 4 * (bit_of(b, i) & bit_of(b, i + 1));
  }
  return ((c % 8) + 8) % 8;
}

Amplitude CliffordTPhaseModel::amplitude(Bits x) const {
  return std::polar(scale_, 2.0 * kPi * eighth_count(x) / 8.0);
}

int CliffordTPhaseModel::t_gate_count() const noexcept {
  return static_cast<int>(std::count_if(t_.begin(), t_.end(), [](int t) { return t != 0; }));
}

Json CliffordTPhaseModel::descriptor() const {
  return {{"family", "clifford-t"}, {"n", n_}, {"t_pattern", t_}, {"cz_chain", cz_}};
}

// ---- scaled

ScaledModel::ScaledModel(ModelPtr base, Amplitude scale) : base_(std::move(base)), scale_(scale) {
  if (!base_) throw Error(ErrorKind::invalid_argument, "null base model");
}

std::optional<double> ScaledModel::norm_hint() const {
  auto h = base_->norm_hint();
  if (!h) return std::nullopt;
  return *h * std::norm(scale_);
}

Json ScaledModel::descriptor() const {
  return {{"family", "scaled"}, {"scale", complex_json(scale_)}, {"base", base_->descriptor()}};
}

// ---- factory

ModelPtr model_from_json(const Json& j) {
  try {
    const auto family = j.at("family").get<std::string>();
    if (family == "scaled") {
      return std::make_shared<ScaledModel>(model_from_json(j.at("base")), complex_from(j.at("scale")));
    }
    const int n = j.at("n").get<int>();
    if (family == "phase") {
      return std::make_shared<PhaseStateModel>(n, parse_phase_source(j.value("phases", "binary")),
                                               j.value("seed", std::uint64_t{0}));
    }
    if (family == "rotated-phase") {
      return std::make_shared<RotatedProductPhaseModel>(n, j.value("seed", std::uint64_t{0}));
    }
    if (family == "ghz-x" || family == "ghz-z") {
      const double h = 1.0 / std::sqrt(2.0);
      const Amplitude a0 = j.contains("alpha0") ? complex_from(j["alpha0"]) : Amplitude{h, 0};
      const Amplitude a1 = j.contains("alpha1") ? complex_from(j["alpha1"]) : Amplitude{h, 0};
      if (family == "ghz-x") return std::make_shared<GhzXModel>(n, a0, a1);
      return std::make_shared<GhzZModel>(n, a0, a1);
    }
    if (family == "haar") {
      return std::make_shared<DenseModel>(DenseModel::haar(n, j.value("seed", std::uint64_t{0})));
    }
    if (family == "dense") {
      std::vector<Amplitude> amp;
      for (const auto& a : j.at("amplitudes")) amp.push_back(complex_from(a));
      return std::make_shared<DenseModel>(n, std::move(amp));
    }
    if (family == "clifford-t") {
      return std::make_shared<CliffordTPhaseModel>(n, j.at("t_pattern").get<std::vector<int>>(),
                                                   j.value("cz_chain", true));
    }
    throw Error(ErrorKind::invalid_config, "unknown model family '" + family + "'");
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::invalid_config, std::string("model descriptor: ") + e.what());
  }
}

// ---- distributions

std::vector<Amplitude> dense_amplitudes(const QueryModel& model) {
  const int n = model.num_qubits();
  if (n > kMaxDenseQubits) throw Error(ErrorKind::too_large, "dense vector needs n <= 30");
  std::vector<Amplitude> amp(std::size_t{1} << n);
  double norm = 0.0;
  for (Bits x = 0; x < amp.size(); ++x) {
    amp[x] = model.amplitude(x);
    norm += std::norm(amp[x]);
  }
  if (norm <= 0.0) throw Error(ErrorKind::empty_support, "model has no nonzero amplitude");
  const double s = 1.0 / std::sqrt(norm);
  for (auto& a : amp) a *= s;
  return amp;
}

std::vector<double> exact_distribution(const QueryModel& model) {
  const auto amp = dense_amplitudes(model);
  std::vector<double> pi(amp.size());
  for (std::size_t x = 0; x < amp.size(); ++x) pi[x] = std::norm(amp[x]);
  return pi;
}

double probability(const QueryModel& model, Bits x) {
  const auto hint = model.norm_hint();
  if (!hint || *hint <= 0.0) {
    throw Error(ErrorKind::needs_normalization, "model carries no normalization");
  }
  return std::norm(model.amplitude(x)) / *hint;
}

Sampler measurement_sampler(const QueryModel& model) {
  const int n = model.num_qubits();
  if (model.uniform_magnitude()) {
    const Bits mask = low_mask(n);
    return [mask](RandomSource& rng) { return rng() & mask; };
  }
  if (n > 24) throw Error(ErrorKind::needs_normalization, "exact sampling needs n <= 24 or uniform magnitudes");
  auto pi = exact_distribution(model);
  std::vector<double> cdf(pi.size());
  double acc = 0.0;
  for (std::size_t x = 0; x < pi.size(); ++x) {
    acc += pi[x];
    cdf[x] = acc;
  }
  return [cdf = std::move(cdf)](RandomSource& rng) {
    const double u = rng.uniform() * cdf.back();
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) --it;
    return static_cast<Bits>(it - cdf.begin());
  };
}

}  // namespace shadowcert
