#include "shadowcert/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "shadowcert/error.hpp"
#include "shadowcert/parallel.hpp"
#include "shadowcert/stats.hpp"

namespace shadowcert {

double exact_fidelity(const NoisyState& rho, const DenseState& psi) {
  if (rho.n() != psi.n()) throw Error(ErrorKind::invalid_argument, "qubit counts differ");
  if (psi.n() > 14) throw Error(ErrorKind::too_large, "exact fidelity needs n <= 14");
  const double p = rho.white_p();
  return (1.0 - p) * std::norm(psi.inner(rho.base())) + p / static_cast<double>(psi.dim());
}

double exact_fidelity(const NoisyState& rho, const QueryModel& model) {
  return exact_fidelity(rho, DenseState::from_model(model));
}

double phase_fidelity(const PhaseFunction& truth, const PhaseFunction& pred, int n, std::uint64_t samples,
                      RandomSource& rng) {
  if (samples == 0) throw Error(ErrorKind::invalid_argument, "need at least one test string");
  const Bits mask = low_mask(n);
  Amplitude acc = 0.0;
  for (std::uint64_t t = 0; t < samples; ++t) {
    const Bits x = rng() & mask;
    acc += std::polar(1.0, pred(x) - truth(x));
  }
  return std::norm(acc / static_cast<double>(samples));
}

XebResult xeb(std::span<const Bits> samples, std::span<const double> ideal) {
  if (samples.empty()) throw Error(ErrorKind::invalid_argument, "no samples");
  const double d = static_cast<double>(ideal.size());
  XebResult r;
  for (double p : ideal) r.normalization += p * p;
  const double denom = r.normalization - 1.0 / d;
  if (!(denom > 1e-12 / d)) {
    throw Error(ErrorKind::degenerate_denominator, "ideal distribution is uniform; normalized XEB undefined");
  }
  Moments m;
  for (Bits x : samples) {
    if (x >= ideal.size()) throw Error(ErrorKind::invalid_argument, "sample outside the ideal distribution");
    m.add(ideal[x]);
  }
  r.raw = m.mean();
  r.value = (r.raw - 1.0 / d) / denom;
  r.std_error = m.std_error() / denom;
  return r;
}

double normalized_shadow_overlap(double omega, int m, int n) {
  const double k = std::ldexp(1.0, m);
  const double d = std::ldexp(1.0, n);
  return k / (k - 1.0) * ((d - 1.0) / d) * (omega - 1.0 / k) + 1.0 / d;
}

double normalized_shadow_overlap_se(double omega_se, int m, int n) {
  const double k = std::ldexp(1.0, m);
  const double d = std::ldexp(1.0, n);
  return k / (k - 1.0) * ((d - 1.0) / d) * omega_se;
}

// ---- sparse observables

PauliTerm PauliTerm::parse(Amplitude coeff, std::string_view label) {
  PauliTerm t{coeff, 0, 0};
  for (std::size_t i = 0; i < label.size(); ++i) {
    const Bits b = Bits{1} << i;
    switch (label[i]) {
      case 'I': break;
      case 'X': t.x_mask |= b; break;
      case 'Y': t.x_mask |= b; t.z_mask |= b; break;
      case 'Z': t.z_mask |= b; break;
      default: throw Error(ErrorKind::parse_error, "Pauli label must use I, X, Y, Z");
    }
  }
  return t;
}

PauliSum::PauliSum(int n, std::vector<PauliTerm> terms) : n_(n), terms_(std::move(terms)) {
  if (n < 1 || n > kMaxQubits) throw Error(ErrorKind::invalid_argument, "qubit count out of range");
  for (const auto& t : terms_) {
    if ((t.x_mask | t.z_mask) & ~low_mask(n)) throw Error(ErrorKind::invalid_argument, "Pauli term exceeds n");
  }
}

void PauliSum::row(Bits x, std::vector<SparseEntry>& out) const {
  out.clear();
  static constexpr Amplitude kIPow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  for (const auto& t : terms_) {
    // P|y> = i^{#Y} (-1)^{|y & z|} |y ^ x_mask>, so row x pairs with y = x ^ x_mask.
    const Bits y = x ^ t.x_mask;
    const int ys = popcount(t.x_mask & t.z_mask);
    Amplitude v = t.coeff * kIPow[ys % 4];
    if (popcount(y & t.z_mask) & 1) v = -v;
    auto it = std::find_if(out.begin(), out.end(), [&](const SparseEntry& e) { return e.y == y; });
    if (it == out.end()) {
      out.push_back({y, v});
    } else {
      it->value += v;
    }
  }
}

bool PauliSum::hermitian() const {
  for (const auto& t : terms_) {
    if (std::abs(t.coeff.imag()) > 1e-12 * (1.0 + std::abs(t.coeff))) return false;
  }
  return true;
}

Json PauliSum::to_json() const {
  Json terms = Json::array();
  for (const auto& t : terms_) {
    std::string label(n_, 'I');
    for (int i = 0; i < n_; ++i) {
      const bool xb = bit_of(t.x_mask, i), zb = bit_of(t.z_mask, i);
      label[i] = xb && zb ? 'Y' : xb ? 'X' : zb ? 'Z' : 'I';
    }
    terms.push_back({{"coeff", {t.coeff.real(), t.coeff.imag()}}, {"pauli", label}});
  }
  return {{"n", n_}, {"terms", terms}};
}

PauliSum PauliSum::from_json(const Json& j) {
  try {
    const int n = j.at("n").get<int>();
    std::vector<PauliTerm> terms;
    for (const auto& t : j.at("terms")) {
      const auto& c = t.at("coeff");
      const Amplitude coeff = c.is_array() ? Amplitude(c.at(0).get<double>(), c.at(1).get<double>())
                                           : Amplitude(c.get<double>(), 0.0);
      const auto label = t.at("pauli").get<std::string>();
      if (static_cast<int>(label.size()) != n) throw Error(ErrorKind::parse_error, "Pauli label length differs from n");
      terms.push_back(PauliTerm::parse(coeff, label));
    }
    return PauliSum(n, std::move(terms));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse_error, std::string("observable: ") + e.what());
  }
}

PauliSum PauliSum::random_local(int n, int k, int count, RandomSource& rng) {
  std::vector<PauliTerm> terms;
  for (int c = 0; c < count; ++c) {
    PauliTerm t{Amplitude(rng.normal(), 0.0), 0, 0};
    const int weight = 1 + static_cast<int>(rng.below(std::min(k, n)));
    const auto support = sample_subset_exact(n, weight, rng);
    for (int q : support.indices()) {
      const auto which = rng.below(3);
      const Bits b = Bits{1} << q;
      if (which != 2) t.x_mask |= b;
      if (which != 0) t.z_mask |= b;
    }
    terms.push_back(t);
  }
  return PauliSum(n, std::move(terms));
}

// ---- median of means

MoMConfig MoMConfig::from_bound(double epsilon, double delta, double second_moment) {
  MoMConfig c;
  c.epsilon = epsilon;
  c.delta = delta;
  c.batch_size = static_cast<std::uint64_t>(std::max(1.0, std::ceil(34.0 * second_moment / (epsilon * epsilon))));
  c.batches = static_cast<std::uint64_t>(std::ceil(2.0 * std::log(2.0 / delta)));
  c.validate();
  return c;
}

void MoMConfig::validate() const {
  if (!(epsilon > 0.0)) throw Error(ErrorKind::invalid_config, "epsilon must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorKind::invalid_config, "delta must lie in (0, 1)");
  if (batch_size == 0 || batches == 0) throw Error(ErrorKind::invalid_config, "batch size and count must be >= 1");
}

namespace {

double median(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  if (v.size() % 2) return v[mid];
  const double hi = v[mid];
  return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + mid));
}

struct ComplexMoments {
  Amplitude sum = 0.0;
  double sum_abs2 = 0.0;
  std::uint64_t count = 0;
  std::uint64_t resampled = 0;

  void add(Amplitude v) {
    sum += v;
    sum_abs2 += std::norm(v);
    ++count;
  }
  void merge(const ComplexMoments& o) {
    sum += o.sum;
    sum_abs2 += o.sum_abs2;
    count += o.count;
    resampled += o.resampled;
  }
};

MoMEstimate finish(const std::vector<ComplexMoments>& batches) {
  MoMEstimate est;
  ComplexMoments all;
  std::vector<double> re, im;
  for (const auto& b : batches) {
    all.merge(b);
    const Amplitude mean = b.sum / static_cast<double>(b.count);
    est.batch_means.push_back(mean);
    re.push_back(mean.real());
    im.push_back(mean.imag());
  }
  est.value = Amplitude(median(re), median(im));
  est.samples = all.count;
  est.resampled = all.resampled;
  const double c = static_cast<double>(all.count);
  est.mean = all.sum / c;
  if (all.count > 1) est.variance = std::max(0.0, (all.sum_abs2 - c * std::norm(est.mean)) / (c - 1.0));
  return est;
}

constexpr int kMaxResample = 1000;

Bits draw_nonzero(const QueryModel& model, const Sampler& sampler, RandomSource& rng, Amplitude& amp,
                  std::uint64_t& resampled) {
  for (int tries = 0; tries < kMaxResample; ++tries) {
    const Bits x = sampler(rng);
    amp = model.amplitude(x);
    if (amp != Amplitude(0.0)) return x;
    ++resampled;
  }
  throw Error(ErrorKind::empty_support, "sampler keeps returning zero-amplitude strings");
}

}  // namespace

MoMEstimate median_of_means(std::span<const Amplitude> values, std::uint64_t batches) {
  if (batches == 0 || values.size() < batches) throw Error(ErrorKind::invalid_config, "need at least one value per batch");
  const std::size_t b = values.size() / batches;
  std::vector<ComplexMoments> parts(batches);
  for (std::uint64_t k = 0; k < batches; ++k) {
    for (std::size_t i = 0; i < b; ++i) parts[k].add(values[k * b + i]);
  }
  return finish(parts);
}

double median_of_means(std::span<const double> values, std::uint64_t batches) {
  std::vector<Amplitude> c(values.begin(), values.end());
  return median_of_means(std::span<const Amplitude>(c), batches).value.real();
}

MoMEstimate sparse_expectation(const QueryModel& model, const Sampler& sampler, const SparseObservable& op,
                               const MoMConfig& config, RandomSource& rng) {
  config.validate();
  if (op.num_qubits() != model.num_qubits()) throw Error(ErrorKind::invalid_argument, "qubit counts differ");
  const RandomSource base = derive(rng);
  std::vector<ComplexMoments> parts(config.batches);
  parallel_shards(config.batches, [&](std::size_t k) {
    RandomSource r = base.split(k);
    std::vector<SparseEntry> row;
    for (std::uint64_t i = 0; i < config.batch_size; ++i) {
      Amplitude ax;
      const Bits x = draw_nonzero(model, sampler, r, ax, parts[k].resampled);
      op.row(x, row);
      Amplitude v = 0.0;
      for (const auto& e : row) v += e.value * model.amplitude(e.y);
      parts[k].add(v / ax);
    }
  });
  return finish(parts);
}

PurityEstimate purity(const QueryModel& model, const Sampler& sampler, Bits subsystem, std::uint64_t pairs,
                      std::uint64_t batches, RandomSource& rng) {
  if (pairs == 0 || batches == 0 || batches > pairs) throw Error(ErrorKind::invalid_config, "need 1 <= batches <= pairs");
  const Bits a_mask = subsystem & low_mask(model.num_qubits());
  const RandomSource base = derive(rng);
  const std::uint64_t per = pairs / batches;
  std::vector<ComplexMoments> parts(batches);
  parallel_shards(batches, [&](std::size_t k) {
    RandomSource r = base.split(k);
    for (std::uint64_t i = 0; i < per; ++i) {
      Amplitude ax, axp;
      const Bits x = draw_nonzero(model, sampler, r, ax, parts[k].resampled);
      const Bits xp = draw_nonzero(model, sampler, r, axp, parts[k].resampled);
      const Bits swap1 = (xp & a_mask) | (x & ~a_mask);
      const Bits swap2 = (x & a_mask) | (xp & ~a_mask);
      const Amplitude v = model.amplitude(swap1) * model.amplitude(swap2) / (ax * axp);
      parts[k].add(v.real());
    }
  });
  const auto est = finish(parts);
  PurityEstimate out;
  out.pairs = est.samples;
  out.resampled = est.resampled;
  out.mean = est.mean.real();
  out.std_error = std::sqrt(est.variance / static_cast<double>(est.samples));
  out.mom = est.value.real();
  out.reported = std::clamp(out.mean, 0.0, 1.0 + 3.0 * out.std_error);
  return out;
}

}  // namespace shadowcert
