#include "shadowcert/protocol.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include "shadowcert/error.hpp"
#include "shadowcert/stats.hpp"

namespace shadowcert {

namespace {

EstimateReport report_from(const Moments& m) {
  EstimateReport rep;
  rep.count = m.count;
  rep.mean = m.mean();
  rep.variance = m.variance();
  return rep;
}

QubitSubset draw_subset(int n, int m, SubsetMode mode, RandomSource& rng) {
  return mode == SubsetMode::up_to ? sample_subset(n, m, rng) : sample_subset_exact(n, m, rng);
}

void check_level(int n, int m) {
  if (m < 1 || m > n) throw Error(ErrorKind::invalid_level, "level must lie in [1, n]");
  if (m > 8) throw Error(ErrorKind::invalid_level, "levels above 8 are not supported");
}

}  // namespace

// ---- records

Json MeasurementRecord::to_json() const {
  Json bs = Json::array();
  Json os = Json::array();
  for (auto b : bases) bs.push_back(std::string(to_string(b)));
  for (auto o : outcomes) os.push_back(std::string(to_string(o)));
  std::string zs(static_cast<std::size_t>(n() - r()), '0');
  for (std::size_t i = 0; i < zs.size(); ++i) {
    if (bit_of(z, static_cast<int>(i))) zs[i] = '1';
  }
  return {{"subset", subset.indices()}, {"z", zs}, {"bases", bs}, {"outcomes", os}};
}

MeasurementRecord MeasurementRecord::from_json(const Json& j) {
  try {
    MeasurementRecord rec;
    const auto idx = j.at("subset").get<std::vector<int>>();
    const auto zs = j.at("z").get<std::string>();
    const int n = static_cast<int>(idx.size() + zs.size());
    rec.subset = QubitSubset(idx, n);
    for (std::size_t i = 0; i < zs.size(); ++i) {
      if (zs[i] == '1') rec.z |= Bits{1} << i;
      else if (zs[i] != '0') throw Error(ErrorKind::parse_error, "z must be a bit string");
    }
    for (const auto& b : j.at("bases")) rec.bases.push_back(parse_basis(b.get<std::string>()));
    for (const auto& o : j.at("outcomes")) rec.outcomes.push_back(parse_eigenstate(o.get<std::string>()));
    if (static_cast<int>(rec.bases.size()) != rec.r() || static_cast<int>(rec.outcomes.size()) != rec.r()) {
      throw Error(ErrorKind::record_mismatch, "bases/outcomes length differs from the subset size");
    }
    for (int q = 0; q < rec.r(); ++q) {
      if (basis_of(rec.outcomes[q]) != rec.bases[q]) {
        throw Error(ErrorKind::record_mismatch, "outcome is not an eigenstate of its basis");
      }
    }
    return rec;
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::parse_error, std::string("measurement record: ") + e.what());
  }
}

void write_records(std::ostream& out, const std::vector<MeasurementRecord>& records) {
  for (const auto& r : records) out << r.to_json().dump() << '\n';
}

std::vector<MeasurementRecord> read_records(std::istream& in) {
  std::vector<MeasurementRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::exception& e) {
      throw Error(ErrorKind::parse_error, "line " + std::to_string(lineno) + ": " + e.what());
    }
    out.push_back(MeasurementRecord::from_json(j));
    if (out.back().n() != out.front().n()) {
      throw Error(ErrorKind::record_mismatch, "line " + std::to_string(lineno) + ": qubit count changes");
    }
  }
  return out;
}

// ---- collection

MeasurementRecord simulate_record(const NoisyState& state, int m, SubsetMode mode, RandomSource& rng) {
  MeasurementRecord rec;
  rec.subset = draw_subset(state.n(), m, mode, rng);
  auto meas = measure_z_except(state, rec.subset, rng);
  rec.z = meas.z;
  auto factors = shadow_measure(std::move(meas.post), rng);
  rec.bases.reserve(factors.size());
  rec.outcomes.reserve(factors.size());
  for (const auto& f : factors) {
    rec.bases.push_back(f.basis);
    rec.outcomes.push_back(f.outcome);
  }
  return rec;
}

std::vector<MeasurementRecord> collect_records(const NoisyState& state, int m, std::uint64_t shots, RandomSource& rng,
                                               SubsetMode mode) {
  check_level(state.n(), m);
  if (shots < 1) throw Error(ErrorKind::invalid_argument, "shot count must be >= 1");
  std::vector<MeasurementRecord> out(shots);
  const RandomSource base = derive(rng);
  sharded<Moments>(shots, base, [&](RandomSource& r, std::uint64_t i, Moments&) { out[i] = simulate_record(state, m, mode, r); });
  return out;
}

// ---- query phase

std::vector<Amplitude> local_amplitudes(const QueryModel& model, const QubitSubset& subset, Bits z_full) {
  const std::size_t dim = std::size_t{1} << subset.size();
  std::vector<Amplitude> amp(dim);
  for (Bits l = 0; l < dim; ++l) amp[l] = model.amplitude(z_full | subset.scatter(l));
  return amp;
}

Eigen::MatrixXcd local_observable(const QueryModel& model, const QubitSubset& subset, Bits z_full) {
  const int r = subset.size();
  const Eigen::Index dim = Eigen::Index{1} << r;
  const auto amp = local_amplitudes(model, subset, z_full);
  Eigen::MatrixXcd op = Eigen::MatrixXcd::Zero(dim, dim);
  const Bits all = low_mask(r);
  for (Bits l = 0; l < static_cast<Bits>(dim); ++l) {
    const Bits lbar = l ^ all;
    if (lbar < l) continue;
    const double norm = std::norm(amp[l]) + std::norm(amp[lbar]);
    if (norm == 0.0) continue;
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(dim);
    v(static_cast<Eigen::Index>(l)) = amp[l];
    v(static_cast<Eigen::Index>(lbar)) = amp[lbar];
    op += v * v.adjoint() / norm;
  }
  return op;
}

double local_overlap(const MeasurementRecord& record, const Eigen::MatrixXcd& local_op) {
  const Eigen::Index dim = Eigen::Index{1} << record.r();
  if (local_op.rows() != dim || local_op.cols() != dim) {
    throw Error(ErrorKind::record_mismatch, "operator dimension does not match the record subset");
  }
  std::vector<ShadowFactor> f;
  for (int q = 0; q < record.r(); ++q) f.push_back({record.bases[q], record.outcomes[q]});
  return (local_op * shadow_matrix(f)).trace().real();
}

double record_overlap(const QueryModel& model, const MeasurementRecord& record) {
  const int r = record.r();
  if (static_cast<int>(record.outcomes.size()) != r) {
    throw Error(ErrorKind::record_mismatch, "outcome count differs from the subset size");
  }
  if (model.num_qubits() != record.n()) throw Error(ErrorKind::record_mismatch, "record and model qubit counts differ");
  std::array<std::array<Amplitude, 4>, 8> f;
  for (int q = 0; q < r; ++q) f[q] = shadow_factor_matrix(record.outcomes[q]);
  auto entry = [&](Bits a, Bits b) {
    Amplitude v = 1.0;
    for (int q = 0; q < r; ++q) v *= f[q][2 * ((a >> q) & 1) + ((b >> q) & 1)];
    return v;
  };
  const Bits z_full = record.z_full();
  const Bits all = low_mask(r);
  double omega = 0.0;
  // Pairs {l, lbar} with the top bit of l clear enumerate each pair once.
  for (Bits l = 0; l < (Bits{1} << (r - 1)); ++l) {
    const Bits lbar = l ^ all;
    const Amplitude a = model.amplitude(z_full | record.subset.scatter(l));
    const Amplitude b = model.amplitude(z_full | record.subset.scatter(lbar));
    const double norm = std::norm(a) + std::norm(b);
    if (norm == 0.0) continue;
    const double diag = std::norm(a) * entry(l, l).real() + std::norm(b) * entry(lbar, lbar).real();
    const double cross = 2.0 * (std::conj(a) * b * entry(l, lbar)).real();
    omega += (diag + cross) / norm;
  }
  return omega;
}

double conditional_overlap(const QueryModel& model, const QubitSubset& subset, Bits z_full,
                           const std::vector<Amplitude>& post) {
  const int r = subset.size();
  if (post.size() != (std::size_t{1} << r)) throw Error(ErrorKind::record_mismatch, "post-state size mismatch");
  const Bits all = low_mask(r);
  double out = 0.0;
  for (Bits l = 0; l < (Bits{1} << (r - 1)); ++l) {
    const Bits lbar = l ^ all;
    const Amplitude a = model.amplitude(z_full | subset.scatter(l));
    const Amplitude b = model.amplitude(z_full | subset.scatter(lbar));
    const double norm = std::norm(a) + std::norm(b);
    if (norm == 0.0) continue;
    out += std::norm(std::conj(a) * post[l] + std::conj(b) * post[lbar]) / norm;
  }
  return out;
}

// ---- reports

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::certified: return "Certified";
    case Verdict::failed: return "Failed";
    case Verdict::none: return "n/a";
  }
  return "?";
}

double EstimateReport::std_error() const {
  return count > 0 ? std::sqrt(variance / static_cast<double>(count)) : 0.0;
}

Json EstimateReport::to_json() const {
  return {{"mean", mean},
          {"variance", variance},
          {"std_error", std_error()},
          {"count", count},
          {"verdict", std::string(to_string(verdict))},
          {"threshold", threshold},
          {"fidelity_lower_bound", fidelity_lower_bound},
          {"tau", tau},
          {"epsilon", epsilon},
          {"delta", delta},
          {"level", level}};
}

void CertificationConfig::validate() const {
  if (level < 1) throw Error(ErrorKind::invalid_config, "level must be >= 1");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw Error(ErrorKind::invalid_config, "epsilon must lie in (0, 1)");
  if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorKind::invalid_config, "delta must lie in (0, 1)");
  if (!(tau >= 1.0)) throw Error(ErrorKind::invalid_config, "relaxation time tau must be >= 1");
  if (shots && *shots < 1) throw Error(ErrorKind::invalid_config, "shots must be >= 1");
}

std::uint64_t default_shots(int level, double epsilon, double delta, double tau) {
  const double t = std::ldexp(1.0, 2 * level + 4) * tau * tau / (epsilon * epsilon) * std::log(2.0 / delta);
  return static_cast<std::uint64_t>(std::ceil(t));
}

std::uint64_t default_shots_direct(double epsilon, double delta, double tau) {
  return static_cast<std::uint64_t>(std::ceil(32.0 * tau / epsilon * std::log(1.0 / delta)));
}

namespace {

void finish(EstimateReport& rep, const CertificationConfig& cfg) {
  rep.tau = cfg.tau;
  rep.epsilon = cfg.epsilon;
  rep.delta = cfg.delta;
  rep.level = cfg.level;
  rep.threshold = cfg.threshold();
  rep.verdict = rep.mean >= rep.threshold ? Verdict::certified : Verdict::failed;
  rep.fidelity_lower_bound = 1.0 - cfg.tau * (1.0 - rep.mean);
}

}  // namespace

EstimateReport estimate_overlap(const std::vector<MeasurementRecord>& records, const QueryModel& model) {
  const RandomSource unused(0);
  const auto m = sharded<Moments>(records.size(), unused, [&](RandomSource&, std::uint64_t i, Moments& acc) {
    acc.add(record_overlap(model, records[i]));
  });
  return report_from(m);
}

EstimateReport certify(const NoisyState& state, const QueryModel& model, const CertificationConfig& config,
                       RandomSource& rng) {
  config.validate();
  check_level(state.n(), config.level);
  if (model.num_qubits() != state.n()) throw Error(ErrorKind::invalid_argument, "model and state qubit counts differ");
  const auto shots = config.shots.value_or(default_shots(config.level, config.epsilon, config.delta, config.tau));
  const RandomSource base = derive(rng);
  const auto m = sharded<Moments>(shots, base, [&](RandomSource& r, std::uint64_t, Moments& acc) {
    acc.add(record_overlap(model, simulate_record(state, config.level, config.mode, r)));
  });
  auto rep = report_from(m);
  finish(rep, config);
  return rep;
}

EstimateReport certify_direct(const NoisyState& state, const QueryModel* model, const CertificationConfig& config,
                              RandomSource& rng) {
  config.validate();
  if (config.level != 1) throw Error(ErrorKind::invalid_level, "the direct-basis variant is level 1 only");
  if (model == nullptr) throw Error(ErrorKind::interactive_required, "direct-basis measurement needs the model mid-shot");
  if (model->num_qubits() != state.n()) throw Error(ErrorKind::invalid_argument, "model and state qubit counts differ");
  const auto shots = config.shots.value_or(default_shots_direct(config.epsilon, config.delta, config.tau));
  const RandomSource base = derive(rng);
  const int n = state.n();
  const auto m = sharded<Moments>(shots, base, [&](RandomSource& r, std::uint64_t, Moments& acc) {
    const auto subset = sample_subset(n, 1, r);
    const auto meas = measure_z_except(state, subset, r);
    const auto amp = local_amplitudes(*model, subset, meas.z_full);
    const double norm = std::norm(amp[0]) + std::norm(amp[1]);
    double overlap = 0.0;
    if (norm > 0.0) overlap = std::norm(std::conj(amp[0]) * meas.post[0] + std::conj(amp[1]) * meas.post[1]) / norm;
    acc.add(r.bernoulli(overlap) ? 1.0 : 0.0);
  });
  auto rep = report_from(m);
  finish(rep, config);
  return rep;
}

Selection hypothesis_select(const std::vector<MeasurementRecord>& records, const std::vector<ModelPtr>& models,
                            double tau, double epsilon) {
  if (models.empty()) throw Error(ErrorKind::empty_model_list, "no candidate models");
  if (records.empty()) throw Error(ErrorKind::invalid_argument, "no measurement records");
  Selection sel;
  std::vector<EstimateReport> reps;
  for (const auto& m : models) {
    reps.push_back(estimate_overlap(records, *m));
    sel.means.push_back(reps.back().mean);
  }
  for (std::size_t i = 1; i < reps.size(); ++i) {
    if (reps[i].mean > reps[sel.best].mean) sel.best = i;
  }
  sel.report = reps[sel.best];
  sel.report.tau = tau;
  sel.report.epsilon = epsilon;
  sel.report.fidelity_lower_bound = 1.0 - tau * (1.0 - sel.report.mean + epsilon);
  return sel;
}

double enumerate_expected_overlap(const NoisyState& state, const QueryModel& model, int m, SubsetMode mode) {
  const int n = state.n();
  check_level(n, m);
  if (n > 12) throw Error(ErrorKind::too_large, "exhaustive enumeration needs n <= 12");
  double pure_total = 0.0;
  double mixed_total = 0.0;
  std::uint64_t subsets = 0;
  const int r_lo = mode == SubsetMode::up_to ? 1 : m;
  for (int r = r_lo; r <= m; ++r) {
    std::uint64_t basis_tuples = 1;
    for (int q = 0; q < r; ++q) basis_tuples *= 3;
    for_each_mask_of_weight(n, r, [&](Bits mask) {
      ++subsets;
      MeasurementRecord rec;
      rec.subset = QubitSubset::from_mask(mask, n);
      rec.bases.resize(static_cast<std::size_t>(r));
      rec.outcomes.resize(static_cast<std::size_t>(r));
      for (Bits z = 0; z < (Bits{1} << (n - r)); ++z) {
        rec.z = z;
        const Bits z_full = rec.z_full();
        std::vector<Amplitude> post(std::size_t{1} << r);
        double weight = 0.0;
        for (Bits l = 0; l < post.size(); ++l) {
          post[l] = state.base()[z_full | rec.subset.scatter(l)];
          weight += std::norm(post[l]);
        }
        // Average over uniformly random bases and Born-weighted outcomes.
        auto shadow_average = [&](const std::vector<Amplitude>& v) {
          double acc = 0.0;
          for (std::uint64_t bt = 0; bt < basis_tuples; ++bt) {
            std::uint64_t code = bt;
            for (int q = 0; q < r; ++q) {
              rec.bases[q] = static_cast<Basis>(code % 3);
              code /= 3;
            }
            for (Bits o = 0; o < (Bits{1} << r); ++o) {
              for (int q = 0; q < r; ++q) rec.outcomes[q] = eigenstate(rec.bases[q], bit_of(o, q));
              const double p = branch_probability(v, rec.outcomes);
              if (p > 0.0) acc += p * record_overlap(model, rec);
            }
          }
          return acc / static_cast<double>(basis_tuples);
        };
        if (weight > 0.0) pure_total += weight * shadow_average(post);
        if (state.white_p() > 0.0) {
          // Maximally mixed branch: z uniform, kept qubits uniformly in a computational state.
          const double zw = std::ldexp(1.0, r - n);
          for (Bits l = 0; l < post.size(); ++l) {
            std::vector<Amplitude> e(post.size(), 0.0);
            e[l] = 1.0;
            mixed_total += zw * std::ldexp(1.0, -r) * shadow_average(e);
          }
        }
      }
    });
  }
  const double p = state.white_p();
  return ((1.0 - p) * pure_total + p * mixed_total) / static_cast<double>(subsets);
}

}  // namespace shadowcert
