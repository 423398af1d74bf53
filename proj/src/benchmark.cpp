#include "shadowcert/benchmark.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "shadowcert/error.hpp"
#include "shadowcert/estimators.hpp"
#include "shadowcert/protocol.hpp"
#include "shadowcert/stats.hpp"

namespace shadowcert {

void BenchmarkConfig::validate(int n) const {
  if (m < 1 || m > std::min(n, 8)) throw Error(ErrorKind::invalid_level, "level must lie in [1, min(n, 8)]");
  if (shots < 2) throw Error(ErrorKind::invalid_config, "need at least two shots");
  if (noise.empty() || p_grid.empty()) throw Error(ErrorKind::invalid_config, "empty noise list or p grid");
  for (double p : p_grid) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::invalid_config, "noise strength outside [0, 1]");
  }
  if (n > 14) throw Error(ErrorKind::too_large, "benchmark needs dense states, n <= 14");
}

Json BenchmarkConfig::to_json() const {
  Json kinds = Json::array();
  for (auto k : noise) kinds.push_back(std::string(to_string(k)));
  return {{"m", m},
          {"noise", kinds},
          {"p_grid", p_grid},
          {"shots", shots},
          {"seed", seed},
          {"estimator", estimator == OverlapEstimator::conditional ? "conditional" : "shadow"}};
}

BenchmarkConfig BenchmarkConfig::from_json(const Json& j) {
  BenchmarkConfig c;
  try {
    c.m = j.value("m", c.m);
    if (j.contains("noise")) {
      c.noise.clear();
      for (const auto& k : j.at("noise")) c.noise.push_back(NoiseSpec::parse(k.get<std::string>() + ":0").kind);
    }
    if (j.contains("p_grid")) c.p_grid = j.at("p_grid").get<std::vector<double>>();
    c.shots = j.value("shots", c.shots);
    c.seed = j.value("seed", c.seed);
    const auto est = j.value("estimator", std::string("conditional"));
    if (est == "conditional") {
      c.estimator = OverlapEstimator::conditional;
    } else if (est == "shadow") {
      c.estimator = OverlapEstimator::shadow;
    } else {
      throw Error(ErrorKind::invalid_config, "estimator must be conditional or shadow");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse_error, std::string("benchmark config: ") + e.what());
  }
  return c;
}

std::vector<BenchmarkRow> benchmark_sweep(const QueryModel& target, const BenchmarkConfig& config) {
  const int n = target.num_qubits();
  config.validate(n);
  const DenseState psi = DenseState::from_model(target);
  const auto ideal = exact_distribution(target);
  const RandomSource root(config.seed, 0xBE7C);

  std::vector<BenchmarkRow> rows;
  std::uint64_t point = 0;
  for (NoiseKind kind : config.noise) {
    for (double p : config.p_grid) {
      RandomSource noise_rng = root.split(3 * point);
      const NoisyState rho = apply_noise(psi, NoiseSpec{kind, p}, noise_rng);

      const auto overlap = sharded<Moments>(config.shots, root.split(3 * point + 1),
                                            [&](RandomSource& r, std::uint64_t, Moments& acc) {
        const auto subset = sample_subset(n, config.m, r);
        const auto zm = measure_z_except(rho, subset, r);
        if (config.estimator == OverlapEstimator::conditional) {
          acc.add(conditional_overlap(target, subset, zm.z_full, zm.post));
          return;
        }
        MeasurementRecord rec{subset, zm.z, {}, {}};
        for (const auto& f : shadow_measure(zm.post, r)) {
          rec.bases.push_back(f.basis);
          rec.outcomes.push_back(f.outcome);
        }
        acc.add(record_overlap(target, rec));
      });

      std::vector<Bits> samples(config.shots);
      RandomSource xr = root.split(3 * point + 2);
      for (auto& s : samples) s = rho.sample(xr);

      BenchmarkRow row;
      row.noise_type = std::string(to_string(kind));
      row.p = p;
      row.fidelity = exact_fidelity(rho, psi);
      row.normalized_shadow_overlap = normalized_shadow_overlap(overlap.mean(), config.m, n);
      row.shadow_se = normalized_shadow_overlap_se(overlap.std_error(), config.m, n);
      try {
        const auto x = xeb(samples, ideal);
        row.xeb = x.value;
        row.xeb_se = x.std_error;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::degenerate_denominator) throw;
        row.xeb = row.xeb_se = std::numeric_limits<double>::quiet_NaN();
      }
      row.n = n;
      row.m = config.m;
      row.shots = config.shots;
      row.seed = config.seed;
      rows.push_back(row);
      ++point;
    }
  }
  return rows;
}

void write_benchmark_csv(std::ostream& out, const std::vector<BenchmarkRow>& rows) {
  out << kBenchmarkHeader << '\n';
  out.precision(17);
  for (const auto& r : rows) {
    out << r.noise_type << ',' << r.p << ',' << r.fidelity << ',' << r.normalized_shadow_overlap << ',' << r.shadow_se
        << ',' << r.xeb << ',' << r.xeb_se << ',' << r.n << ',' << r.m << ',' << r.shots << ',' << r.seed << '\n';
  }
}

}  // namespace shadowcert
