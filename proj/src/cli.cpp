#include "shadowcert/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "shadowcert/benchmark.hpp"
#include "shadowcert/chain.hpp"
#include "shadowcert/circuit.hpp"
#include "shadowcert/congestion.hpp"
#include "shadowcert/error.hpp"
#include "shadowcert/escape.hpp"
#include "shadowcert/estimators.hpp"
#include "shadowcert/io.hpp"
#include "shadowcert/nqs.hpp"
#include "shadowcert/parallel.hpp"
#include "shadowcert/protocol.hpp"
#include "shadowcert/state.hpp"

namespace shadowcert {

namespace {

namespace fs = std::filesystem;

// Nested JSON objects map to subcommands: {"threads": 4, "certify": {"n": 8}}.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    Json j;
    try {
      j = Json::parse(in);
    } catch (const Json::exception& e) {
      throw CLI::ConversionError(std::string("config file is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
    std::vector<CLI::ConfigItem> items;
    collect(j, {}, items);
    return items;
  }

 private:
  static std::string scalar(const Json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number()) return v.dump();
    throw CLI::ConversionError("unsupported config value " + v.dump());
  }

  static void collect(const Json& j, const std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& items) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it->is_object()) {
        auto p = parents;
        p.push_back(it.key());
        collect(*it, p, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = it.key();
      if (it->is_array()) {
        for (const auto& v : *it) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(*it));
      }
      items.push_back(std::move(item));
    }
  }
};

struct Globals {
  std::string out_dir;
  unsigned threads = 0;
};

struct ModelOptions {
  std::string family = "phase";
  int n = 4;
  std::uint64_t model_seed = 0;
  std::string phases = "binary";
  std::string model_file;

  void add(CLI::App* sub) {
    sub->add_option("--family", family, "phase | rotated-phase | ghz-x | ghz-z | haar | clifford-t")
        ->check(CLI::IsMember({"phase", "rotated-phase", "ghz-x", "ghz-z", "haar", "clifford-t"}))
        ->capture_default_str();
    sub->add_option("--n", n, "qubits")->check(CLI::Range(1, kMaxQubits))->capture_default_str();
    sub->add_option("--model-seed", model_seed, "seed of the model instance")->capture_default_str();
    sub->add_option("--phases", phases, "phase source of the phase family")
        ->check(CLI::IsMember({"binary", "continuous", "correlated", "constant"}))
        ->capture_default_str();
    sub->add_option("--model", model_file, "JSON model descriptor (overrides --family)")->check(CLI::ExistingFile);
  }

  Json descriptor() const {
    if (!model_file.empty()) {
      std::ifstream in(model_file);
      try {
        return Json::parse(in);
      } catch (const Json::exception& e) {
        throw Error(ErrorKind::parse_error, "model file: " + std::string(e.what()));
      }
    }
    if (family == "clifford-t") {
      RandomSource rng(model_seed, 0x10);
      return CliffordTPhaseModel::random(n, true, rng).descriptor();
    }
    Json d{{"family", family}, {"n", n}, {"seed", model_seed}};
    if (family == "phase") d["phases"] = phases;
    return d;
  }
};

struct Output {
  fs::path dir;
  std::vector<std::string> written;

  void write(const std::string& name, std::string_view content) {
    write_atomic(dir / name, content);
    written.push_back(name);
  }
  void json(const std::string& name, const Json& config, Json result) {
    write(name, wrap_result(config, std::move(result)).dump(2) + "\n");
  }
  template <class Fn>
  void csv(const std::string& name, const Json& config, Fn&& body) {
    std::ostringstream s;
    s << csv_preamble(config);
    body(s);
    write(name, s.str());
  }
};

double resolve_tau(const QueryModel& model, const Json& desc, int m, double given) {
  if (given > 0.0) return given;
  if (desc.value("family", "") == "phase" && m == 1) return static_cast<double>(model.num_qubits());
  if (model.num_qubits() > 12) throw Error(ErrorKind::invalid_config, "--tau is required above 12 qubits");
  const auto rep = spectral_report(build_walk(model, m));
  if (rep.degenerate) throw Error(ErrorKind::empty_support, "walk is disconnected; relaxation time is infinite");
  return rep.tau;
}

std::vector<double> parse_grid(const std::string& text, std::string& kind) {
  // kind:lo..hi:count
  const auto c1 = text.find(':');
  const auto c2 = text.rfind(':');
  const auto dots = text.find("..");
  if (c1 == std::string::npos || c2 == c1 || dots == std::string::npos || dots < c1 || dots > c2)
    throw Error(ErrorKind::invalid_config, "noise sweep must look like white:0..1:11, got '" + text + "'");
  kind = text.substr(0, c1);
  double lo = 0, hi = 0;
  int count = 0;
  try {
    lo = std::stod(text.substr(c1 + 1, dots - c1 - 1));
    hi = std::stod(text.substr(dots + 2, c2 - dots - 2));
    count = std::stoi(text.substr(c2 + 1));
  } catch (const std::exception&) {
    throw Error(ErrorKind::invalid_config, "cannot parse noise sweep '" + text + "'");
  }
  if (count < 1 || (count == 1 && lo != hi)) throw Error(ErrorKind::invalid_config, "sweep needs at least two points");
  std::vector<double> grid;
  for (int k = 0; k < count; ++k) grid.push_back(count == 1 ? lo : lo + (hi - lo) * k / (count - 1));
  return grid;
}

NoiseKind noise_kind(const std::string& kind) { return NoiseSpec::parse(kind + ":0").kind; }

bool is_config_error(ErrorKind k) {
  switch (k) {
    case ErrorKind::invalid_config:
    case ErrorKind::invalid_argument:
    case ErrorKind::invalid_level:
    case ErrorKind::invalid_distance:
    case ErrorKind::too_large:
    case ErrorKind::parse_error:
    case ErrorKind::record_mismatch:
      return true;
    default:
      return false;
  }
}

std::string iso_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Shadow-overlap certification toolkit", "shadowcert"};
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON file with option values; nested objects address subcommands");
  app.require_subcommand(1);

  Globals g;
  app.add_option("--out", g.out_dir, "output directory (default $SHADOWCERT_OUT_DIR or .)");
  app.add_option("--threads", g.threads, "worker cap, 0 = all cores")->capture_default_str();

  std::uint64_t seed = 0;
  std::function<Json(Output&)> job;

  // certify
  auto* certify_cmd = app.add_subcommand("certify", "run the certification test on a simulated lab state");
  ModelOptions cm;
  int c_level = 1;
  double c_eps = 0.1, c_delta = 0.05, c_tau = 0.0;
  std::uint64_t c_shots = 0;
  std::string c_mode = "up_to", c_noise = "none";
  bool c_direct = false;
  cm.add(certify_cmd);
  certify_cmd->add_option("--m", c_level, "level")->check(CLI::Range(1, 8))->capture_default_str();
  certify_cmd->add_option("--eps", c_eps)->capture_default_str();
  certify_cmd->add_option("--delta", c_delta)->capture_default_str();
  certify_cmd->add_option("--tau", c_tau, "relaxation time (default: exact for phase states, else computed)");
  certify_cmd->add_option("--shots", c_shots, "T (default: sample-complexity bound)");
  certify_cmd->add_option("--mode", c_mode)->check(CLI::IsMember({"up_to", "exact"}))->capture_default_str();
  certify_cmd->add_option("--noise", c_noise, "none | white:p | coherent_haar:p | coherent_phase:p")
      ->capture_default_str();
  certify_cmd->add_flag("--direct", c_direct, "level-1 direct projector measurement");
  certify_cmd->add_option("--seed", seed)->capture_default_str();
  certify_cmd->callback([&] {
    job = [&](Output& o) {
      const Json desc = cm.descriptor();
      const auto model = model_from_json(desc);
      RandomSource rng(seed, 0xCE27);
      CertificationConfig cfg;
      cfg.level = c_level;
      cfg.epsilon = c_eps;
      cfg.delta = c_delta;
      cfg.mode = c_mode == "exact" ? SubsetMode::exact : SubsetMode::up_to;
      cfg.tau = resolve_tau(*model, desc, c_level, c_tau);
      if (c_direct && c_level != 1) throw Error(ErrorKind::invalid_config, "--direct needs --m 1");
      cfg.shots = c_shots > 0 ? c_shots
                  : c_direct  ? default_shots_direct(c_eps, c_delta, cfg.tau)
                              : default_shots(c_level, c_eps, c_delta, cfg.tau);
      cfg.validate();
      const NoiseSpec noise = NoiseSpec::parse(c_noise);
      const Json config{{"command", "certify"}, {"model", desc},      {"m", c_level},
                        {"eps", c_eps},         {"delta", c_delta},   {"tau", cfg.tau},
                        {"shots", *cfg.shots},  {"mode", c_mode},     {"noise", noise.to_string()},
                        {"direct", c_direct},   {"seed", seed},       {"threshold", cfg.threshold()}};
      const NoisyState state = apply_noise(DenseState::from_model(*model), noise, rng);
      const auto rep = c_direct ? certify_direct(state, model.get(), cfg, rng) : certify(state, *model, cfg, rng);
      o.json("certify.json", config, rep.to_json());
      out << "verdict: " << to_string(rep.verdict) << "  omega=" << rep.mean << " +- " << rep.std_error()
          << "  threshold=" << rep.threshold << "  T=" << rep.count << '\n';
      return config;
    };
  });

  // gap
  auto* gap_cmd = app.add_subcommand("gap", "spectral gap and relaxation time of the level-m walk");
  ModelOptions gm;
  int g_level = 1;
  std::string g_walk = "up_to";
  bool g_eigs = false;
  gm.add(gap_cmd);
  gap_cmd->add_option("--m", g_level)->check(CLI::Range(1, 8))->capture_default_str();
  gap_cmd->add_option("--walk", g_walk)->check(CLI::IsMember({"up_to", "exact_jump"}))->capture_default_str();
  gap_cmd->add_flag("--eigenvalues", g_eigs, "include the full spectrum");
  gap_cmd->callback([&] {
    job = [&](Output& o) {
      const Json desc = gm.descriptor();
      const auto model = model_from_json(desc);
      const Json config{{"command", "gap"}, {"model", desc}, {"m", g_level}, {"walk", g_walk}};
      const auto rep =
          spectral_report(build_walk(*model, g_level, g_walk == "exact_jump" ? WalkMode::exact_jump : WalkMode::up_to));
      o.json("gap.json", config, rep.to_json(g_eigs));
      out << "gap=" << rep.gap << "  tau=" << (rep.degenerate ? std::string("inf") : std::to_string(rep.tau))
          << "  support=" << rep.support_size << '\n';
      return config;
    };
  });

  // benchmark
  auto* bench_cmd = app.add_subcommand("benchmark", "fidelity vs shadow overlap vs XEB under a noise sweep");
  ModelOptions bm;
  bm.family = "haar";
  int b_level = 1;
  std::vector<std::string> b_sweeps{"white:0..1:11"};
  std::uint64_t b_shots = 10000;
  std::string b_est = "conditional";
  bm.add(bench_cmd);
  bench_cmd->add_option("--m", b_level)->check(CLI::Range(1, 8))->capture_default_str();
  bench_cmd->add_option("--noise-sweep", b_sweeps, "kind:lo..hi:count, repeatable")->capture_default_str();
  bench_cmd->add_option("--shots", b_shots)->capture_default_str();
  bench_cmd->add_option("--estimator", b_est)->check(CLI::IsMember({"conditional", "shadow"}))->capture_default_str();
  bench_cmd->add_option("--seed", seed)->capture_default_str();
  bench_cmd->callback([&] {
    job = [&](Output& o) {
      const Json desc = bm.descriptor();
      const auto model = model_from_json(desc);
      std::vector<BenchmarkRow> rows;
      Json sweeps = Json::array();
      for (std::size_t k = 0; k < b_sweeps.size(); ++k) {
        BenchmarkConfig cfg;
        std::string kind;
        cfg.p_grid = parse_grid(b_sweeps[k], kind);
        cfg.noise = {noise_kind(kind)};
        cfg.m = b_level;
        cfg.shots = b_shots;
        cfg.seed = seed + k;
        cfg.estimator = b_est == "shadow" ? OverlapEstimator::shadow : OverlapEstimator::conditional;
        cfg.validate(model->num_qubits());
        sweeps.push_back(cfg.to_json());
        auto part = benchmark_sweep(*model, cfg);
        rows.insert(rows.end(), part.begin(), part.end());
      }
      const Json config{{"command", "benchmark"}, {"model", desc}, {"sweeps", sweeps}};
      o.csv("benchmark.csv", config, [&](std::ostream& s) { write_benchmark_csv(s, rows); });
      out << rows.size() << " benchmark rows\n";
      return config;
    };
  });

  // estimate
  auto* est_cmd = app.add_subcommand("estimate", "sparse observable and purity estimates from samples");
  ModelOptions em;
  std::string e_obs;
  int e_terms = 0, e_locality = 2;
  double e_eps = 0.1, e_delta = 0.05, e_second = 0.0;
  std::vector<int> e_subsystem;
  std::uint64_t e_pairs = 30000, e_batches = 10, e_mcmc_steps = 0;
  em.add(est_cmd);
  est_cmd->add_option("--observable", e_obs, "PauliSum JSON file")->check(CLI::ExistingFile);
  est_cmd->add_option("--random-terms", e_terms, "random local Pauli terms instead of a file");
  est_cmd->add_option("--locality", e_locality)->capture_default_str();
  est_cmd->add_option("--eps", e_eps)->capture_default_str();
  est_cmd->add_option("--delta", e_delta)->capture_default_str();
  est_cmd->add_option("--second-moment", e_second, "bound on E|O_loc|^2 (default (sum |c|)^2)");
  est_cmd->add_option("--purity-subsystem", e_subsystem, "qubits of A")->delimiter(',');
  est_cmd->add_option("--pairs", e_pairs)->capture_default_str();
  est_cmd->add_option("--batches", e_batches)->capture_default_str();
  est_cmd->add_option("--mcmc-steps", e_mcmc_steps, "sample by m=1 MCMC instead of exactly (0 = exact)");
  est_cmd->add_option("--seed", seed)->capture_default_str();
  est_cmd->callback([&] {
    job = [&](Output& o) {
      const Json desc = em.descriptor();
      const auto model = model_from_json(desc);
      const int n = model->num_qubits();
      RandomSource rng(seed, 0xE5);
      const Sampler sampler = e_mcmc_steps > 0 ? mcmc_sampler(model, 1, e_mcmc_steps) : measurement_sampler(*model);
      Json config{{"command", "estimate"}, {"model", desc}, {"seed", seed}, {"mcmc_steps", e_mcmc_steps}};
      Json result = Json::object();
      if (!e_obs.empty() || e_terms > 0) {
        std::optional<PauliSum> op;
        if (!e_obs.empty()) {
          std::ifstream in(e_obs);
          try {
            op = PauliSum::from_json(Json::parse(in));
          } catch (const Json::exception& e) {
            throw Error(ErrorKind::parse_error, "observable file: " + std::string(e.what()));
          }
        } else {
          RandomSource orng(seed, 0x0B5);
          op = PauliSum::random_local(n, e_locality, e_terms, orng);
        }
        if (op->num_qubits() != n) throw Error(ErrorKind::invalid_config, "observable and model disagree on n");
        double second = e_second;
        if (second <= 0.0) {
          double s = 0.0;
          for (const auto& t : op->terms()) s += std::abs(t.coeff);
          second = s * s;
        }
        const MoMConfig mom = MoMConfig::from_bound(e_eps, e_delta, second);
        config["observable"] = op->to_json();
        config["mom"] = {{"eps", e_eps}, {"delta", e_delta}, {"second_moment", second},
                         {"batch_size", mom.batch_size}, {"batches", mom.batches}};
        const auto est = sparse_expectation(*model, sampler, *op, mom, rng);
        Json r{{"value", {est.value.real(), est.value.imag()}},
               {"mean", {est.mean.real(), est.mean.imag()}},
               {"variance", est.variance},
               {"samples", est.samples},
               {"resampled", est.resampled}};
        if (n <= 16) {
          const auto amp = dense_amplitudes(*model);
          std::vector<SparseEntry> row;
          Amplitude exact = 0.0;
          for (Bits x = 0; x < amp.size(); ++x) {
            op->row(x, row);
            for (const auto& e : row) exact += std::conj(amp[x]) * e.value * amp[e.y];
          }
          r["exact"] = {exact.real(), exact.imag()};
        }
        result["observable"] = r;
        out << "<O> = " << est.value.real() << (est.value.imag() < 0 ? " - " : " + ") << std::abs(est.value.imag())
            << "i\n";
      }
      if (!e_subsystem.empty()) {
        Bits mask = 0;
        for (int q : e_subsystem) {
          if (q < 0 || q >= n) throw Error(ErrorKind::invalid_config, "purity subsystem qubit out of range");
          mask |= Bits{1} << q;
        }
        config["purity"] = {{"subsystem", e_subsystem}, {"pairs", e_pairs}, {"batches", e_batches}};
        const auto p = purity(*model, sampler, mask, e_pairs, e_batches, rng);
        result["purity"] = {{"mean", p.mean},           {"std_error", p.std_error}, {"median_of_means", p.mom},
                            {"reported", p.reported},   {"pairs", p.pairs},         {"resampled", p.resampled}};
        out << "purity = " << p.reported << " +- " << p.std_error << '\n';
      }
      if (result.empty()) throw Error(ErrorKind::invalid_config, "nothing to estimate: give an observable or a subsystem");
      o.json("estimate.json", config, result);
      return config;
    };
  });

  // optimize-circuit
  auto* opt_cmd = app.add_subcommand("optimize-circuit", "greedy T/CZ circuit search against an IQP-style target");
  int o_n = 20, o_steps = 100, o_min_t = 0;
  std::string o_obj = "shadow", o_target;
  std::uint64_t o_samples = 10000, o_model_seed = 0;
  bool o_no_stop = false;
  opt_cmd->add_option("--n", o_n)->check(CLI::Range(1, kMaxQubits))->capture_default_str();
  opt_cmd->add_option("--objective", o_obj)->check(CLI::IsMember({"shadow", "fidelity"}))->capture_default_str();
  opt_cmd->add_option("--steps", o_steps)->capture_default_str();
  opt_cmd->add_option("--samples", o_samples)->capture_default_str();
  opt_cmd->add_option("--min-t", o_min_t, "resample the random target until it has this many T gates")
      ->capture_default_str();
  opt_cmd->add_option("--target", o_target, "clifford-t JSON descriptor")->check(CLI::ExistingFile);
  opt_cmd->add_option("--model-seed", o_model_seed)->capture_default_str();
  opt_cmd->add_flag("--no-stop", o_no_stop, "keep stepping after the no-op wins");
  opt_cmd->add_option("--seed", seed)->capture_default_str();
  opt_cmd->callback([&] {
    job = [&](Output& o) {
      std::optional<CliffordTPhaseModel> target;
      if (!o_target.empty()) {
        std::ifstream in(o_target);
        Json d;
        try {
          d = Json::parse(in);
        } catch (const Json::exception& e) {
          throw Error(ErrorKind::parse_error, "target file: " + std::string(e.what()));
        }
        const auto m = model_from_json(d);
        const auto* c = dynamic_cast<const CliffordTPhaseModel*>(m.get());
        if (!c) throw Error(ErrorKind::invalid_config, "target must be a clifford-t descriptor");
        target = *c;
      } else {
        RandomSource trng(o_model_seed, 0x1C);
        target = random_iqp_target(o_n, o_min_t, trng);
      }
      GreedyConfig cfg;
      cfg.max_steps = o_steps;
      cfg.objective = parse_objective(o_obj);
      cfg.samples = o_samples;
      cfg.stop_when_converged = !o_no_stop;
      cfg.validate();
      const Json config{{"command", "optimize-circuit"}, {"target", target->descriptor()},
                        {"objective", o_obj},            {"max_steps", o_steps},
                        {"samples", o_samples},          {"stop_when_converged", !o_no_stop},
                        {"seed", seed}};
      RandomSource rng(seed, 0x0C);
      const auto res = greedy_optimize(*target, cfg, rng);
      o.csv("circuit_trace.csv", config, [&](std::ostream& s) { write_trace_csv(s, res.trace); });
      Json seq = Json::array();
      for (const auto& a : res.sequence) seq.push_back(a.label());
      Json r{{"sequence", seq}, {"steps", res.trace.size() - 1}, {"t_gates", target->t_gate_count()}};
      r["exact_fidelity"] = res.exact_fidelity ? Json(*res.exact_fidelity) : Json(nullptr);
      r["exact_shadow"] = res.exact_shadow ? Json(*res.exact_shadow) : Json(nullptr);
      o.json("circuit.json", config, r);
      out << res.sequence.size() << " gates";
      if (res.exact_fidelity) out << "  fidelity=" << *res.exact_fidelity;
      out << '\n';
      return config;
    };
  });

  // train-nqs
  auto* nqs_cmd = app.add_subcommand("train-nqs", "train the dual-input network on simulated shadow data");
  int q_n = 20, q_features = 8, q_hidden = 0;
  std::string q_phases = "binary";
  std::uint64_t q_model_seed = 0, q_examples = 200000, q_tests = 10000, q_pairs = 30000;
  TrainConfig q_train;
  bool q_x_only = false;
  std::vector<int> q_sizes;
  nqs_cmd->add_option("--n", q_n)->check(CLI::Range(1, kMaxQubits))->capture_default_str();
  nqs_cmd->add_option("--phases", q_phases)
      ->check(CLI::IsMember({"binary", "continuous", "correlated", "constant"}))
      ->capture_default_str();
  nqs_cmd->add_option("--model-seed", q_model_seed)->capture_default_str();
  nqs_cmd->add_option("--examples", q_examples)->capture_default_str();
  nqs_cmd->add_option("--epochs", q_train.epochs)->capture_default_str();
  nqs_cmd->add_option("--lr", q_train.learning_rate)->capture_default_str();
  nqs_cmd->add_option("--validation", q_train.validation_fraction)->capture_default_str();
  nqs_cmd->add_option("--checkpoints-per-epoch", q_train.checkpoints_per_epoch)->capture_default_str();
  nqs_cmd->add_option("--features", q_features, "random-phase feature functions")->capture_default_str();
  nqs_cmd->add_option("--hidden", q_hidden, "hidden width (0 = 4n)")->capture_default_str();
  nqs_cmd->add_flag("--x-only", q_x_only, "simulate X-basis records only");
  nqs_cmd->add_option("--test-strings", q_tests)->capture_default_str();
  nqs_cmd->add_option("--purity-sizes", q_sizes, "subsystem sizes |A| for the purity curve")->delimiter(',');
  nqs_cmd->add_option("--purity-pairs", q_pairs)->capture_default_str();
  nqs_cmd->add_option("--seed", seed)->capture_default_str();
  nqs_cmd->callback([&] {
    job = [&](Output& o) {
      const PhaseStateModel truth(q_n, parse_phase_source(q_phases), q_model_seed);
      RandomSource rng(seed, 0x4E);
      q_train.divergence_dump = (o.dir / "nqs_diverged.json").string();
      q_train.validate();
      NqsEvalConfig ec;
      ec.test_strings = q_tests;
      ec.purity_pairs = q_pairs;
      ec.purity_sizes = q_sizes;
      ec.validate(q_n);
      const auto features = FeatureConfig::for_target(truth, q_features, rng);
      DualInputNet net(features, rng, q_hidden);
      const Json config{{"command", "train-nqs"}, {"model", truth.descriptor()},     {"examples", q_examples},
                        {"train", q_train.to_json()}, {"features", features.to_json()}, {"hidden", net.hidden()},
                        {"x_only", q_x_only},       {"test_strings", q_tests},         {"purity_sizes", q_sizes},
                        {"purity_pairs", q_pairs},  {"seed", seed}};
      const auto data = simulate_training_data(truth, q_examples, rng, !q_x_only);
      const auto res = train(net, data, q_train, rng);
      const auto ev = evaluate(net, truth, ec, rng);
      o.csv("nqs_trace.csv", config, [&](std::ostream& s) { write_training_trace_csv(s, res.trace); });
      o.csv("nqs_eval.csv", config, [&](std::ostream& s) { write_evaluation_csv(s, ev); });
      if (!ev.purity.empty()) o.csv("nqs_purity.csv", config, [&](std::ostream& s) { write_purity_csv(s, ev.purity); });
      Json ck = net.to_json();
      ck["best_checkpoint"] = res.best_checkpoint;
      o.json("nqs_checkpoint.json", config, ck);
      out << "fidelity=" << ev.fidelity << " +- " << ev.fidelity_se << "  shadow_overlap=" << ev.shadow << " +- "
          << ev.shadow_se << '\n';
      return config;
    };
  });

  // congestion
  auto* cong_cmd = app.add_subcommand("congestion", "canonical-path congestion bound of the level-1 walk");
  ModelOptions km;
  bool k_random = false;
  km.add(cong_cmd);
  cong_cmd->add_flag("--random-paths", k_random, "pick the core path direction at random");
  cong_cmd->add_option("--seed", seed)->capture_default_str();
  cong_cmd->callback([&] {
    job = [&](Output& o) {
      const Json desc = km.descriptor();
      const auto model = model_from_json(desc);
      const int n = model->num_qubits();
      const Json config{{"command", "congestion"}, {"model", desc}, {"random_paths", k_random}, {"seed", seed}};
      RandomSource rng(seed, 0xC6);
      const auto z = exact_distribution(*model);
      const auto res = congestion_bound(z, n, k_random ? &rng : nullptr);
      const auto rep = spectral_report(build_walk(z, n, 1));
      Json r{{"rho", res.rho},
             {"worst_edge", {{"from", res.worst.from}, {"bit", res.worst.bit}, {"load", res.worst.load},
                             {"capacity", res.worst.capacity}}},
             {"max_path_length", res.max_path_length},
             {"bad_count", res.bad_count},
             {"tau", rep.degenerate ? Json(nullptr) : Json(rep.tau)}};
      r["rho_dominates_tau"] = rep.degenerate ? Json(nullptr) : Json(res.rho >= rep.tau);
      o.json("congestion.json", config, r);
      o.csv("edge_loads.csv", config, [&](std::ostream& s) { write_edge_loads_csv(s, res, n); });
      out << "rho=" << res.rho << "  tau=" << (rep.degenerate ? std::string("inf") : std::to_string(rep.tau)) << '\n';
      return config;
    };
  });

  // enforce-check
  auto* enf_cmd = app.add_subcommand("enforce-check", "local escape conditions and the enforced model");
  ModelOptions fm;
  EscapeParams f_params;
  bool f_gap = false;
  fm.add(enf_cmd);
  enf_cmd->add_option("--alpha", f_params.alpha)->capture_default_str();
  enf_cmd->add_option("--c-upper", f_params.c_upper)->capture_default_str();
  enf_cmd->add_option("--c-lower", f_params.c_lower)->capture_default_str();
  enf_cmd->add_option("--c-upper-prime", f_params.c_upper_prime, "0 = max(c_upper, n)")->capture_default_str();
  enf_cmd->add_option("--nu", f_params.nu, "0 = 2^-n")->capture_default_str();
  enf_cmd->add_flag("--gap", f_gap, "spectral gap of the enforced level-1 walk");
  enf_cmd->callback([&] {
    job = [&](Output& o) {
      const Json desc = fm.descriptor();
      const auto model = model_from_json(desc);
      const int n = model->num_qubits();
      f_params.validate();
      const auto params = f_params.resolved(n);
      const Json config{{"command", "enforce-check"}, {"model", desc}, {"params", params.to_json()}, {"gap", f_gap}};
      std::optional<double> norm = model->norm_hint();
      if (!norm) {
        double s = 0.0;
        for (Bits x = 0; x < (Bits{1} << n); ++x) s += std::norm(model->amplitude(x));
        norm = s;
      }
      const auto checks = check_all_escape(*model, params, norm);
      std::map<std::string, std::uint64_t> counts;
      for (const auto& c : checks) ++counts[std::string(to_string(c.violated))];
      const EnforcedModel enforced(model, params, true, norm);
      double max_change = 0.0;
      for (Bits x = 0; x < checks.size(); ++x)
        max_change = std::max(max_change, std::abs(enforced.amplitude(x) - model->amplitude(x)));
      Json r{{"counts", counts},
             {"failing", checks.size() - counts["none"]},
             {"unchanged", max_change == 0.0},
             {"max_amplitude_change", max_change}};
      if (f_gap) {
        const auto rep = spectral_report(build_walk(enforced, 1));
        r["gap"] = rep.gap;
        r["tau"] = rep.degenerate ? Json(nullptr) : Json(rep.tau);
      }
      o.json("enforce.json", config, r);
      out << "failing=" << r["failing"].get<std::uint64_t>() << " of " << checks.size()
          << (max_change == 0.0 ? "  (model unchanged)" : "") << '\n';
      return config;
    };
  });

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitConfig;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return is_config_error(e.kind()) ? kExitConfig : kExitRuntime;
  }

  const auto started = std::chrono::steady_clock::now();
  const std::string stamp = iso_now();
  try {
    Output o;
    if (!g.out_dir.empty()) {
      o.dir = g.out_dir;
    } else if (const char* env = std::getenv("SHADOWCERT_OUT_DIR"); env && *env) {
      o.dir = env;
    } else {
      o.dir = ".";
    }
    set_thread_limit(g.threads);
    const Json config = job(o);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    const std::string command = config.at("command").get<std::string>();
    const Json meta{{"command", command},
                    {"config_digest", config_digest(config)},
                    {"started", stamp},
                    {"wall_seconds", secs},
                    {"outputs", o.written}};
    write_atomic(o.dir / (command + ".meta.json"), meta.dump(2) + "\n");
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return is_config_error(e.kind()) ? kExitConfig : kExitRuntime;
  } catch (const Json::exception& e) {
    err << "error: configuration: " << e.what() << '\n';
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace shadowcert
