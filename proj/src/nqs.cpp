#include "shadowcert/nqs.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <ostream>

#include "shadowcert/bitcube.hpp"
#include "shadowcert/error.hpp"
#include "shadowcert/estimators.hpp"
#include "shadowcert/parallel.hpp"
#include "shadowcert/stats.hpp"

namespace shadowcert {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

Bits bit(int i) { return Bits{1} << i; }

int output_index(MeasureBasis b) { return b == MeasureBasis::x ? 0 : 1; }

// Phase features centered on [-1, 1).
double encode_phase(double phi) { return phi / std::numbers::pi - 1.0; }

void check_site(int i, int n) {
  if (i < 0 || i >= n) throw Error(ErrorKind::invalid_argument, "flip index out of range");
}

}  // namespace

FeatureConfig FeatureConfig::for_target(const PhaseStateModel& truth, int f, RandomSource& rng) {
  if (f < 1) throw Error(ErrorKind::invalid_config, "need at least one phase feature");
  FeatureConfig cfg;
  cfg.n = truth.num_qubits();
  cfg.source = truth.source();
  const auto slot = rng.below(static_cast<std::uint64_t>(f));
  for (int k = 0; k < f; ++k) {
    if (static_cast<std::uint64_t>(k) == slot) {
      cfg.seeds.push_back(truth.seed());
      continue;
    }
    std::uint64_t s = rng();
    while (s == truth.seed()) s = rng();
    cfg.seeds.push_back(s);
  }
  return cfg;
}

Json FeatureConfig::to_json() const {
  return {{"n", n}, {"phases", std::string(shadowcert::to_string(source))}, {"seeds", seeds}};
}

FeatureConfig FeatureConfig::from_json(const Json& j) {
  FeatureConfig cfg;
  cfg.n = j.at("n").get<int>();
  cfg.source = parse_phase_source(j.at("phases").get<std::string>());
  cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  return cfg;
}

FeatureMap::FeatureMap(FeatureConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.n < 1 || cfg_.n > kMaxQubits) throw Error(ErrorKind::invalid_argument, "qubit count out of range");
  if (cfg_.seeds.empty()) throw Error(ErrorKind::invalid_config, "need at least one phase feature");
  phases_.reserve(cfg_.seeds.size());
  for (auto s : cfg_.seeds) phases_.emplace_back(cfg_.n, cfg_.source, s);
}

void FeatureMap::fill(Bits b, int i, Eigen::Ref<Eigen::VectorXd> out) const {
  const int n = cfg_.n;
  check_site(i, n);
  const Bits b0 = b & ~bit(i);
  const Bits b1 = b0 | bit(i);
  out.setZero();
  for (int k = 0; k < n; ++k) out[k] = static_cast<double>(bit_of(b0, k));
  out[n + i] = 1.0;
  const auto f = static_cast<int>(phases_.size());
  for (int k = 0; k < f; ++k) {
    const auto& ph = phases_[static_cast<std::size_t>(k)];
    out[2 * n + k] = encode_phase(ph.phase(b0));
    out[2 * n + f + k] = encode_phase(ph.phase(b1));
  }
}

Eigen::VectorXd FeatureMap::operator()(Bits b, int i) const {
  Eigen::VectorXd x(dim());
  fill(b, i, x);
  return x;
}

std::pair<double, double> ExactPhaseDiff::probabilities(Bits b, int i) const {
  check_site(i, truth_.num_qubits());
  const Bits b0 = b & ~bit(i);
  const double d = truth_.phase(b0) - truth_.phase(b0 | bit(i));
  return {0.5 * (1.0 + std::cos(d)), 0.5 * (1.0 + std::sin(d))};
}

DualInputNet::DualInputNet(FeatureConfig features, int hidden) : features_(std::move(features)) {
  const int h = hidden > 0 ? hidden : 4 * features_.config().n;
  w1_ = Eigen::MatrixXd::Zero(h, features_.dim());
  b1_ = Eigen::VectorXd::Zero(h);
  w2_ = Eigen::Matrix<double, 2, Eigen::Dynamic>::Zero(2, h);
  b2_ = Eigen::Vector2d::Zero();
}

DualInputNet::DualInputNet(FeatureConfig features, RandomSource& rng, int hidden)
    : DualInputNet(std::move(features), hidden) {
  const auto init = [&](auto& m) {
    const double r = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      for (Eigen::Index k = 0; k < m.rows(); ++k) m(k, c) = r * (2.0 * rng.uniform() - 1.0);
  };
  init(w1_);
  init(w2_);
}

Eigen::Vector2d DualInputNet::forward(const Eigen::VectorXd& x, Eigen::VectorXd* act) const {
  Eigen::VectorXd a = (w1_ * x + b1_).array().tanh().matrix();
  Eigen::Vector2d z = w2_ * a + b2_;
  if (act) *act = std::move(a);
  return {sigmoid(z[0]), sigmoid(z[1])};
}

std::pair<double, double> DualInputNet::probabilities(Bits b, int i) const {
  const auto p = forward(features_(b, i), nullptr);
  return {p[0], p[1]};
}

double log_loss(double prob, int outcome) {
  const double o = outcome ? 1.0 : 0.0;
  return -o * std::log(prob + kLogLossEps) - (1.0 - o) * std::log(1.0 - prob + kLogLossEps);
}

double DualInputNet::loss(const TrainingExample& ex) const {
  const auto p = forward(features_(ex.b, ex.i), nullptr);
  return log_loss(p[output_index(ex.basis)], ex.outcome);
}

std::size_t DualInputNet::parameter_count() const noexcept {
  return static_cast<std::size_t>(w1_.size() + b1_.size() + w2_.size() + b2_.size());
}

double DualInputNet::accumulate_gradient(const TrainingExample& ex, Eigen::VectorXd& grad) const {
  if (grad.size() != static_cast<Eigen::Index>(parameter_count())) grad = Eigen::VectorXd::Zero(parameter_count());
  const Eigen::VectorXd x = features_(ex.b, ex.i);
  Eigen::VectorXd a;
  const auto p = forward(x, &a);
  const int k = output_index(ex.basis);
  const double pk = p[k];
  const double o = ex.outcome ? 1.0 : 0.0;
  const double dz2 = (-o / (pk + kLogLossEps) + (1.0 - o) / (1.0 - pk + kLogLossEps)) * pk * (1.0 - pk);
  const Eigen::VectorXd dz1 = (w2_.row(k).transpose() * dz2).cwiseProduct((1.0 - a.array().square()).matrix());

  const auto h = w1_.rows(), d = w1_.cols();
  Eigen::Index off = 0;
  Eigen::Map<Eigen::MatrixXd>(grad.data() + off, h, d) += dz1 * x.transpose();
  off += h * d;
  grad.segment(off, h) += dz1;
  off += h;
  Eigen::Map<Eigen::Matrix<double, 2, Eigen::Dynamic>> gw2(grad.data() + off, 2, h);
  gw2.row(k) += dz2 * a.transpose();
  off += 2 * h;
  grad[off + k] += dz2;
  return log_loss(pk, ex.outcome);
}

double DualInputNet::sgd_step(const TrainingExample& ex, double lr) {
  const Eigen::VectorXd x = features_(ex.b, ex.i);
  Eigen::VectorXd a;
  const auto p = forward(x, &a);
  const int k = output_index(ex.basis);
  const double pk = p[k];
  const double o = ex.outcome ? 1.0 : 0.0;
  const double dz2 = (-o / (pk + kLogLossEps) + (1.0 - o) / (1.0 - pk + kLogLossEps)) * pk * (1.0 - pk);
  const double loss = log_loss(pk, ex.outcome);
  if (!std::isfinite(loss)) return loss;
  const Eigen::VectorXd dz1 = (w2_.row(k).transpose() * dz2).cwiseProduct((1.0 - a.array().square()).matrix());
  w2_.row(k) -= lr * dz2 * a.transpose();
  b2_[k] -= lr * dz2;
  w1_.noalias() -= lr * dz1 * x.transpose();
  b1_ -= lr * dz1;
  return loss;
}

Eigen::VectorXd DualInputNet::parameters() const {
  Eigen::VectorXd t(parameter_count());
  t << Eigen::Map<const Eigen::VectorXd>(w1_.data(), w1_.size()), b1_,
      Eigen::Map<const Eigen::VectorXd>(w2_.data(), w2_.size()), b2_;
  return t;
}

void DualInputNet::set_parameters(const Eigen::VectorXd& theta) {
  if (theta.size() != static_cast<Eigen::Index>(parameter_count()))
    throw Error(ErrorKind::invalid_argument, "parameter vector has the wrong length");
  Eigen::Index off = 0;
  w1_ = Eigen::Map<const Eigen::MatrixXd>(theta.data(), w1_.rows(), w1_.cols());
  off += w1_.size();
  b1_ = theta.segment(off, b1_.size());
  off += b1_.size();
  w2_ = Eigen::Map<const Eigen::Matrix<double, 2, Eigen::Dynamic>>(theta.data() + off, 2, w2_.cols());
  off += w2_.size();
  b2_ = theta.segment<2>(off);
}

bool DualInputNet::finite() const { return parameters().allFinite(); }

Json DualInputNet::to_json() const {
  const Eigen::VectorXd t = parameters();
  return {{"format", "shadowcert-nqs"},
          {"version", 1},
          {"features", features_.config().to_json()},
          {"hidden", hidden()},
          {"parameters", std::vector<double>(t.data(), t.data() + t.size())}};
}

DualInputNet DualInputNet::from_json(const Json& j) {
  if (j.value("format", "") != "shadowcert-nqs" || j.value("version", 0) != 1)
    throw Error(ErrorKind::parse_error, "not a version 1 network checkpoint");
  DualInputNet net(FeatureConfig::from_json(j.at("features")), j.at("hidden").get<int>());
  const auto p = j.at("parameters").get<std::vector<double>>();
  net.set_parameters(Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size())));
  if (!net.finite()) throw Error(ErrorKind::parse_error, "checkpoint holds non-finite weights");
  return net;
}

double outcome_probability(const PhaseStateModel& truth, Bits b, int i, MeasureBasis basis) {
  check_site(i, truth.num_qubits());
  const Bits b0 = b & ~bit(i);
  const double d = truth.phase(b0) - truth.phase(b0 | bit(i));
  return basis == MeasureBasis::x ? 0.5 * (1.0 + std::cos(d)) : 0.5 * (1.0 + std::sin(d));
}

std::vector<TrainingExample> simulate_training_data(const PhaseStateModel& truth, std::uint64_t count,
                                                    RandomSource& rng, bool y_basis) {
  const int n = truth.num_qubits();
  const Bits mask = low_mask(n);
  std::vector<TrainingExample> out;
  out.reserve(count);
  for (std::uint64_t t = 0; t < count; ++t) {
    TrainingExample ex;
    ex.i = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    ex.b = (rng() & mask) & ~bit(ex.i);
    ex.basis = (y_basis && (rng() & 1)) ? MeasureBasis::y : MeasureBasis::x;
    ex.outcome = rng.uniform() < outcome_probability(truth, ex.b, ex.i, ex.basis) ? 1 : 0;
    out.push_back(ex);
  }
  return out;
}

PhaseDiff phase_diff_from_probabilities(double px, double py) {
  const double cx = 2.0 * px - 1.0, cy = 2.0 * py - 1.0;
  return {std::atan2(cy, cx), std::abs(cx) < 1e-6 && std::abs(cy) < 1e-6};
}

PhaseDiff predict_phase_diff(const PhaseDiffSource& net, Bits b, int i) {
  const auto [px, py] = net.probabilities(b, i);
  return phase_diff_from_probabilities(px, py);
}

double predict_phase(const PhaseDiffSource& net, Bits b, Bits ref, const std::vector<int>& order) {
  const int n = net.num_qubits();
  const Bits diff = (b ^ ref) & low_mask(n);
  std::vector<int> sites = order;
  if (sites.empty()) {
    for (int i = 0; i < n; ++i)
      if (bit_of(diff, i)) sites.push_back(i);
  }
  double phase = 0.0;
  Bits cur = ref;
  Bits flipped = 0;
  for (int i : sites) {
    check_site(i, n);
    if (!bit_of(diff, i) || bit_of(flipped, i)) throw Error(ErrorKind::invalid_argument, "flip order does not match the path");
    flipped |= bit(i);
    // angle is phi(bit i clear) - phi(bit i set)
    const double d = predict_phase_diff(net, cur, i).angle;
    phase += bit_of(cur, i) ? d : -d;
    cur ^= bit(i);
  }
  if (flipped != diff) throw Error(ErrorKind::invalid_argument, "flip order does not reach the target");
  return phase;
}

double predict_phase(const PhaseDiffSource& net, Bits b, RandomSource& rng) {
  const Bits ref = rng() & low_mask(net.num_qubits());
  return predict_phase(net, b, ref);
}

void TrainConfig::validate() const {
  if (epochs < 1) throw Error(ErrorKind::invalid_config, "epochs must be positive");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw Error(ErrorKind::invalid_config, "learning rate must be positive");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
    throw Error(ErrorKind::invalid_config, "validation fraction must lie in (0, 1)");
  if (checkpoints_per_epoch < 1) throw Error(ErrorKind::invalid_config, "need at least one checkpoint per epoch");
}

Json TrainConfig::to_json() const {
  return {{"epochs", epochs},
          {"learning_rate", learning_rate},
          {"validation_fraction", validation_fraction},
          {"checkpoints_per_epoch", checkpoints_per_epoch}};
}

TrainConfig TrainConfig::from_json(const Json& j) {
  TrainConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.validation_fraction = j.value("validation_fraction", c.validation_fraction);
  c.checkpoints_per_epoch = j.value("checkpoints_per_epoch", c.checkpoints_per_epoch);
  c.validate();
  return c;
}

std::pair<double, double> data_metrics(const DualInputNet& net, const std::vector<TrainingExample>& data) {
  if (data.empty()) throw Error(ErrorKind::invalid_argument, "no examples");
  struct Acc {
    Moments loss, omega;
    void merge(const Acc& o) {
      loss.merge(o.loss);
      omega.merge(o.omega);
    }
  };
  const RandomSource unused(0);
  const Acc acc = sharded<Acc>(data.size(), unused, [&](RandomSource&, std::uint64_t t, Acc& a) {
    const auto& ex = data[t];
    const auto [px, py] = net.probabilities(ex.b, ex.i);
    const double p = ex.basis == MeasureBasis::x ? px : py;
    a.loss.add(log_loss(p, ex.outcome));
    a.omega.add(3.0 * (ex.outcome ? p : 1.0 - p) - 1.0);
  });
  // X and Y records only; a Z record always contributes 1/2.
  const double omega = (2.0 / 3.0) * acc.omega.mean() + 1.0 / 6.0;
  return {acc.loss.mean(), normalized_shadow_overlap(omega, 1, net.num_qubits())};
}

TrainResult train(DualInputNet& net, const std::vector<TrainingExample>& data, const TrainConfig& cfg,
                  RandomSource& rng, bool keep_checkpoints) {
  cfg.validate();
  if (data.size() < 2) throw Error(ErrorKind::invalid_argument, "need at least two examples");
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  auto n_valid = static_cast<std::size_t>(std::ceil(cfg.validation_fraction * static_cast<double>(data.size())));
  n_valid = std::clamp<std::size_t>(n_valid, 1, data.size() - 1);
  std::vector<TrainingExample> valid, fit;
  for (std::size_t k = 0; k < idx.size(); ++k) (k < n_valid ? valid : fit).push_back(data[idx[k]]);

  TrainResult res;
  Eigen::VectorXd best = net.parameters();
  double best_loss = 0.0;
  const auto checkpoint = [&](double epoch) {
    TrainingTraceRow row;
    row.epoch = epoch;
    std::tie(row.train_logloss, row.train_shadow) = data_metrics(net, fit);
    std::tie(row.valid_logloss, row.valid_shadow) = data_metrics(net, valid);
    if (res.trace.empty() || row.valid_logloss < best_loss) {
      best_loss = row.valid_logloss;
      best = net.parameters();
      res.best_checkpoint = res.trace.size();
    }
    res.trace.push_back(row);
    if (keep_checkpoints) res.checkpoints.push_back(net);
  };
  const auto diverged = [&](std::size_t step) {
    std::string where;
    if (!cfg.divergence_dump.empty()) {
      std::ofstream f(cfg.divergence_dump);
      Json dump = net.to_json();
      dump["step"] = step;
      f << dump.dump();
      where = "; state written to " + cfg.divergence_dump;
    }
    throw Error(ErrorKind::training_diverged, "non-finite loss at step " + std::to_string(step) + where);
  };

  checkpoint(0.0);
  std::vector<std::size_t> order(fit.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t step = 0;
  const auto per = static_cast<std::size_t>(cfg.checkpoints_per_epoch);
  for (int e = 0; e < cfg.epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t next = 1;
    for (std::size_t k = 0; k < order.size(); ++k, ++step) {
      const auto& ex = fit[order[k]];
      if (!std::isfinite(net.sgd_step(ex, cfg.learning_rate))) diverged(step);
      if (next < per && (k + 1) * per >= next * order.size()) {
        checkpoint(e + static_cast<double>(next) / static_cast<double>(per));
        ++next;
      }
    }
    if (!net.finite()) diverged(step);
    checkpoint(e + 1.0);
  }
  net.set_parameters(best);
  return res;
}

void NqsEvalConfig::validate(int n) const {
  if (test_strings == 0 || batch == 0) throw Error(ErrorKind::invalid_config, "need test strings");
  for (int s : purity_sizes) {
    if (s < 1 || s > n) throw Error(ErrorKind::invalid_config, "purity subsystem size out of range");
  }
  if (!purity_sizes.empty() && purity_pairs < 2) throw Error(ErrorKind::invalid_config, "need purity pairs");
}

PurityPoint predicted_purity(const PhaseDiffSource& net, int size, std::uint64_t pairs, RandomSource& rng) {
  const int n = net.num_qubits();
  if (size < 0 || size > n) throw Error(ErrorKind::invalid_argument, "subsystem size out of range");
  const Bits a = low_mask(size), mask = low_mask(n);
  const Bits ref = rng() & mask;
  const Moments m = sharded<Moments>(pairs, derive(rng), [&](RandomSource& r, std::uint64_t, Moments& acc) {
    const Bits x = r() & mask, y = r() & mask;
    const Bits s1 = (y & a) | (x & ~a), s2 = (x & a) | (y & ~a);
    const double p = predict_phase(net, s1, ref) + predict_phase(net, s2, ref) - predict_phase(net, x, ref) -
                     predict_phase(net, y, ref);
    acc.add(std::cos(p));
  });
  return {size, m.mean(), m.std_error()};
}

NqsEvaluation evaluate(const PhaseDiffSource& net, const PhaseStateModel& truth, const NqsEvalConfig& cfg,
                       RandomSource& rng) {
  const int n = truth.num_qubits();
  if (net.num_qubits() != n) throw Error(ErrorKind::invalid_argument, "net and truth disagree on n");
  cfg.validate(n);
  const Bits mask = low_mask(n);
  const std::uint64_t batches = (cfg.test_strings + cfg.batch - 1) / cfg.batch;
  struct Part {
    double fidelity = 0.0;
    Moments local;
    std::uint64_t ill = 0;
  };
  std::vector<Part> parts(batches);
  const RandomSource base = derive(rng);
  parallel_shards(batches, [&](std::size_t k) {
    RandomSource r = base.split(k);
    const std::uint64_t lo = k * cfg.batch, hi = std::min(cfg.test_strings, lo + cfg.batch);
    const Bits ref = r() & mask;
    Amplitude acc = 0.0;
    for (std::uint64_t t = lo; t < hi; ++t) {
      const Bits b = r() & mask;
      acc += std::polar(1.0, predict_phase(net, b, ref) - (truth.phase(b) - truth.phase(ref)));
      const int i = static_cast<int>(r.below(static_cast<std::uint64_t>(n)));
      const PhaseDiff pd = predict_phase_diff(net, b, i);
      const Bits b0 = b & ~bit(i);
      const double d_true = truth.phase(b0) - truth.phase(b0 | bit(i));
      parts[k].local.add(0.5 * (1.0 + std::cos(pd.angle - d_true)));
      parts[k].ill += pd.ill_conditioned ? 1 : 0;
    }
    parts[k].fidelity = std::norm(acc / static_cast<double>(hi - lo));
  });

  NqsEvaluation ev;
  Moments fid, local;
  for (const auto& p : parts) {
    fid.add(p.fidelity);
    local.merge(p.local);
    ev.ill_conditioned += p.ill;
  }
  const double d = std::ldexp(1.0, n);
  const double scale = (d - 1.0) / d * 2.0;
  ev.fidelity = fid.mean();
  ev.fidelity_se = batches > 1 ? fid.std_error() : 0.0;
  ev.shadow = scale * (local.mean() - 0.5) + 1.0 / d;
  ev.shadow_se = scale * local.std_error();
  for (int s : cfg.purity_sizes) ev.purity.push_back(predicted_purity(net, s, cfg.purity_pairs, rng));
  return ev;
}

void write_training_trace_csv(std::ostream& out, const std::vector<TrainingTraceRow>& trace) {
  out << "epoch,Tlogloss,Vlogloss,TShadowF,VShadowF\n";
  out.precision(10);
  for (const auto& r : trace) {
    out << r.epoch << ',' << r.train_logloss << ',' << r.valid_logloss << ',' << r.train_shadow << ','
        << r.valid_shadow << '\n';
  }
}

void write_evaluation_csv(std::ostream& out, const NqsEvaluation& ev) {
  out << "metric,value,se\n";
  out.precision(10);
  out << "fidelity," << ev.fidelity << ',' << ev.fidelity_se << '\n';
  out << "shadow_overlap," << ev.shadow << ',' << ev.shadow_se << '\n';
  for (const auto& p : ev.purity) out << "purity_" << p.size << ',' << p.value << ',' << p.std_error << '\n';
}

void write_purity_csv(std::ostream& out, const std::vector<PurityPoint>& curve) {
  out << "subsystem_size,purity,se\n";
  out.precision(10);
  for (const auto& p : curve) out << p.size << ',' << p.value << ',' << p.std_error << '\n';
}

}  // namespace shadowcert
