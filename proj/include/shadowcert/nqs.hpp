#pragma once

// Dual-input neural quantum state for uniform-magnitude phase states.
//
// The net sees a pair (b0, b1 = b0 ^ e_i) and predicts the Born probabilities
// of outcome 1 when the flipped qubit is measured in X and in Y. Phases are
// only ever recovered up to the phase of a reference string.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "shadowcert/models.hpp"

namespace shadowcert {

enum class MeasureBasis { x, y };

struct TrainingExample {
  Bits b = 0;  // bit i is ignored; b0 = b with bit i cleared
  int i = 0;
  MeasureBasis basis = MeasureBasis::x;
  int outcome = 0;
};

struct FeatureConfig {
  int n = 0;
  PhaseSource source = PhaseSource::pseudorandom_binary;
  std::vector<std::uint64_t> seeds;  // F phase functions, all from `source`

  int dim() const { return 2 * n + 2 * static_cast<int>(seeds.size()); }
  // F seeds with the truth's seed at a position drawn from rng, the rest fresh.
  static FeatureConfig for_target(const PhaseStateModel& truth, int f, RandomSource& rng);
  Json to_json() const;
  static FeatureConfig from_json(const Json& j);
};

class FeatureMap {
 public:
  explicit FeatureMap(FeatureConfig cfg);
  const FeatureConfig& config() const noexcept { return cfg_; }
  int dim() const noexcept { return cfg_.dim(); }
  // [b0 bits | one-hot(i) | phi_k(b0)/pi - 1 | phi_k(b1)/pi - 1].
  void fill(Bits b, int i, Eigen::Ref<Eigen::VectorXd> out) const;
  Eigen::VectorXd operator()(Bits b, int i) const;

 private:
  FeatureConfig cfg_;
  std::vector<PhaseStateModel> phases_;
};

// Anything that can report (p_x, p_y) for the pair (b with bit i cleared, set).
class PhaseDiffSource {
 public:
  virtual ~PhaseDiffSource() = default;
  virtual int num_qubits() const = 0;
  virtual std::pair<double, double> probabilities(Bits b, int i) const = 0;
};

// Returns the true (p_x, p_y) of a phase model.
class ExactPhaseDiff final : public PhaseDiffSource {
 public:
  explicit ExactPhaseDiff(const PhaseStateModel& truth) : truth_(truth) {}
  int num_qubits() const override { return truth_.num_qubits(); }
  std::pair<double, double> probabilities(Bits b, int i) const override;

 private:
  const PhaseStateModel& truth_;
};

class DualInputNet final : public PhaseDiffSource {
 public:
  // Xavier-uniform weights; hidden width defaults to 4n.
  DualInputNet(FeatureConfig features, RandomSource& rng, int hidden = 0);

  int num_qubits() const override { return features_.config().n; }
  int hidden() const noexcept { return static_cast<int>(b1_.size()); }
  const FeatureMap& features() const noexcept { return features_; }
  std::pair<double, double> probabilities(Bits b, int i) const override;

  double loss(const TrainingExample& ex) const;
  // Adds d loss / d theta (flattened like parameters()) to grad; returns the loss.
  double accumulate_gradient(const TrainingExample& ex, Eigen::VectorXd& grad) const;
  // One update; returns the pre-update loss and skips the update if it is not finite.
  double sgd_step(const TrainingExample& ex, double lr);

  std::size_t parameter_count() const noexcept;
  Eigen::VectorXd parameters() const;  // W1 (col-major), b1, W2, b2
  void set_parameters(const Eigen::VectorXd& theta);
  bool finite() const;

  Json to_json() const;
  static DualInputNet from_json(const Json& j);

 private:
  DualInputNet(FeatureConfig features, int hidden);
  Eigen::Vector2d forward(const Eigen::VectorXd& x, Eigen::VectorXd* act) const;

  FeatureMap features_;
  Eigen::MatrixXd w1_;
  Eigen::VectorXd b1_;
  Eigen::Matrix<double, 2, Eigen::Dynamic> w2_;
  Eigen::Vector2d b2_;
};

inline constexpr double kLogLossEps = 1e-10;
double log_loss(double prob, int outcome);

double outcome_probability(const PhaseStateModel& truth, Bits b, int i, MeasureBasis basis);

// Outcome 1 with probability (1 + cos d)/2 in X and (1 + sin d)/2 in Y,
// d = phi(b0) - phi(b1). Basis X only when `y_basis` is false.
std::vector<TrainingExample> simulate_training_data(const PhaseStateModel& truth, std::uint64_t count,
                                                    RandomSource& rng, bool y_basis = true);

struct PhaseDiff {
  double angle = 0.0;
  bool ill_conditioned = false;  // both recentered outputs below 1e-6
};
PhaseDiff phase_diff_from_probabilities(double px, double py);
// phi(b0) - phi(b1) where b0 = b & ~e_i, b1 = b | e_i.
PhaseDiff predict_phase_diff(const PhaseDiffSource& net, Bits b, int i);

// phi(b) - phi(ref) accumulated along the path flipping differing bits in
// `order` (ascending when empty).
double predict_phase(const PhaseDiffSource& net, Bits b, Bits ref, const std::vector<int>& order = {});
double predict_phase(const PhaseDiffSource& net, Bits b, RandomSource& rng);

struct TrainConfig {
  int epochs = 10;
  double learning_rate = 0.05;
  double validation_fraction = 0.1;
  // Extra mid-epoch checkpoints (evaluated on validation data) per epoch.
  int checkpoints_per_epoch = 1;
  std::string divergence_dump;  // where to write the net when loss goes non-finite

  void validate() const;
  Json to_json() const;
  static TrainConfig from_json(const Json& j);
};

struct TrainingTraceRow {
  double epoch = 0.0;  // fractional for mid-epoch checkpoints
  double train_logloss = 0.0;
  double valid_logloss = 0.0;
  double train_shadow = 0.0;
  double valid_shadow = 0.0;
};

struct TrainResult {
  std::vector<TrainingTraceRow> trace;  // row 0 is the untrained net
  std::size_t best_checkpoint = 0;
  std::vector<DualInputNet> checkpoints;  // filled only when keep_checkpoints
};

// Mean log-loss and normalized shadow overlap (m = 1) of data under net.
std::pair<double, double> data_metrics(const DualInputNet& net, const std::vector<TrainingExample>& data);

// Sequential per-example SGD. The net is left at the best-by-validation
// checkpoint. Raises training_diverged on a non-finite loss.
TrainResult train(DualInputNet& net, const std::vector<TrainingExample>& data, const TrainConfig& cfg,
                  RandomSource& rng, bool keep_checkpoints = false);

struct NqsEvalConfig {
  std::uint64_t test_strings = 10000;
  std::uint64_t purity_pairs = 30000;
  std::vector<int> purity_sizes;  // empty means none
  std::uint64_t batch = 1000;     // strings sharing one reference

  void validate(int n) const;
};

struct PurityPoint {
  int size = 0;
  double value = 0.0;
  double std_error = 0.0;
};

struct NqsEvaluation {
  double fidelity = 0.0;
  double fidelity_se = 0.0;
  double shadow = 0.0;
  double shadow_se = 0.0;
  std::uint64_t ill_conditioned = 0;
  std::vector<PurityPoint> purity;
};

NqsEvaluation evaluate(const PhaseDiffSource& net, const PhaseStateModel& truth, const NqsEvalConfig& cfg,
                       RandomSource& rng);

// Purity of the first `size` qubits of the predicted state, pairs of uniform strings.
PurityPoint predicted_purity(const PhaseDiffSource& net, int size, std::uint64_t pairs, RandomSource& rng);

void write_training_trace_csv(std::ostream& out, const std::vector<TrainingTraceRow>& trace);
void write_evaluation_csv(std::ostream& out, const NqsEvaluation& ev);
void write_purity_csv(std::ostream& out, const std::vector<PurityPoint>& curve);

}  // namespace shadowcert
