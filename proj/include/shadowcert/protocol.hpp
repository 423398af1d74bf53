#pragma once

// Shadow-overlap certification: data collection, the query phase and verdicts.

#include <Eigen/Dense>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "shadowcert/bitcube.hpp"
#include "shadowcert/models.hpp"
#include "shadowcert/state.hpp"

namespace shadowcert {

// up_to: uniform over subsets of size 1..m. exact: subsets of size exactly m.
enum class SubsetMode { up_to, exact };

struct MeasurementRecord {
  QubitSubset subset;
  Bits z = 0;  // n - r bits, ascending qubit order over the measured qubits
  std::vector<Basis> bases;
  std::vector<Eigenstate> outcomes;

  int n() const noexcept { return subset.n(); }
  int r() const noexcept { return subset.size(); }
  Bits z_full() const noexcept { return expand_outside(z, subset.mask(), subset.n()); }

  Json to_json() const;
  static MeasurementRecord from_json(const Json& j);
};

void write_records(std::ostream& out, const std::vector<MeasurementRecord>& records);
std::vector<MeasurementRecord> read_records(std::istream& in);

// One round of data collection; never touches a model.
MeasurementRecord simulate_record(const NoisyState& state, int m, SubsetMode mode, RandomSource& rng);

std::vector<MeasurementRecord> collect_records(const NoisyState& state, int m, std::uint64_t shots, RandomSource& rng,
                                               SubsetMode mode = SubsetMode::up_to);

// Psi(z^(l)) for every l in {0,1}^r.
std::vector<Amplitude> local_amplitudes(const QueryModel& model, const QubitSubset& subset, Bits z_full);

// L_{z_k}: sum over unordered antipodal pairs of rank-one projectors.
Eigen::MatrixXcd local_observable(const QueryModel& model, const QubitSubset& subset, Bits z_full);

// Tr(L sigma) with a prebuilt operator.
double local_overlap(const MeasurementRecord& record, const Eigen::MatrixXcd& local_op);

// Same value computed pair by pair, without forming any matrix.
double record_overlap(const QueryModel& model, const MeasurementRecord& record);

// <post| L_{z_k} |post> for a normalized 2^r post-measurement vector: the
// expectation of the shadow overlap given the subset and Z outcome.
double conditional_overlap(const QueryModel& model, const QubitSubset& subset, Bits z_full,
                           const std::vector<Amplitude>& post);

enum class Verdict { certified, failed, none };
std::string_view to_string(Verdict v);

struct EstimateReport {
  double mean = 0.0;
  double variance = 0.0;  // unbiased sample variance
  std::uint64_t count = 0;
  Verdict verdict = Verdict::none;
  double threshold = 0.0;
  double fidelity_lower_bound = 0.0;  // 1 - tau (1 - mean)
  double tau = 0.0;
  double epsilon = 0.0;
  double delta = 0.0;
  int level = 0;

  double std_error() const;
  Json to_json() const;
};

struct CertificationConfig {
  int level = 1;
  double epsilon = 0.1;
  double delta = 0.05;
  double tau = 1.0;
  std::optional<std::uint64_t> shots;  // default from the sample-complexity bound
  SubsetMode mode = SubsetMode::up_to;

  void validate() const;
  double threshold() const { return 1.0 - 3.0 * epsilon / (4.0 * tau); }
};

// ceil(2^{2m+4} tau^2 / eps^2 * ln(2/delta)).
std::uint64_t default_shots(int level, double epsilon, double delta, double tau);
// ceil(32 tau / eps * ln(1/delta)).
std::uint64_t default_shots_direct(double epsilon, double delta, double tau);

// Mean and variance of the local overlaps of a fixed record set.
EstimateReport estimate_overlap(const std::vector<MeasurementRecord>& records, const QueryModel& model);

// Streams simulate_record + record_overlap; equals estimating collect_records
// output drawn from the same generator state.
EstimateReport certify(const NoisyState& state, const QueryModel& model, const CertificationConfig& config,
                       RandomSource& rng);

// Level-1 variant measuring the kept qubit in {|Psi_kz><Psi_kz|, I - ...};
// needs the model during collection (null -> interactive-required).
EstimateReport certify_direct(const NoisyState& state, const QueryModel* model, const CertificationConfig& config,
                              RandomSource& rng);

struct Selection {
  std::size_t best = 0;
  EstimateReport report;  // of the winner, fidelity bound 1 - tau (1 - mean + eps)
  std::vector<double> means;
};

Selection hypothesis_select(const std::vector<MeasurementRecord>& records, const std::vector<ModelPtr>& models,
                            double tau, double epsilon);

// E[omega] by exhaustive enumeration of subset, z, bases and outcomes with
// their Born weights (n small).
double enumerate_expected_overlap(const NoisyState& state, const QueryModel& model, int m,
                                  SubsetMode mode = SubsetMode::up_to);

}  // namespace shadowcert
