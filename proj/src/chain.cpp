#include "shadowcert/chain.hpp"

#include <algorithm>
#include <cmath>

#include "shadowcert/error.hpp"

namespace shadowcert {

std::uint64_t walk_moves(int n, int m, WalkMode mode) {
  return mode == WalkMode::up_to ? subsets_up_to(n, m) : binomial(n, m);
}

Json WalkSpec::to_json() const {
  return {{"n", n},
          {"m", m},
          {"mode", mode == WalkMode::up_to ? "up_to" : "exact_jump"},
          {"num_moves", num_moves},
          {"support_size", support.size()}};
}

WalkSpec build_walk(const std::vector<double>& pi, int n, int m, WalkMode mode) {
  if (n < 1 || n > 20) throw Error(ErrorKind::too_large, "dense walks need 1 <= n <= 20");
  if (m < 1 || m > n) throw Error(ErrorKind::invalid_level, "walk level must lie in [1, n]");
  if (pi.size() != (std::size_t{1} << n)) throw Error(ErrorKind::invalid_argument, "pi must have 2^n entries");
  WalkSpec w;
  w.n = n;
  w.m = m;
  w.mode = mode;
  w.num_moves = walk_moves(n, m, mode);
  w.index.assign(pi.size(), -1);
  double total = 0.0;
  for (Bits x = 0; x < pi.size(); ++x) {
    if (pi[x] < 0.0 || !std::isfinite(pi[x])) throw Error(ErrorKind::invalid_argument, "pi must be finite and >= 0");
    if (pi[x] > 0.0) {
      w.index[x] = static_cast<int>(w.support.size());
      w.support.push_back(x);
      w.pi.push_back(pi[x]);
      total += pi[x];
    }
  }
  if (w.support.empty()) throw Error(ErrorKind::empty_support, "distribution has empty support");
  for (auto& p : w.pi) p /= total;
  return w;
}

WalkSpec build_walk(const QueryModel& model, int m, WalkMode mode) {
  return build_walk(exact_distribution(model), model.num_qubits(), m, mode);
}

namespace {

void require_dense(const WalkSpec& w) {
  if (w.size() > kMaxDenseSupport) {
    throw Error(ErrorKind::too_large, "support of " + std::to_string(w.size()) + " exceeds the dense limit of " +
                                          std::to_string(kMaxDenseSupport));
  }
}

double pi_at(const WalkSpec& w, Bits x) {
  const int i = w.index[x];
  return i < 0 ? 0.0 : w.pi[static_cast<std::size_t>(i)];
}

// Calls fn(row, col, value) for every nonzero entry of P, including self-loops.
template <class Fn>
void for_each_transition(const WalkSpec& w, Fn&& fn) {
  const double inv_n = 1.0 / static_cast<double>(w.num_moves);
  for (std::size_t a = 0; a < w.size(); ++a) {
    const Bits x = w.support[a];
    const double px = w.pi[a];
    double stay = 0.0;
    for_each_move(w.n, w.m, w.mode, [&](Bits mask) {
      const Bits y = x ^ mask;
      const double py = pi_at(w, y);
      stay += px / (px + py);
      if (py > 0.0) fn(a, static_cast<std::size_t>(w.index[y]), inv_n * py / (px + py));
    });
    fn(a, a, inv_n * stay);
  }
}

}  // namespace

Eigen::MatrixXd transition_matrix(const WalkSpec& w) {
  require_dense(w);
  const auto s = static_cast<Eigen::Index>(w.size());
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(s, s);
  for_each_transition(w, [&](std::size_t a, std::size_t b, double v) { p(a, b) += v; });
  return p;
}

Eigen::MatrixXd weight_matrix(const WalkSpec& w) {
  Eigen::MatrixXd p = transition_matrix(w);
  for (Eigen::Index a = 0; a < p.rows(); ++a) p.row(a) *= w.pi[static_cast<std::size_t>(a)];
  return p;
}

Eigen::MatrixXd symmetric_walk_matrix(const WalkSpec& w) {
  require_dense(w);
  const auto s = static_cast<Eigen::Index>(w.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(s, s);
  const double inv_n = 1.0 / static_cast<double>(w.num_moves);
  for (std::size_t a = 0; a < w.size(); ++a) {
    const Bits x = w.support[a];
    const double px = w.pi[a];
    double stay = 0.0;
    for_each_move(w.n, w.m, w.mode, [&](Bits mask) {
      const double py = pi_at(w, x ^ mask);
      stay += px / (px + py);
      if (py > 0.0) m(a, w.index[x ^ mask]) = inv_n * std::sqrt(px * py) / (px + py);
    });
    m(a, a) = inv_n * stay;
  }
  return m;
}

Eigen::MatrixXcd build_observable_L(const QueryModel& model, int m, WalkMode mode) {
  const int n = model.num_qubits();
  if (n > 12) throw Error(ErrorKind::too_large, "the full observable needs n <= 12");
  const auto psi = dense_amplitudes(model);
  std::vector<double> pi(psi.size());
  for (std::size_t x = 0; x < psi.size(); ++x) pi[x] = std::norm(psi[x]);
  const auto w = build_walk(pi, n, m, mode);
  const auto dim = static_cast<Eigen::Index>(psi.size());
  Eigen::MatrixXcd L = Eigen::MatrixXcd::Zero(dim, dim);
  const double inv_n = 1.0 / static_cast<double>(w.num_moves);
  for (std::size_t a = 0; a < w.size(); ++a) {
    const Bits x = w.support[a];
    const double px = pi[x];
    double stay = 0.0;
    for_each_move(n, m, mode, [&](Bits mask) {
      const Bits y = x ^ mask;
      const double py = pi[y];
      stay += px / (px + py);
      if (py > 0.0) L(x, y) = inv_n * psi[x] * std::conj(psi[y]) / (px + py);
    });
    L(x, x) = inv_n * stay;
  }
  return L;
}

Json SpectralReport::to_json(bool with_eigenvalues) const {
  Json j = {{"gap", gap},
            {"tau", degenerate ? Json(nullptr) : Json(tau)},
            {"degeneracy", degeneracy},
            {"degenerate", degenerate},
            {"tau_prime", tau_prime ? Json(*tau_prime) : Json(nullptr)},
            {"support_size", support_size},
            {"lambda0", eigenvalues.empty() ? 0.0 : eigenvalues.front()}};
  if (with_eigenvalues) j["eigenvalues"] = eigenvalues;
  return j;
}

SpectralReport spectral_report(const WalkSpec& w) {
  SpectralReport rep;
  rep.support_size = w.size();
  if (w.size() == 1) {
    rep.eigenvalues = {1.0};
    rep.gap = 1.0;
    rep.tau = 1.0;
    return rep;
  }
  const Eigen::MatrixXd m = symmetric_walk_matrix(w);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw Error(ErrorKind::construction_failed, "eigensolver did not converge");
  const auto& ev = es.eigenvalues();
  rep.eigenvalues.assign(ev.data(), ev.data() + ev.size());
  std::reverse(rep.eigenvalues.begin(), rep.eigenvalues.end());
  const double top = rep.eigenvalues[0];
  rep.gap = top - rep.eigenvalues[1];
  int deg = 1;
  while (deg < static_cast<int>(rep.eigenvalues.size()) && top - rep.eigenvalues[deg] < kDegeneracyTolerance) ++deg;
  rep.degeneracy = deg;
  if (deg < static_cast<int>(rep.eigenvalues.size())) rep.tau_prime = 1.0 / (top - rep.eigenvalues[deg]);
  if (rep.gap < kDegeneracyTolerance) {
    rep.degenerate = true;
    rep.tau = std::numeric_limits<double>::infinity();
  } else {
    rep.tau = 1.0 / rep.gap;
  }
  return rep;
}

// ---- MCMC

McmcChain::McmcChain(const QueryModel& model, int m, WalkMode mode) : model_(&model), m_(m), mode_(mode) {
  if (m < 1 || m > model.num_qubits()) throw Error(ErrorKind::invalid_level, "walk level must lie in [1, n]");
}

Bits McmcChain::step(Bits x, RandomSource& rng) const {
  const int n = model_->num_qubits();
  const auto move = mode_ == WalkMode::up_to ? sample_subset(n, m_, rng) : sample_subset_exact(n, m_, rng);
  const Bits y = x ^ move.mask();
  const double px = std::norm(model_->amplitude(x));
  const double py = std::norm(model_->amplitude(y));
  const double total = px + py;
  // From a zero-weight vertex every proposal is taken, so the chain drifts onto the support.
  const double accept = total > 0.0 ? py / total : 1.0;
  return rng.uniform() < accept ? y : x;
}

Bits McmcChain::run(Bits start, std::uint64_t steps, RandomSource& rng) const {
  Bits x = start;
  for (std::uint64_t s = 0; s < steps; ++s) x = step(x, rng);
  return x;
}

Bits mcmc_sample(const QueryModel& model, int m, Bits start, std::uint64_t steps, RandomSource& rng) {
  return McmcChain(model, m).run(start, steps, rng);
}

Sampler mcmc_sampler(ModelPtr model, int m, std::uint64_t steps) {
  auto chain = std::make_shared<McmcChain>(*model, m);
  const Bits mask = low_mask(model->num_qubits());
  return [model, chain, steps, mask](RandomSource& rng) { return chain->run(rng() & mask, steps, rng); };
}

PorterThomas porter_thomas(int n, RandomSource& rng) {
  if (n < 1 || n > 20) throw Error(ErrorKind::too_large, "materialized Porter-Thomas weights need n <= 20");
  PorterThomas pt;
  pt.z.resize(std::size_t{1} << n);
  double total = 0.0;
  for (auto& z : pt.z) {
    z = rng.exponential();
    total += z;
  }
  pt.pi.resize(pt.z.size());
  for (std::size_t x = 0; x < pt.z.size(); ++x) pt.pi[x] = pt.z[x] / total;
  return pt;
}

}  // namespace shadowcert
