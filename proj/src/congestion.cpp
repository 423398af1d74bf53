#include "shadowcert/congestion.hpp"

#include <ostream>

#include "shadowcert/error.hpp"

namespace shadowcert {

CanonicalPaths::CanonicalPaths(std::vector<double> z, int n, RandomSource* rng)
    : n_(n), z_(std::move(z)), rng_(rng) {
  if (n < 1 || n > 12) throw Error(ErrorKind::too_large, "canonical paths need 1 <= n <= 12");
  const std::size_t dim = std::size_t{1} << n;
  if (z_.size() != dim) throw Error(ErrorKind::invalid_argument, "weight vector must have 2^n entries");
  bad_.resize(dim);
  anchor_.resize(dim);
  for (Bits x = 0; x < dim; ++x) {
    if (!(z_[x] >= 0.0)) throw Error(ErrorKind::invalid_argument, "weights must be nonnegative");
    bad_[x] = z_[x] <= threshold();
    bad_count_ += bad_[x];
  }
  std::vector<Bits> options;
  for (Bits x = 0; x < dim; ++x) {
    anchor_[x] = x;
    if (!bad_[x]) continue;
    options.clear();
    for (int i = 0; i < n; ++i) {
      if (!bad_[flip(x, i)]) options.push_back(flip(x, i));
    }
    if (options.empty()) throw Error(ErrorKind::construction_failed, "bad vertex without a good neighbor");
    anchor_[x] = rng_ ? options[rng_->below(options.size())] : options.front();
  }
}

std::vector<Bits> CanonicalPaths::path(Bits x, Bits y) const {
  std::vector<Bits> out;
  path(x, y, out);
  return out;
}

void CanonicalPaths::path(Bits x, Bits y, std::vector<Bits>& out) const {
  out.clear();
  out.push_back(x);
  const Bits a = anchor_[x];
  const Bits b = anchor_[y];
  if (a != x) out.push_back(a);
  if (a != b) {
    // Internally disjoint candidates, one per start bit; keep an all-good one.
    int chosen = -1;
    int valid = 0;
    for (int i = 0; i < n_; ++i) {
      const auto cand = hypercube_path(a, b, i, n_);
      bool ok = true;
      for (std::size_t k = 1; k + 1 < cand.size() && ok; ++k) ok = !bad_[cand[k]];
      if (!ok) continue;
      ++valid;
      if (!rng_) {
        chosen = i;
        break;
      }
      if (rng_->below(valid) == 0) chosen = i;  // reservoir pick
    }
    if (chosen < 0) throw Error(ErrorKind::construction_failed, "no all-good path between good vertices");
    const auto core = hypercube_path(a, b, chosen, n_);
    out.insert(out.end(), core.begin() + 1, core.end());
  }
  if (b != y) out.push_back(y);
}

CongestionResult congestion_bound(const std::vector<double>& z, int n, RandomSource* rng) {
  CanonicalPaths paths(z, n, rng);
  const std::size_t dim = std::size_t{1} << n;
  double total = 0.0;
  for (double v : z) total += v;
  if (!(total > 0.0)) throw Error(ErrorKind::empty_support, "weights sum to zero");
  std::vector<double> pi(dim);
  for (Bits x = 0; x < dim; ++x) pi[x] = z[x] / total;

  std::vector<double> load(dim * n, 0.0);
  CongestionResult res;
  res.bad_count = paths.bad_count();
  std::vector<Bits> buf;
  for (Bits x = 0; x < dim; ++x) {
    for (Bits y = 0; y < dim; ++y) {
      if (x == y) continue;
      paths.path(x, y, buf);
      const int len = static_cast<int>(buf.size()) - 1;
      res.max_path_length = std::max(res.max_path_length, len);
      const double w = pi[x] * pi[y] * len;
      for (int k = 0; k < len; ++k) {
        const int bit = std::countr_zero(buf[k] ^ buf[k + 1]);
        load[buf[k] * n + bit] += w;
      }
    }
  }
  for (Bits u = 0; u < dim; ++u) {
    for (int i = 0; i < n; ++i) {
      const double l = load[u * n + i];
      if (l == 0.0) continue;
      const Bits v = flip(u, i);
      EdgeLoad e{u, i, l, pi[u] * pi[v] / (n * (pi[u] + pi[v]))};
      if (res.edges.empty() || e.congestion() > res.rho) {
        res.rho = e.congestion();
        res.worst = e;
      }
      res.edges.push_back(e);
    }
  }
  return res;
}

void write_edge_loads_csv(std::ostream& out, const CongestionResult& result, int n) {
  out << "edge_id,from,to,load,capacity,congestion\n";
  out.precision(17);
  for (const auto& e : result.edges) {
    out << e.id(n) << ',' << BitString(e.from, n).to_string() << ',' << BitString(flip(e.from, e.bit), n).to_string()
        << ',' << e.load << ',' << e.capacity << ',' << e.congestion() << '\n';
  }
}

}  // namespace shadowcert
