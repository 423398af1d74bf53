#include "shadowcert/escape.hpp"

#include <algorithm>
#include <cmath>

#include "shadowcert/error.hpp"

namespace shadowcert {

void EscapeParams::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw Error(ErrorKind::invalid_config, "alpha must lie in (0, 1]");
  if (!(c_lower > 0.0 && c_lower < 1.0 && c_upper > 1.0)) {
    throw Error(ErrorKind::invalid_config, "need 0 < c_lower < 1 < c_upper");
  }
  if (c_upper_prime < 0.0 || nu < 0.0) throw Error(ErrorKind::invalid_config, "c_upper_prime and nu must be >= 0");
}

EscapeParams EscapeParams::resolved(int n) const {
  validate();
  EscapeParams p = *this;
  if (p.c_upper_prime == 0.0) p.c_upper_prime = std::max(c_upper, double(n));
  if (p.nu == 0.0) p.nu = std::ldexp(1.0, -n);
  return p;
}

Json EscapeParams::to_json() const {
  return {{"alpha", alpha}, {"c_upper_prime", c_upper_prime}, {"c_upper", c_upper}, {"c_lower", c_lower}, {"nu", nu}};
}

std::string_view to_string(EscapeCondition c) {
  switch (c) {
    case EscapeCondition::none: return "none";
    case EscapeCondition::weight: return "weight";
    case EscapeCondition::good_neighbors: return "good_neighbors";
    case EscapeCondition::good_paths: return "good_paths";
  }
  return "?";
}

namespace {

double resolve_norm(const QueryModel& model, std::optional<double> norm) {
  if (!norm) norm = model.norm_hint();
  if (!norm || !(*norm > 0.0)) throw Error(ErrorKind::needs_normalization, "escape checks need the normalization");
  return *norm;
}

// Candidate difference sets D (1 <= |D| <= 3) such that x = s ^ u can be an
// internal vertex of some path s -> s ^ D: u minus at most one bit lies in D.
std::vector<Bits> difference_sets(Bits u, int n) {
  std::vector<Bits> bases{u};
  for (Bits r = u; r; r &= r - 1) bases.push_back(u & ~(r & -r));
  std::vector<Bits> out;
  for (Bits a : bases) {
    const int k = popcount(a);
    if (k > 3) continue;
    for (int extra = 0; extra + k <= 3; ++extra) {
      for_each_mask_of_weight(n, extra, [&](Bits e) {
        if ((e & a) == 0 && (a | e) != 0) out.push_back(a | e);
      });
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

EscapeChecker::EscapeChecker(const QueryModel& model, EscapeParams params, std::optional<double> norm)
    : model_(model),
      params_(params.resolved(model.num_qubits())),
      norm_(resolve_norm(model, norm)),
      n_(model.num_qubits()),
      required_(static_cast<int>(std::ceil(params_.alpha * n_ - 1e-12))) {}

double EscapeChecker::pi(Bits x) const { return std::norm(model_.amplitude(x)) / norm_; }

bool EscapeChecker::good(Bits x) const {
  const double z = std::ldexp(pi(x), n_);
  return z >= params_.c_lower && z <= params_.c_upper;
}

EscapeCheck EscapeChecker::check(Bits x) const {
  if (std::ldexp(pi(x), n_) > params_.c_upper_prime) return {EscapeCondition::weight};

  for (int i = 0; i < n_; ++i) {
    const Bits v = flip(x, i);
    int count = 0;
    for (int j = 0; j < n_; ++j) count += good(flip(v, j));
    if (count < required_) return {EscapeCondition::good_neighbors};
  }

  // Internal vertices of a path of length <= 5 sit within distance 4 of its start.
  for (int r = 1; r <= 4; ++r) {
    bool failed = false;
    for_each_mask_of_weight(n_, r, [&](Bits u) {
      if (failed) return;
      const Bits s = x ^ u;
      if (!good(s)) return;
      for (Bits d : difference_sets(u, n_)) {
        const Bits t = s ^ d;
        if (t == x || !good(t)) continue;
        bool through_x = false;
        int all_good = 0;
        for (int i = 0; i < n_; ++i) {
          const auto path = hypercube_path(s, t, i, n_);
          bool ok = true;
          for (std::size_t k = 1; k + 1 < path.size(); ++k) {
            through_x |= path[k] == x;
            if (ok && !good(path[k])) ok = false;
          }
          all_good += ok;
        }
        if (through_x && all_good < required_) {
          failed = true;
          return;
        }
      }
    });
    if (failed) return {EscapeCondition::good_paths};
  }
  return {};
}

std::vector<EscapeCheck> check_all_escape(const QueryModel& model, const EscapeParams& params,
                                          std::optional<double> norm) {
  const int n = model.num_qubits();
  if (n > 16) throw Error(ErrorKind::too_large, "global escape pass needs n <= 16");
  EscapeChecker checker(model, params, norm);
  const std::size_t dim = std::size_t{1} << n;
  const auto& p = checker.params();
  const int req = checker.required();

  std::vector<char> good(dim);
  std::vector<EscapeCheck> out(dim);
  for (Bits x = 0; x < dim; ++x) {
    const double z = std::ldexp(checker.pi(x), n);
    good[x] = z >= p.c_lower && z <= p.c_upper;
    if (z > p.c_upper_prime) out[x].violated = EscapeCondition::weight;
  }
  auto mark = [&](Bits x, EscapeCondition c) {
    if (out[x].violated == EscapeCondition::none || c < out[x].violated) out[x].violated = c;
  };

  for (Bits v = 0; v < dim; ++v) {
    int count = 0;
    for (int j = 0; j < n; ++j) count += good[flip(v, j)];
    if (count < req) {
      for (int j = 0; j < n; ++j) mark(flip(v, j), EscapeCondition::good_neighbors);
    }
  }

  std::vector<std::vector<Bits>> paths(n);
  for (Bits s = 0; s < dim; ++s) {
    if (!good[s]) continue;
    for (int w = 1; w <= 3; ++w) {
      for_each_mask_of_weight(n, w, [&](Bits d) {
        const Bits t = s ^ d;
        if (!good[t]) return;
        int all_good = 0;
        for (int i = 0; i < n; ++i) {
          paths[i] = hypercube_path(s, t, i, n);
          bool ok = true;
          for (std::size_t k = 1; k + 1 < paths[i].size(); ++k) ok = ok && good[paths[i][k]];
          all_good += ok;
        }
        if (all_good >= req) return;
        for (const auto& path : paths) {
          for (std::size_t k = 1; k + 1 < path.size(); ++k) mark(path[k], EscapeCondition::good_paths);
        }
      });
    }
  }
  return out;
}

EnforcedModel::EnforcedModel(ModelPtr base, EscapeParams params, bool precompute, std::optional<double> norm)
    : base_(std::move(base)), checker_(*base_, params, norm) {
  if (precompute) table_ = check_all_escape(*base_, params, checker_.norm());
}

bool EnforcedModel::passes(Bits x) const {
  return table_.empty() ? checker_.check(x).pass() : table_[x].pass();
}

Amplitude EnforcedModel::amplitude(Bits x) const {
  const Amplitude a = base_->amplitude(x);
  if (passes(x)) return a;
  const double mag = std::sqrt(checker_.params().nu * checker_.norm());
  return a == Amplitude(0.0) ? Amplitude(mag) : std::polar(mag, std::arg(a));
}

Json EnforcedModel::descriptor() const {
  return {{"family", "enforced"}, {"base", base_->descriptor()}, {"params", checker_.params().to_json()},
          {"norm", checker_.norm()}};
}

}  // namespace shadowcert
