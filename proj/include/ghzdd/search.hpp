#ifndef GHZDD_SEARCH_HPP
#define GHZDD_SEARCH_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "ghzdd/core.hpp"
#include "ghzdd/metrics.hpp"
#include "ghzdd/parallel.hpp"
#include "ghzdd/spin_model.hpp"

namespace ghzdd {

enum class Scheme { sequential, multispin };

inline std::string scheme_name(Scheme s) { return s == Scheme::sequential ? "sequential" : "multispin"; }

inline Scheme parse_scheme(const std::string& s) {
  if (s == "sequential") return Scheme::sequential;
  if (s == "multispin") return Scheme::multispin;
  throw config_error("unknown scheme '" + s + "' (expected sequential or multispin)");
}

/// Tolerances are in scaled units (fractions of the maximal one-tangle 2/9).
struct SearchTolerances {
  int ghz_size = 3;
  double gate_time_tol = 2000 * microsecond;
  double gate_error_tol = 0.1;
  double target_one_tangle_tol = 0.99;
  double unwanted_one_tangle_tol = 0.1;
  int k_max = 8;
  double t_window = 0.25 * microsecond;
  double t_step = 0.01 * microsecond;
  int n_truncation = 30;

  void validate() const {
    require(ghz_size >= 3, "ghz_size must be >= 3");
    require(gate_time_tol > 0.0, "gate_time_tol must be positive");
    auto unit_interval = [](double v, const char* name) {
      require(v > 0.0 && v <= 1.0, std::string(name) + " must lie in (0,1]");
    };
    unit_interval(gate_error_tol, "gate_error_tol");
    unit_interval(target_one_tangle_tol, "target_one_tangle_tol");
    unit_interval(unwanted_one_tangle_tol, "unwanted_one_tangle_tol");
    require(k_max >= 1, "k_max must be >= 1");
    require(t_window > 0.0 && t_step > 0.0, "t_window and t_step must be positive");
    require(t_step <= t_window, "t_step must not exceed t_window");
    require(n_truncation >= 1, "n_truncation must be >= 1");
  }
};

namespace detail {
struct ToleranceRow {
  int M;
  double time_us, error, target, unwanted;
};
inline constexpr std::array<ToleranceRow, 8> sequential_rows{{{3, 2000, 0.1, 0.99, 0.1},
                                                              {4, 2000, 0.1, 0.99, 0.1},
                                                              {5, 2300, 0.1, 0.9, 0.1},
                                                              {6, 2500, 0.11, 0.9, 0.12},
                                                              {7, 3300, 0.12, 0.9, 0.12},
                                                              {8, 3700, 0.13, 0.9, 0.12},
                                                              {9, 4000, 0.13, 0.85, 0.15},
                                                              {10, 4000, 0.19, 0.87, 0.22}}};
inline constexpr std::array<ToleranceRow, 7> multispin_rows{{{3, 2000, 0.1, 0.9, 0.1},
                                                             {4, 2000, 0.1, 0.9, 0.1},
                                                             {5, 2300, 0.1, 0.84, 0.1},
                                                             {6, 2500, 0.13, 0.88, 0.12},
                                                             {7, 2800, 0.13, 0.85, 0.15},
                                                             {8, 3000, 0.15, 0.85, 0.15},
                                                             {9, 3000, 0.15, 0.82, 0.15}}};

template <std::size_t K>
SearchTolerances from_rows(const std::array<ToleranceRow, K>& rows, int M, const char* table) {
  for (const auto& r : rows) {
    if (r.M != M) continue;
    SearchTolerances t;
    t.ghz_size = M;
    t.gate_time_tol = r.time_us * microsecond;
    t.gate_error_tol = r.error;
    t.target_one_tangle_tol = r.target;
    t.unwanted_one_tangle_tol = r.unwanted;
    return t;
  }
  throw config_error(std::string("no ") + table + " tolerance row for GHZ size " + std::to_string(M));
}
}  // namespace detail

inline SearchTolerances sequential_tolerances(int M) {
  return detail::from_rows(detail::sequential_rows, M, "sequential");
}
inline SearchTolerances multispin_tolerances(int M) {
  return detail::from_rows(detail::multispin_rows, M, "multi-spin");
}

/// Limits that keep the combinatorics bounded. Zero caps mean "unlimited".
struct SearchOptions {
  std::size_t candidates_per_spin = 24;
  std::size_t exact_subset_max = 5;
  std::size_t subset_beam = 500;
  std::size_t exact_combination_limit = 25000;
  std::size_t combination_beam = 128;
  unsigned threads = 1;
};

struct Candidate {
  std::size_t spin = 0;
  int k = 0;
  double t = 0.0;
  long N = 0;
  double one_tangle = 0.0;  // scaled, single block
  double duration() const { return static_cast<double>(N) * t; }
};

struct Case {
  Scheme scheme = Scheme::sequential;
  std::vector<std::size_t> spins;
  std::vector<std::string> spin_labels;
  SequencePlan plan;
  MetricsReport metrics;
  double rank_score = 0.0;
};

namespace detail {

// Half-angles and axis overlap of a unit pair; V_j^N has half-angle N a_j about a fixed axis.
struct UnitQuat {
  double a = 0.0, b = 0.0, dot = 1.0;
};

inline UnitQuat unit_quat(const Mat2& v0, const Mat2& v1) {
  const Quat p = to_quat(v0), q = to_quat(v1);
  const double sp = std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z);
  const double sq = std::sqrt(q.x * q.x + q.y * q.y + q.z * q.z);
  UnitQuat u;
  u.a = std::atan2(sp, p.w);
  u.b = std::atan2(sq, q.w);
  if (sp > 0.0 && sq > 0.0) u.dot = (p.x * q.x + p.y * q.y + p.z * q.z) / (sp * sq);
  return u;
}

inline double g1_power(const UnitQuat& u, long N) {
  const double na = static_cast<double>(N) * u.a, nb = static_cast<double>(N) * u.b;
  const double c = std::cos(na) * std::cos(nb) + u.dot * std::sin(na) * std::sin(nb);
  return std::min(1.0, c * c);
}

inline std::vector<UnitQuat> register_unit_quats(const Register& reg, const SequenceUnit& unit, double t) {
  std::vector<UnitQuat> out;
  out.reserve(reg.size());
  for (const auto& s : reg.spins) {
    const auto [v0, v1] = unit_propagators(s, reg, unit, t);
    out.push_back(unit_quat(v0, v1));
  }
  return out;
}

inline long max_iterations(double t, double T_max) {
  long n = static_cast<long>(std::floor(T_max / t));
  while (n > 0 && static_cast<double>(n) * t > T_max) --n;
  return n;
}

// First `limit` local maxima of ot[1..n] (index 0 unused).
inline std::vector<long> first_maxima(const std::vector<double>& ot, long n, int limit) {
  std::vector<long> out;
  for (long N = 1; N <= n && static_cast<int>(out.size()) < limit; ++N) {
    const bool left = N == 1 || ot[N] > ot[N - 1];
    const bool right = N == n || ot[N] >= ot[N + 1];
    if (left && right) out.push_back(N);
  }
  return out;
}

using BranchPair = std::pair<Mat2, Mat2>;

struct ComboScore {
  bool valid = false;
  double ep = 0.0;
  double T = 0.0;
  std::vector<std::size_t> choice;
};

inline bool better(const ComboScore& x, const ComboScore& best) {
  if (!x.valid) return false;
  if (!best.valid) return true;
  if (x.ep != best.ep) return x.ep > best.ep;
  return x.T < best.T;
}

}  // namespace detail

/// Per-spin single-block candidates: one-tangle maxima in N at each grid time, kept when
/// the spin reaches the target tolerance while every other spin stays below the unwanted one.
inline std::vector<std::vector<Candidate>> per_spin_candidates(const Register& reg, const SequenceUnit& unit,
                                                               const SearchTolerances& tol,
                                                               unsigned threads = 1) {
  reg.validate();
  unit.validate();
  tol.validate();
  std::vector<std::vector<Candidate>> out(reg.size());
  parallel_for(reg.size(), threads, [&](std::size_t s) {
    const auto res = scan_resonances(reg.spins[s], reg, unit, tol.k_max, tol.t_window, tol.t_step);
    for (const auto& r : res) {
      for (double t : r.grid) {
        const long n_max = detail::max_iterations(t, tol.gate_time_tol);
        if (n_max < 1) continue;
        const auto uq = detail::register_unit_quats(reg, unit, t);
        std::vector<double> ot(n_max + 2, 0.0);
        for (long N = 1; N <= n_max; ++N) ot[N] = 1.0 - detail::g1_power(uq[s], N);
        for (long N : detail::first_maxima(ot, n_max, tol.n_truncation)) {
          if (ot[N] < tol.target_one_tangle_tol) continue;
          bool quiet = true;
          for (std::size_t l = 0; l < reg.size() && quiet; ++l)
            if (l != s && 1.0 - detail::g1_power(uq[l], N) > tol.unwanted_one_tangle_tol) quiet = false;
          if (quiet) out[s].push_back({s, r.k, t, N, ot[N]});
        }
      }
    }
  });
  return out;
}

/// Caps a candidate list: half the slots go to the shortest blocks, the rest to the
/// highest one-tangles. Survivors keep their original order.
inline std::vector<Candidate> shortlist(const std::vector<Candidate>& c, std::size_t cap) {
  if (cap == 0 || c.size() <= cap) return c;
  std::vector<std::size_t> idx(c.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<char> keep(c.size(), 0);
  auto by_time = idx;
  std::stable_sort(by_time.begin(), by_time.end(), [&](std::size_t a, std::size_t b) {
    if (c[a].duration() != c[b].duration()) return c[a].duration() < c[b].duration();
    return c[a].one_tangle > c[b].one_tangle;
  });
  const std::size_t n_time = (cap + 1) / 2;
  for (std::size_t i = 0; i < n_time; ++i) keep[by_time[i]] = 1;
  auto by_ot = idx;
  std::stable_sort(by_ot.begin(), by_ot.end(), [&](std::size_t a, std::size_t b) {
    if (c[a].one_tangle != c[b].one_tangle) return c[a].one_tangle > c[b].one_tangle;
    return c[a].duration() < c[b].duration();
  });
  std::size_t kept = n_time;
  for (std::size_t i = 0; i < by_ot.size() && kept < cap; ++i)
    if (!keep[by_ot[i]]) {
      keep[by_ot[i]] = 1;
      ++kept;
    }
  std::vector<Candidate> out;
  for (std::size_t i = 0; i < c.size(); ++i)
    if (keep[i]) out.push_back(c[i]);
  return out;
}

inline bool case_satisfies(const MetricsReport& m, const std::vector<std::size_t>& targets,
                           const SearchTolerances& tol, double slack = 0.0) {
  if (m.total_time > tol.gate_time_tol * (1.0 + slack)) return false;
  if (m.gate_error > tol.gate_error_tol + slack) return false;
  std::vector<char> is_target(m.g1.size(), 0);
  for (auto i : targets) is_target[i] = 1;
  for (std::size_t l = 0; l < m.g1.size(); ++l) {
    const double ot = m.one_tangles_scaled[l];
    if (is_target[l] ? ot < tol.target_one_tangle_tol - slack : ot > tol.unwanted_one_tangle_tol + slack)
      return false;
  }
  return true;
}

inline void sort_cases(std::vector<Case>& cases) {
  std::stable_sort(cases.begin(), cases.end(), [](const Case& a, const Case& b) {
    if (a.metrics.ep_scaled != b.metrics.ep_scaled) return a.metrics.ep_scaled > b.metrics.ep_scaled;
    if (a.metrics.total_time != b.metrics.total_time) return a.metrics.total_time < b.metrics.total_time;
    return a.spin_labels < b.spin_labels;
  });
}

namespace detail {

inline Case make_case(const Register& reg, Scheme scheme, const std::vector<std::size_t>& spins,
                      SequencePlan plan, const SearchTolerances& tol) {
  Case c;
  c.scheme = scheme;
  c.spins = spins;
  for (auto s : spins) c.spin_labels.push_back(reg.spins[s].label);
  c.plan = std::move(plan);
  c.metrics = evaluate_metrics(reg, c.plan, spins);
  ensure(case_satisfies(c.metrics, spins, tol, 1e-9), "emitted case violates its tolerances");
  return c;
}

// Exhaustive or beam search over one block per subset spin, blocks in subset order.
class CombinationSearch {
 public:
  CombinationSearch(const Register& reg, const SearchTolerances& tol, const SearchOptions& opt,
                    const std::vector<std::vector<Candidate>>& cands,
                    const std::vector<std::vector<std::vector<BranchPair>>>& blocks)
      : reg_(reg), tol_(tol), opt_(opt), cands_(cands), blocks_(blocks) {}

  ComboScore run(const std::vector<std::size_t>& subset) const {
    double space = 1.0;
    for (auto s : subset) space *= static_cast<double>(cands_[s].size());
    if (space == 0.0) return {};
    const bool exact = opt_.exact_combination_limit == 0 || space <= static_cast<double>(opt_.exact_combination_limit);
    return exact ? exhaustive(subset) : beam(subset);
  }

 private:
  ComboScore score_leaf(const std::vector<std::size_t>& subset, const std::vector<std::size_t>& choice,
                        const std::vector<BranchPair>& w, double T) const {
    ComboScore r;
    if (T > tol_.gate_time_tol) return r;
    const int M = static_cast<int>(subset.size()) + 1;
    std::vector<char> is_target(reg_.size(), 0);
    double prod = 1.0;
    for (auto s : subset) {
      is_target[s] = 1;
      const double ot = 1.0 - std::min(1.0, g1_of(w[s].first, w[s].second));
      if (ot < tol_.target_one_tangle_tol) return r;
      prod *= ot;
    }
    cplx g = 1.0;
    for (std::size_t l = 0; l < reg_.size(); ++l) {
      if (is_target[l]) continue;
      const double ot = 1.0 - std::min(1.0, g1_of(w[l].first, w[l].second));
      if (ot > tol_.unwanted_one_tangle_tol) return r;
      g *= (w[l].first.adjoint() * w[l].second)(0, 0);
    }
    const double d = std::ldexp(1.0, M);
    if (d * (1.0 - g.real()) / (2.0 * (d + 1.0)) > tol_.gate_error_tol) return r;
    r.valid = true;
    r.ep = max_entangling_power(M) * prod;
    r.T = T;
    r.choice = choice;
    return r;
  }

  std::vector<BranchPair> extend(const std::vector<BranchPair>& prefix, std::size_t spin, std::size_t c) const {
    std::vector<BranchPair> w(prefix.size());
    const auto& b = blocks_[spin][c];
    for (std::size_t l = 0; l < prefix.size(); ++l)
      w[l] = {b[l].first * prefix[l].first, b[l].second * prefix[l].second};
    return w;
  }

  ComboScore exhaustive(const std::vector<std::size_t>& subset) const {
    ComboScore best;
    std::vector<std::size_t> choice(subset.size());
    const std::vector<BranchPair> id(reg_.size(), {Mat2::Identity(), Mat2::Identity()});
    auto rec = [&](auto&& self, std::size_t depth, const std::vector<BranchPair>& prefix, double T) -> void {
      if (depth == subset.size()) {
        auto r = score_leaf(subset, choice, prefix, T);
        if (better(r, best)) best = std::move(r);
        return;
      }
      const auto s = subset[depth];
      for (std::size_t c = 0; c < cands_[s].size(); ++c) {
        const double T2 = T + cands_[s][c].duration();
        if (T2 > tol_.gate_time_tol) continue;
        choice[depth] = c;
        self(self, depth + 1, extend(prefix, s, c), T2);
      }
    };
    rec(rec, 0, id, 0.0);
    return best;
  }

  struct Partial {
    std::vector<std::size_t> choice;
    std::vector<BranchPair> w;
    double T = 0.0;
    double score = 0.0;
  };

  ComboScore beam(const std::vector<std::size_t>& subset) const {
    std::vector<Partial> level{{{}, std::vector<BranchPair>(reg_.size(), {Mat2::Identity(), Mat2::Identity()}), 0.0, 1.0}};
    for (std::size_t depth = 0; depth < subset.size(); ++depth) {
      const auto s = subset[depth];
      std::vector<Partial> next;
      for (const auto& p : level) {
        for (std::size_t c = 0; c < cands_[s].size(); ++c) {
          const double T2 = p.T + cands_[s][c].duration();
          if (T2 > tol_.gate_time_tol) continue;
          Partial q;
          q.choice = p.choice;
          q.choice.push_back(c);
          q.w = extend(p.w, s, c);
          q.T = T2;
          q.score = 1.0;
          for (std::size_t i = 0; i <= depth; ++i) {
            const auto& w = q.w[subset[i]];
            q.score *= 1.0 - std::min(1.0, g1_of(w.first, w.second));
          }
          next.push_back(std::move(q));
        }
      }
      std::stable_sort(next.begin(), next.end(), [](const Partial& a, const Partial& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.T != b.T) return a.T < b.T;
        return a.choice < b.choice;
      });
      if (next.size() > opt_.combination_beam && opt_.combination_beam > 0) next.resize(opt_.combination_beam);
      level = std::move(next);
    }
    ComboScore best;
    for (const auto& p : level) {
      auto r = score_leaf(subset, p.choice, p.w, p.T);
      if (better(r, best)) best = std::move(r);
    }
    return best;
  }

  const Register& reg_;
  const SearchTolerances& tol_;
  const SearchOptions& opt_;
  const std::vector<std::vector<Candidate>>& cands_;
  const std::vector<std::vector<std::vector<BranchPair>>>& blocks_;
};

inline void for_each_subset(std::size_t n, std::size_t k, const std::function<void(const std::vector<std::size_t>&)>& fn) {
  if (k > n) return;
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  for (;;) {
    fn(idx);
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

}  // namespace detail

/// Candidate subsets of M-1 spins (register order). Exact below the cap, otherwise a
/// beam over partial subsets scored by the product of each spin's best single-block one-tangle.
inline std::vector<std::vector<std::size_t>> candidate_subsets(const std::vector<std::vector<Candidate>>& cands,
                                                               std::size_t k, const SearchOptions& opt) {
  std::vector<std::size_t> eligible;
  std::vector<double> best_ot(cands.size(), 0.0);
  for (std::size_t s = 0; s < cands.size(); ++s) {
    if (cands[s].empty()) continue;
    eligible.push_back(s);
    for (const auto& c : cands[s]) best_ot[s] = std::max(best_ot[s], c.one_tangle);
  }
  std::vector<std::vector<std::size_t>> out;
  if (eligible.size() < k) return out;
  if (k <= opt.exact_subset_max) {
    detail::for_each_subset(eligible.size(), k, [&](const std::vector<std::size_t>& idx) {
      std::vector<std::size_t> sub;
      for (auto i : idx) sub.push_back(eligible[i]);
      out.push_back(std::move(sub));
    });
    return out;
  }
  struct Entry {
    std::vector<std::size_t> pos;  // positions into eligible
    double score;
  };
  std::vector<Entry> level{{{}, 1.0}};
  for (std::size_t depth = 0; depth < k; ++depth) {
    std::vector<Entry> next;
    for (const auto& e : level) {
      const std::size_t start = e.pos.empty() ? 0 : e.pos.back() + 1;
      for (std::size_t p = start; p + (k - depth) <= eligible.size(); ++p) {
        Entry f = e;
        f.pos.push_back(p);
        f.score *= best_ot[eligible[p]];
        next.push_back(std::move(f));
      }
    }
    std::stable_sort(next.begin(), next.end(), [](const Entry& a, const Entry& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.pos < b.pos;
    });
    if (opt.subset_beam > 0 && next.size() > opt.subset_beam) next.resize(opt.subset_beam);
    level = std::move(next);
  }
  for (const auto& e : level) {
    std::vector<std::size_t> sub;
    for (auto p : e.pos) sub.push_back(eligible[p]);
    out.push_back(std::move(sub));
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Sequential scheme: one resonant block per target spin, composed in register order;
/// per subset the admissible combination with the largest M-way entangling power wins.
inline std::vector<Case> search_sequential(const Register& reg, const SequenceUnit& unit, const SearchTolerances& tol,
                                           const SearchOptions& opt = {}) {
  tol.validate();
  const std::size_t k = static_cast<std::size_t>(tol.ghz_size - 1);
  if (reg.size() < k) return {};
  auto raw = per_spin_candidates(reg, unit, tol, opt.threads);
  std::vector<std::vector<Candidate>> cands(raw.size());
  for (std::size_t s = 0; s < raw.size(); ++s) cands[s] = shortlist(raw[s], opt.candidates_per_spin);

  std::vector<std::vector<std::vector<detail::BranchPair>>> blocks(reg.size());
  parallel_for(reg.size(), opt.threads, [&](std::size_t s) {
    for (const auto& c : cands[s]) {
      SequenceBlock b{unit, c.t, c.N};
      std::vector<detail::BranchPair> per;
      for (const auto& spin : reg.spins) per.push_back(block_propagators(spin, reg, b));
      blocks[s].push_back(std::move(per));
    }
  });

  const auto subsets = candidate_subsets(cands, k, opt);
  const detail::CombinationSearch search(reg, tol, opt, cands, blocks);
  std::vector<detail::ComboScore> best(subsets.size());
  parallel_for(subsets.size(), opt.threads, [&](std::size_t i) { best[i] = search.run(subsets[i]); });

  std::vector<Case> cases;
  for (std::size_t i = 0; i < subsets.size(); ++i) {
    if (!best[i].valid) continue;
    SequencePlan plan;
    for (std::size_t d = 0; d < subsets[i].size(); ++d) {
      const auto& c = cands[subsets[i][d]][best[i].choice[d]];
      plan.blocks.push_back({unit, c.t, c.N});
    }
    cases.push_back(detail::make_case(reg, Scheme::sequential, subsets[i], std::move(plan), tol));
  }
  sort_cases(cases);
  return cases;
}

/// Multi-spin scheme: a single block whose (t, N) lifts exactly M-1 one-tangles above the
/// target tolerance and keeps all others below the unwanted one.
inline std::vector<Case> search_multispin(const Register& reg, const SequenceUnit& unit, const SearchTolerances& tol,
                                          const SearchOptions& opt = {}) {
  reg.validate();
  unit.validate();
  tol.validate();
  const std::size_t k = static_cast<std::size_t>(tol.ghz_size - 1);
  if (reg.size() < k) return {};
  const int M = tol.ghz_size;
  const double d = std::ldexp(1.0, M);

  struct Hit {
    double ep = 0.0, T = 0.0, t = 0.0;
    long N = 0;
  };
  using HitMap = std::map<std::vector<std::size_t>, Hit>;
  auto offer = [](HitMap& m, const std::vector<std::size_t>& key, const Hit& h) {
    auto it = m.find(key);
    if (it == m.end()) {
      m.emplace(key, h);
    } else if (h.ep > it->second.ep || (h.ep == it->second.ep && h.T < it->second.T)) {
      it->second = h;
    }
  };

  std::vector<HitMap> per_seed(reg.size());
  parallel_for(reg.size(), opt.threads, [&](std::size_t seed) {
    const auto res = scan_resonances(reg.spins[seed], reg, unit, tol.k_max, tol.t_window, tol.t_step);
    for (const auto& r : res) {
      for (double t : r.grid) {
        const long n_max = detail::max_iterations(t, tol.gate_time_tol);
        if (n_max < 1) continue;
        const auto uq = detail::register_unit_quats(reg, unit, t);
        std::vector<double> ot(reg.size());
        for (long N = 1; N <= n_max; ++N) {
          std::vector<std::size_t> targets;
          bool ok = true;
          for (std::size_t l = 0; l < reg.size() && ok; ++l) {
            ot[l] = 1.0 - detail::g1_power(uq[l], N);
            if (ot[l] >= tol.target_one_tangle_tol) {
              targets.push_back(l);
              if (targets.size() > k) ok = false;
            } else if (ot[l] > tol.unwanted_one_tangle_tol) {
              ok = false;
            }
          }
          if (!ok || targets.size() != k) continue;
          cplx g = 1.0;
          std::size_t ti = 0;
          for (std::size_t l = 0; l < reg.size(); ++l) {
            if (ti < targets.size() && targets[ti] == l) {
              ++ti;
              continue;
            }
            const auto [v0, v1] = unit_propagators(reg.spins[l], reg, unit, t);
            g *= (su2_power(v0, N).adjoint() * su2_power(v1, N))(0, 0);
          }
          if (d * (1.0 - g.real()) / (2.0 * (d + 1.0)) > tol.gate_error_tol) continue;
          double prod = 1.0;
          for (auto s : targets) prod *= ot[s];
          offer(per_seed[seed], targets, {max_entangling_power(M) * prod, static_cast<double>(N) * t, t, N});
        }
      }
    }
  });

  HitMap merged;
  for (const auto& m : per_seed)
    for (const auto& [key, h] : m) offer(merged, key, h);

  std::vector<Case> cases;
  for (const auto& [key, h] : merged) {
    SequencePlan plan;
    plan.blocks.push_back({unit, h.t, h.N});
    cases.push_back(detail::make_case(reg, Scheme::multispin, key, std::move(plan), tol));
  }
  sort_cases(cases);
  return cases;
}

struct RankWeights {
  double ep = 1.0, time = 0.0, error = 0.0;
  void validate() const {
    require(ep >= 0.0 && time >= 0.0 && error >= 0.0, "rank weights must be non-negative");
    require(std::abs(ep + time + error - 1.0) < 1e-9, "rank weights must sum to 1");
  }
};

/// score = w1 ep_scaled + w2 (1 - T/T_max) + w3 (1 - error/delta_E), descending; ties by labels,
/// then insertion order.
inline std::vector<Case> rank_cases(std::vector<Case> cases, const RankWeights& w, const SearchTolerances& tol) {
  w.validate();
  for (auto& c : cases)
    c.rank_score = w.ep * c.metrics.ep_scaled + w.time * (1.0 - c.metrics.total_time / tol.gate_time_tol) +
                   w.error * (1.0 - c.metrics.gate_error / tol.gate_error_tol);
  std::stable_sort(cases.begin(), cases.end(), [](const Case& a, const Case& b) {
    if (a.rank_score != b.rank_score) return a.rank_score > b.rank_score;
    return a.spin_labels < b.spin_labels;
  });
  return cases;
}

}  // namespace ghzdd

#endif
