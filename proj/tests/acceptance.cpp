// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>

#include "brute_force_search.hpp"
#include "ghzdd/ghzdd.hpp"

using namespace ghzdd;

namespace {

const std::string data_dir = GHZDD_DATA_DIR;
const std::string config_dir = GHZDD_CONFIG_DIR;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

std::vector<ConditionalRotation> random_set(std::mt19937_64& rng, int n) {
  std::vector<ConditionalRotation> v;
  for (int i = 0; i < n; ++i) v.push_back(oracle::random_cr(rng));
  return v;
}

const Register& table3() {
  static const Register r = load_register(data_dir + "/table3.csv");
  return r;
}

Outcome closed_vs_trace_form() {
  std::mt19937_64 rng(101);
  double dev = 0.0;
  for (int M : {3, 4, 5}) {
    std::optional<oracle::ProjectorPair> pair;
    if (M <= oracle::dense_projector_cap) pair = oracle::build_projector_pair(M);
    for (int i = 0; i < 100; ++i) {
      const auto t = random_set(rng, M - 1);
      const MatX u = cr_unitary(t);
      const double trace = pair ? oracle::dense_trace_form_entangling_power(u, *pair)
                                : oracle::trace_form_entangling_power(u, M);
      dev = std::max(dev, std::abs(trace - mway_ep_unitary(t)));
    }
  }
  return {dev <= 1e-10, fmt("max |closed - trace| = %.3g over 300 unitaries", dev)};
}

Outcome monte_carlo() {
  std::mt19937_64 rng(202);
  double worst = 0.0;
  int outside = 0;
  for (int M : {3, 4})
    for (int i = 0; i < 20; ++i) {
      const auto t = random_set(rng, M - 1);
      const auto mc = oracle::mc_entangling_power(t, 10000, 1000 * M + i, resolve_threads(0));
      const double z = std::abs(mc.mean - mway_ep_unitary(t)) / mc.std_error;
      worst = std::max(worst, z);
      outside += z > 3.0;
    }
  return {outside == 0, fmt("worst deviation %.3g standard errors, %g of 40 beyond 3", worst, outside)};
}

Outcome spot_tangles() {
  double dev = 0.0;
  for (int M = 3; M <= 7; ++M) dev = std::max(dev, std::abs(mtangle_pure(oracle::ghz_state(M), M, true) - 1.0));
  dev = std::max(dev, std::abs(three_tangle(oracle::w_state(3))));
  const VecX bell = oracle::ghz_state(2), g3 = oracle::ghz_state(3);
  dev = std::max(dev, std::abs(mtangle_pure(oracle::kron(bell, bell), 4) - 1.0));
  dev = std::max(dev, std::abs(mtangle_pure(oracle::kron(g3, g3), 6)));
  return {dev <= 1e-10, fmt("max deviation %.3g", dev)};
}

Outcome nonunitary_ep() {
  std::mt19937_64 rng(303);
  double factor_dev = 0.0;
  for (int M : {3, 4})
    for (int L = 0; L <= 8; ++L)
      for (int rep = 0; rep < 3; ++rep) {
        const auto t = random_set(rng, M - 1), u = random_set(rng, L);
        const double closed = mway_ep_nonunitary(t, u);
        factor_dev = std::max(factor_dev, std::abs(closed - oracle::kraus_double_sum_ep(t, u)));
        if (M == 3 && rep == 0) factor_dev = std::max(factor_dev, std::abs(closed - oracle::channel_trace_form_ep(t, u)));
      }
  int violations = 0, iff_failures = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto t = random_set(rng, 2);
    std::vector<ConditionalRotation> u;
    const int L = 1 + static_cast<int>(rng() % 8);
    const bool unconditional = i % 2 == 0;
    for (int l = 0; l < L; ++l)
      u.push_back(unconditional ? ConditionalRotation::unconditional(oracle::haar_su2(rng)) : oracle::random_cr(rng));
    const double eu = mway_ep_unitary(t), ee = mway_ep_nonunitary(t, u);
    const bool g_unit = std::abs(std::abs(kraus_factors(u).cross_overlap()) - 1.0) <= 1e-12;
    const bool equal = std::abs(ee - eu) <= 1e-12 * std::max(eu, 1e-300);
    violations += ee > eu + 1e-15;
    iff_failures += equal != g_unit || g_unit != unconditional;
  }
  return {factor_dev <= 1e-12 && violations == 0 && iff_failures == 0,
          fmt("factorized vs Kraus %.3g; %g bound violations, %g equality mismatches in 1000", factor_dev,
              violations, iff_failures)};
}

Outcome mixed_state_closed_forms() {
  const auto grid = uniform_grid(0.0, 1.0, 101);
  const auto roof = convex_roof(oracle::ghz_state(3), oracle::ghz_state(3, -1.0), grid, 720);
  const auto conc = bell_mixture_concurrence(grid, 720);
  double d3 = 0.0, dc = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    d3 = std::max(d3, std::abs(roof.tau_min[i] - std::pow(1.0 - 2.0 * grid[i], 2)));
    dc = std::max(dc, std::abs(conc[i] - 2.0 * std::abs(grid[i] - 0.5)));
  }
  return {d3 <= 1e-6 && dc <= 1e-6, fmt("GHZ mixture %.3g, Bell mixture %.3g", d3, dc)};
}

Outcome reduced_decomposition_consistency() {
  std::mt19937_64 rng(606);
  const Register& reg = table3();
  double dev = 0.0;
  int rank_failures = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int K = 1 + static_cast<int>(rng() % 3);
    const int L = static_cast<int>(rng() % static_cast<unsigned>(12 - K));
    std::vector<std::size_t> order(reg.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    Register sub;
    sub.omega_larmor = reg.omega_larmor;
    for (int i = 0; i < K + L; ++i) sub.spins.push_back(reg.spins[order[i]]);

    SequencePlan plan;
    const int blocks = 1 + static_cast<int>(rng() % 3);
    std::uniform_real_distribution<double> jitter(-0.05, 0.05);
    for (int b = 0; b < blocks; ++b) {
      const auto& spin = sub.spins[rng() % static_cast<unsigned>(K)];
      const double t = resonance_seed(spin, sub, 1 + static_cast<int>(rng() % 3)) * (1.0 + jitter(rng));
      plan.blocks.push_back({b % 2 ? SequenceUnit::udd(4) : SequenceUnit::cpmg(), t, 1 + static_cast<long>(rng() % 40)});
    }
    const auto rot = compose_register(sub, plan);
    const std::vector<ConditionalRotation> targets(rot.begin(), rot.begin() + K), unwanted(rot.begin() + K, rot.end());
    std::vector<Qubit> q;
    for (int i = 0; i <= K + L; ++i) q.push_back(oracle::haar_qubit(rng));
    const std::vector<Qubit> ti(q.begin() + 1, q.begin() + 1 + K), ui(q.begin() + 1 + K, q.end());
    const auto d = reduced_decomposition(q[0][0], q[0][1], targets, unwanted, ui, ti);

    std::vector<int> keep(K + 1);
    std::iota(keep.begin(), keep.end(), 0);
    const MatX rho = oracle::partial_trace(oracle::evolve_dense(sub, plan, {product_state(q)}).amplitudes, keep);
    dev = std::max(dev, (reconstruct(d) - rho).cwiseAbs().maxCoeff());
    Eigen::SelfAdjointEigenSolver<MatX> es(rho);
    int rank = 0;
    for (Eigen::Index i = 0; i < rho.rows(); ++i) rank += es.eigenvalues()[i] > 1e-10;
    rank_failures += rank > 2;
  }
  return {dev <= 1e-10 && rank_failures == 0,
          fmt("max elementwise deviation %.3g, %g states with rank > 2", dev, rank_failures)};
}

struct ExistenceAt {
  bool a = false, b = false, c = false;
  std::string detail;
};

ExistenceAt existence_at(double omega_factor, unsigned threads) {
  const Register reg = load_register(data_dir + "/table3.csv", default_omega_larmor * omega_factor);
  SearchOptions opt;
  opt.threads = threads;
  const auto unit = SequenceUnit::cpmg();
  ExistenceAt r;

  const auto seq3 = rank_cases(search_sequential(reg, unit, sequential_tolerances(3), opt), RankWeights{},
                               sequential_tolerances(3));
  for (const auto& c : seq3)
    if (c.metrics.ep_scaled > 0.99 && c.metrics.total_time < 2e-3 && c.metrics.gate_error < 0.05) r.a = true;

  const auto multi3 = search_multispin(reg, unit, multispin_tolerances(3), opt);
  double best_multi = std::numeric_limits<double>::infinity();
  for (const auto& c : multi3) best_multi = std::min(best_multi, c.metrics.total_time);
  const double best_seq = seq3.empty() ? std::numeric_limits<double>::quiet_NaN() : seq3.front().metrics.total_time;
  r.b = !seq3.empty() && best_multi <= 0.5 * best_seq;

  const auto seq6 = search_sequential(reg, unit, sequential_tolerances(6), opt);
  double best6 = 0.0;
  for (const auto& c : seq6)
    if (c.metrics.total_time <= 2.5e-3 && c.metrics.ep_scaled >= 0.9) {
      r.c = true;
      best6 = std::max(best6, c.metrics.ep_scaled);
    }
  char buf[320];
  std::snprintf(buf, sizeof buf,
                "omega x%.2f: GHZ3 seq %zu cases (a %s); multi %zu cases, shortest %.4g ms vs best seq %.4g ms (b %s); "
                "GHZ6 seq %zu cases, best qualifying ep %.4g (c %s)",
                omega_factor, seq3.size(), r.a ? "ok" : "no", multi3.size(), best_multi * 1e3, best_seq * 1e3,
                r.b ? "ok" : "no", seq6.size(), best6, r.c ? "ok" : "no");
  r.detail = buf;
  return r;
}

Outcome figure_existence() {
  const unsigned threads = resolve_threads(0);
  const auto r = existence_at(1.0, threads);
  std::printf("  %s\n", r.detail.c_str());
  std::string d = std::string("default omega: a ") + (r.a ? "pass" : "fail") + ", b " + (r.b ? "pass" : "fail") +
                  ", c " + (r.c ? "pass" : "fail");
  if (r.a && r.b && r.c) return {true, d};
  for (int i = 0; i <= 8; ++i) {
    if (i == 4) continue;
    const double f = 0.8 + 0.05 * i;
    const auto s = existence_at(f, threads);
    std::printf("  %s\n", s.detail.c_str());
    if (s.a && s.b && s.c) return {true, d + fmt("; a, b and c all hold at omega x%.2f", f)};
  }
  return {false, d + "; no omega in the +-20% sweep satisfies a, b and c together"};
}

Outcome search_soundness() {
  Register toy;
  for (const char* l : {"C5", "C12", "C18", "C19"}) toy.spins.push_back(table3().at(l));
  SearchOptions uncapped;
  uncapped.candidates_per_spin = 0;
  uncapped.exact_combination_limit = 0;
  uncapped.subset_beam = 0;
  const auto unit = SequenceUnit::cpmg();
  std::size_t compared = 0;
  bool equal = true;
  auto same = [&](const std::vector<Case>& staged, const std::vector<bf::Found>& brute) {
    if (staged.size() != brute.size()) return false;
    for (const auto& b : brute) {
      const auto it = std::find_if(staged.begin(), staged.end(), [&](const Case& c) { return c.spins == b.spins; });
      if (it == staged.end() || it->plan.blocks.size() != b.plan.blocks.size()) return false;
      for (std::size_t i = 0; i < b.plan.blocks.size(); ++i)
        if (it->plan.blocks[i].t != b.plan.blocks[i].t || it->plan.blocks[i].N != b.plan.blocks[i].N) return false;
      if (std::abs(it->metrics.ep_unitary - b.ep) > 1e-12) return false;
      ++compared;
    }
    return true;
  };
  for (int M : {3, 4}) {
    auto tol = sequential_tolerances(M);
    tol.k_max = 3;
    equal = equal && same(search_sequential(toy, unit, tol, uncapped), bf::sequential(toy, unit, tol));
    auto mtol = multispin_tolerances(M);
    mtol.k_max = 3;
    equal = equal && same(search_multispin(toy, unit, mtol, uncapped), bf::multispin(toy, unit, mtol));
  }
  return {equal && compared > 0, fmt("%g cases compared against brute force", static_cast<double>(compared))};
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "ghzdd_acceptance_determinism";
  fs::remove_all(root);
  auto run = [&](const fs::path& out, unsigned threads) {
    auto cfg = load_run_config(fs::path(config_dir) / "ghz3_sequential.json");
    cfg.output_dir = out;
    cfg.options.threads = threads;
    const Register reg = cfg.load();
    auto cases = rank_cases(search_sequential(reg, cfg.unit, cfg.tolerances, cfg.options), cfg.rank_weights,
                            cfg.tolerances);
    write_archive(out, cfg, cases);
    return cases.size();
  };
  const std::size_t n = run(root / "out", 1);
  fs::copy(root / "out", root / "first");
  fs::remove_all(root / "out");
  run(root / "out", resolve_threads(0) > 1 ? resolve_threads(0) : 2);
  bool same = true;
  for (const char* f : {"cases.json", "cases.csv", "config.json", "meta.json"})
    same = same && read_text(root / "first" / f) == read_text(root / "out" / f);
  fs::remove_all(root);
  return {same && n > 0, fmt("%g archived cases, files ", static_cast<double>(n)) + (same ? "identical" : "differ")};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"closed form vs trace form entangling power", closed_vs_trace_form},
      {"Monte-Carlo entangling power", monte_carlo},
      {"tangle spot values", spot_tangles},
      {"non-unitary entangling power", nonunitary_ep},
      {"mixed-state closed forms", mixed_state_closed_forms},
      {"reduced decomposition vs partial trace", reduced_decomposition_consistency},
      {"register search existence", figure_existence},
      {"staged search equals brute force", search_soundness},
      {"archive determinism", determinism}};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %zu %s: %s (%s; %.1f s)\n", i + 1, criteria[i].first, o.pass ? "PASS" : "FAIL",
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
