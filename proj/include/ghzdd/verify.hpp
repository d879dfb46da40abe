#ifndef GHZDD_VERIFY_HPP
#define GHZDD_VERIFY_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ghzdd/metrics.hpp"
#include "ghzdd/mixed_state.hpp"
#include "ghzdd/oracle.hpp"
#include "ghzdd/spin_model.hpp"

namespace ghzdd {

struct CheckResult {
  std::string name;
  double deviation = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
  }
};

namespace detail {

inline void record(VerifyReport& r, std::string name, double deviation, double tol) {
  r.checks.push_back({std::move(name), deviation, tol, std::isfinite(deviation) && deviation <= tol});
}

// Spins of the register with a first-order resonance, in register order.
inline std::vector<std::size_t> resonant_spins(const Register& reg, const SequenceUnit& unit, std::size_t want) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < reg.size() && out.size() < want; ++i)
    if (reg.spins[i].B > 0.0 && !scan_resonances(reg.spins[i], reg, unit, 1, 0.25 * microsecond,
                                                  0.01 * microsecond).empty())
      out.push_back(i);
  return out;
}

}  // namespace detail

/// Desk-scale cross-checks of every closed form against its brute-force oracle.
inline VerifyReport run_verify(const Register& reg, std::uint64_t seed, std::size_t mc_samples = 10000,
                               unsigned threads = 1) {
  VerifyReport rep;
  std::mt19937_64 rng(seed);
  auto random_set = [&](int n) {
    std::vector<ConditionalRotation> v;
    for (int i = 0; i < n; ++i) v.push_back(oracle::random_cr(rng));
    return v;
  };

  for (int M = 3; M <= 5; ++M) {
    double dev = 0.0;
    for (int i = 0; i < 5; ++i) {
      const auto t = random_set(M - 1);
      dev = std::max(dev, std::abs(oracle::trace_form_entangling_power(cr_unitary(t), M) - mway_ep_unitary(t)));
    }
    detail::record(rep, "trace_form_ep_M" + std::to_string(M), dev, 1e-10);
  }
  {
    const auto pair = oracle::build_projector_pair(3);
    const auto t = random_set(2);
    detail::record(rep, "dense_projector_ep_M3",
                   std::abs(oracle::dense_trace_form_entangling_power(cr_unitary(t), pair) - mway_ep_unitary(t)),
                   1e-10);
  }

  for (int M = 3; M <= 7; ++M)
    detail::record(rep, "tangle_ghz" + std::to_string(M), std::abs(mtangle_pure(oracle::ghz_state(M), M, true) - 1.0), 1e-10);
  detail::record(rep, "tangle_w3", std::abs(three_tangle(oracle::w_state(3))), 1e-10);
  {
    const VecX bell = oracle::ghz_state(2);
    detail::record(rep, "tangle_bell_bell", std::abs(mtangle_pure(oracle::kron(bell, bell), 4) - 1.0), 1e-10);
    const VecX g3 = oracle::ghz_state(3);
    detail::record(rep, "tangle_ghz3_ghz3", std::abs(mtangle_pure(oracle::kron(g3, g3), 6)), 1e-10);
  }

  {
    const auto t = random_set(2);
    const auto mc = oracle::mc_entangling_power(t, mc_samples, seed, threads);
    const double z = std::abs(mc.mean - mway_ep_unitary(t)) / std::max(mc.std_error, 1e-300);
    detail::record(rep, "monte_carlo_ep_sigma", z, 3.0);
  }

  {
    double dev = 0.0;
    for (int i = 0; i < 5; ++i) {
      const auto t = random_set(2), u = random_set(6);
      dev = std::max(dev, std::abs(oracle::kraus_double_sum_ep(t, u) - mway_ep_nonunitary(t, u)));
    }
    detail::record(rep, "kraus_double_sum_ep", dev, 1e-12);
  }
  {
    const auto t = random_set(2), u = random_set(4);
    detail::record(rep, "kraus_completeness",
                   (oracle::kraus_completeness(t, u) - MatX::Identity(8, 8)).cwiseAbs().maxCoeff(), 1e-10);
    std::vector<ConditionalRotation> all = t;
    all.insert(all.end(), u.begin(), u.end());
    std::vector<Qubit> q{ket_plus()};
    for (std::size_t i = 0; i < all.size(); ++i) q.push_back(oracle::haar_qubit(rng));
    for (std::size_t i = t.size() + 1; i < q.size(); ++i) q[i] = ket0();
    const VecX out = apply_cr(all, product_state(q));
    const VecX in3 = product_state(std::vector<Qubit>(q.begin(), q.begin() + 3));
    const MatX via_kraus = oracle::enumerate_kraus_channel(t, u, in3 * in3.adjoint());
    detail::record(rep, "kraus_vs_partial_trace",
                   (via_kraus - oracle::partial_trace(out, {0, 1, 2})).cwiseAbs().maxCoeff(), 1e-10);
  }

  {
    const auto t = random_set(2), u = random_set(5);
    std::vector<Qubit> ui, ti;
    for (std::size_t i = 0; i < u.size(); ++i) ui.push_back(oracle::haar_qubit(rng));
    for (std::size_t i = 0; i < t.size(); ++i) ti.push_back(oracle::haar_qubit(rng));
    const Qubit e = oracle::haar_qubit(rng);
    const auto d = reduced_decomposition(e[0], e[1], t, u, ui, ti);
    std::vector<ConditionalRotation> all = t;
    all.insert(all.end(), u.begin(), u.end());
    std::vector<Qubit> q{e};
    q.insert(q.end(), ti.begin(), ti.end());
    q.insert(q.end(), ui.begin(), ui.end());
    const MatX rho = oracle::partial_trace(apply_cr(all, product_state(q)), {0, 1, 2});
    detail::record(rep, "reduced_decomposition", (reconstruct(d) - rho).cwiseAbs().maxCoeff(), 1e-10);
  }

  {
    double dev = 0.0;
    const auto grid = uniform_grid(0.0, 1.0, 11);
    const auto r = convex_roof(oracle::ghz_state(3), oracle::ghz_state(3, -1.0), grid, 720);
    for (std::size_t i = 0; i < grid.size(); ++i)
      dev = std::max(dev, std::abs(r.tau_min[i] - std::pow(1.0 - 2.0 * grid[i], 2)));
    detail::record(rep, "ghz_mixture_roof", dev, 1e-6);
    const auto c = bell_mixture_concurrence(grid, 720);
    dev = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) dev = std::max(dev, std::abs(c[i] - 2.0 * std::abs(grid[i] - 0.5)));
    detail::record(rep, "bell_mixture_concurrence", dev, 1e-6);
  }

  const SequenceUnit unit = SequenceUnit::cpmg();
  const auto spins = detail::resonant_spins(reg, unit, 4);
  if (!spins.empty()) {
    SequencePlan plan;
    for (std::size_t s : spins) {
      const auto res = scan_resonances(reg.spins[s], reg, unit, 1, 0.25 * microsecond, 0.01 * microsecond);
      plan.blocks.push_back({unit, res.front().t_k, 7});
    }
    double dev = 0.0;
    for (const auto& s : reg.spins) {
      const auto [v0, v1] = oracle::brute_force_propagators(s, reg, plan);
      const auto cr = compose_sequence(s, reg, plan);
      dev = std::max({dev, (v0 - cr.r0()).cwiseAbs().maxCoeff(), (v1 - cr.r1()).cwiseAbs().maxCoeff()});
    }
    detail::record(rep, "propagators_vs_exponentials", dev, 1e-9);

    Register sub;
    sub.omega_larmor = reg.omega_larmor;
    for (std::size_t i = 0; i < std::min<std::size_t>(reg.size(), 9); ++i) sub.spins.push_back(reg.spins[i]);
    std::vector<Qubit> q{ket_plus()};
    for (std::size_t i = 0; i < sub.size(); ++i) q.push_back(ket0());
    const VecX psi0 = product_state(q);
    const VecX dense = oracle::evolve_dense(sub, plan, {psi0}).amplitudes;
    const VecX fast = apply_cr(compose_register(sub, plan), psi0);
    detail::record(rep, "dense_evolution", (dense - fast).cwiseAbs().maxCoeff(), 1e-9);
  }
  return rep;
}

}  // namespace ghzdd

#endif
