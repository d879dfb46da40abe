#ifndef GHZDD_MIXED_STATE_HPP
#define GHZDD_MIXED_STATE_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "ghzdd/core.hpp"
#include "ghzdd/metrics.hpp"
#include "ghzdd/spin_model.hpp"

namespace ghzdd {

using Qubit = Eigen::Vector2cd;

inline Qubit ket0() { return Qubit(1.0, 0.0); }
inline Qubit ket1() { return Qubit(0.0, 1.0); }
inline Qubit ket_plus() { return Qubit(1.0, 1.0) / std::sqrt(2.0); }

/// cos(theta/2)|0> + e^{i gamma} sin(theta/2)|1>
inline Qubit bloch_qubit(double theta, double gamma) {
  return Qubit(std::cos(theta / 2), std::polar(std::sin(theta / 2), gamma));
}

inline VecX product_state(std::span<const Qubit> qubits) {
  VecX psi = VecX::Ones(1);
  for (const Qubit& q : qubits) {
    VecX next(psi.size() * 2);
    for (Eigen::Index i = 0; i < psi.size(); ++i) {
      next[2 * i] = psi[i] * q[0];
      next[2 * i + 1] = psi[i] * q[1];
    }
    psi = std::move(next);
  }
  return psi;
}

/// Rank-2 spectral form of electron + targets after tracing out the unwanted nuclei.
struct ReducedDecomposition {
  double lambda_plus = 1.0, lambda_minus = 0.0;
  VecX v_plus, v_minus;
  Qubit e_plus, e_minus;  // electron-space eigenvectors before re-dressing
  cplx f01 = 1.0;
  bool degenerate = false;
};

inline ReducedDecomposition reduced_decomposition(cplx alpha, cplx beta,
                                                  std::span<const ConditionalRotation> targets,
                                                  std::span<const ConditionalRotation> unwanted,
                                                  std::span<const Qubit> unwanted_initials,
                                                  std::span<const Qubit> target_initials) {
  require(std::abs(std::norm(alpha) + std::norm(beta) - 1.0) < 1e-12,
          "electron amplitudes are not normalized");
  require(unwanted.size() == unwanted_initials.size(), "one initial state per unwanted nucleus");
  require(targets.size() == target_initials.size(), "one initial state per target nucleus");
  for (const Qubit& q : unwanted_initials)
    require(std::abs(q.squaredNorm() - 1.0) < 1e-12, "unwanted initial state not normalized");
  for (const Qubit& q : target_initials)
    require(std::abs(q.squaredNorm() - 1.0) < 1e-12, "target initial state not normalized");

  ReducedDecomposition d;
  cplx f01 = 1.0;
  for (std::size_t l = 0; l < unwanted.size(); ++l) {
    const Qubit& s = unwanted_initials[l];
    // Tr[R0 |s><s| R1^dag] = <s| R1^dag R0 |s>
    f01 *= s.dot(unwanted[l].r1().adjoint() * unwanted[l].r0() * s);
  }
  d.f01 = f01;
  const double a2 = std::norm(alpha), b2 = std::norm(beta);
  const cplx c = std::conj(alpha) * beta * std::conj(f01);  // lower-left entry, alpha* beta f10
  const double disc = std::sqrt(std::max(0.0, (a2 - b2) * (a2 - b2) + 4.0 * a2 * b2 * std::norm(f01)));
  d.lambda_plus = 0.5 * (1.0 + disc);
  d.lambda_minus = 0.5 * (1.0 - disc);

  if (std::abs(c) < 1e-14) {
    d.degenerate = true;
    const bool zero_first = a2 >= b2;
    d.e_plus = zero_first ? ket0() : ket1();
    d.e_minus = zero_first ? ket1() : ket0();
    d.lambda_plus = std::max(a2, b2);
    d.lambda_minus = std::min(a2, b2);
  } else {
    auto vec = [&](double lam) -> Qubit {
      const cplx x = -(b2 - lam) / c;
      return Qubit(x, 1.0) / std::sqrt(1.0 + std::norm(x));
    };
    d.e_plus = vec(d.lambda_plus);
    d.e_minus = vec(d.lambda_minus);
  }

  std::vector<Qubit> q;
  q.reserve(targets.size() + 1);
  q.push_back(d.e_plus);
  q.insert(q.end(), target_initials.begin(), target_initials.end());
  d.v_plus = apply_cr(targets, product_state(q));
  q[0] = d.e_minus;
  d.v_minus = apply_cr(targets, product_state(q));
  return d;
}

/// Default: unwanted and target nuclei all start in |0>.
inline ReducedDecomposition reduced_decomposition(cplx alpha, cplx beta,
                                                  std::span<const ConditionalRotation> targets,
                                                  std::span<const ConditionalRotation> unwanted) {
  const std::vector<Qubit> u(unwanted.size(), ket0()), t(targets.size(), ket0());
  return reduced_decomposition(alpha, beta, targets, unwanted, u, t);
}

inline MatX reconstruct(const ReducedDecomposition& d) {
  return d.lambda_plus * d.v_plus * d.v_plus.adjoint() +
         d.lambda_minus * d.v_minus * d.v_minus.adjoint();
}

struct ChiMinimum {
  double value = 0.0;
  double chi = 0.0;
};

/// Minimises f over a 2pi-periodic chi: uniform scan, then golden-section refinement
/// in the bracket around the best sample.
template <class F>
ChiMinimum minimize_periodic(F&& f, int samples) {
  require(samples >= 3, "chi resolution must be >= 3");
  const double h = two_pi / samples;
  ChiMinimum best{f(0.0), 0.0};
  for (int i = 1; i < samples; ++i) {
    const double chi = i * h;
    const double v = f(chi);
    if (v < best.value) best = {v, chi};
  }
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = best.chi - h, hi = best.chi + h;
  double x1 = hi - invphi * (hi - lo), x2 = lo + invphi * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 80 && hi - lo > 1e-12; ++it) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - invphi * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + invphi * (hi - lo);
      f2 = f(x2);
    }
  }
  const double xm = 0.5 * (lo + hi);
  const double fm = f(xm);
  if (fm < best.value) best = {fm, std::fmod(xm + two_pi, two_pi)};
  return best;
}

/// min over chi of tau3(sqrt(p) a - e^{i chi} sqrt(1-p) b) for orthonormal 3-qubit a, b.
inline ChiMinimum trial_state_minimize(double p, const VecX& a, const VecX& b, int chi_resolution = 720) {
  require(a.size() == 8 && b.size() == 8, "trial-state minimisation is implemented for three qubits");
  require(p >= 0.0 && p <= 1.0, "mixing weight outside [0,1]");
  if (p == 1.0) return {three_tangle(a), 0.0};
  if (p == 0.0) return {three_tangle(b), 0.0};
  const double sp = std::sqrt(p), sm = std::sqrt(1.0 - p);
  auto tau = [&](double chi) {
    const VecX psi = sp * a - std::polar(sm, chi) * b;
    return three_tangle(psi);
  };
  auto m = minimize_periodic(tau, chi_resolution);
  m.value = clamp_checked(m.value, 0.0, 1.0, "three-tangle", 1e-9);
  return m;
}

inline ChiMinimum trial_state_minimize(const ReducedDecomposition& d, int chi_resolution = 720) {
  if (d.lambda_minus < 1e-14) return {three_tangle(d.v_plus), 0.0};
  return trial_state_minimize(d.lambda_plus, d.v_plus, d.v_minus, chi_resolution);
}

/// Lower convex envelope of (p, tau) evaluated back on p_grid.
inline std::vector<double> convex_hull(const std::vector<double>& p, const std::vector<double>& tau) {
  require(p.size() == tau.size(), "convex_hull: size mismatch");
  require(std::is_sorted(p.begin(), p.end()), "convex_hull: p grid must be ascending");
  if (p.size() < 2) return tau;
  std::vector<std::size_t> hull;
  auto cross = [&](std::size_t o, std::size_t a, std::size_t b) {
    return (p[a] - p[o]) * (tau[b] - tau[o]) - (tau[a] - tau[o]) * (p[b] - p[o]);
  };
  for (std::size_t i = 0; i < p.size(); ++i) {
    while (hull.size() >= 2 && cross(hull[hull.size() - 2], hull.back(), i) <= 0) hull.pop_back();
    hull.push_back(i);
  }
  std::vector<double> out(p.size());
  std::size_t seg = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    while (seg + 2 < hull.size() && p[hull[seg + 1]] <= p[i]) ++seg;
    const std::size_t a = hull[seg], b = hull[std::min(seg + 1, hull.size() - 1)];
    if (a == b || p[b] == p[a]) {
      out[i] = tau[a];
    } else {
      const double w = (p[i] - p[a]) / (p[b] - p[a]);
      out[i] = std::min(tau[i], (1.0 - w) * tau[a] + w * tau[b]);
    }
  }
  return out;
}

struct ConvexRoofResult {
  std::vector<double> p_grid, tau_min, tau_hull, chi_argmin;
};

/// tau_min(p) for the trial mixture of the two eigenvectors, plus its convex hull.
inline ConvexRoofResult convex_roof(const VecX& v_plus, const VecX& v_minus,
                                    const std::vector<double>& p_grid, int chi_resolution = 720) {
  ConvexRoofResult r;
  r.p_grid = p_grid;
  for (double p : p_grid) {
    const auto m = trial_state_minimize(p, v_plus, v_minus, chi_resolution);
    r.tau_min.push_back(m.value);
    r.chi_argmin.push_back(m.chi);
  }
  r.tau_hull = convex_hull(r.p_grid, r.tau_min);
  return r;
}

inline std::vector<double> uniform_grid(double lo, double hi, int points) {
  require(points >= 2, "grid needs at least two points");
  std::vector<double> g(points);
  for (int i = 0; i < points; ++i) g[i] = lo + (hi - lo) * i / (points - 1);
  g.back() = hi;
  return g;
}

/// Pure two-qubit concurrence 2 |psi_00 psi_11 - psi_01 psi_10|.
inline double pure_concurrence(const VecX& psi) {
  require(psi.size() == 4, "pure_concurrence needs 4 amplitudes");
  return 2.0 * std::abs(psi[0] * psi[3] - psi[1] * psi[2]);
}

/// Minimum concurrence of sqrt(p)|Phi+> + e^{i chi} sqrt(1-p)|Phi-> over chi, per p.
inline std::vector<double> bell_mixture_concurrence(const std::vector<double>& p_grid,
                                                    int chi_resolution = 720) {
  VecX phi_p = VecX::Zero(4), phi_m = VecX::Zero(4);
  phi_p[0] = phi_p[3] = 1.0 / std::sqrt(2.0);
  phi_m[0] = 1.0 / std::sqrt(2.0);
  phi_m[3] = -1.0 / std::sqrt(2.0);
  std::vector<double> out;
  for (double p : p_grid) {
    require(p >= 0.0 && p <= 1.0, "mixing weight outside [0,1]");
    const double sp = std::sqrt(p), sm = std::sqrt(1.0 - p);
    auto c = [&](double chi) { return pure_concurrence(sp * phi_p + std::polar(sm, chi) * phi_m); };
    out.push_back(minimize_periodic(c, chi_resolution).value);
  }
  return out;
}

struct InitialStateResult {
  std::vector<Qubit> qubits;  // electron, target 1, target 2
  double tau3 = 0.0;
  bool used_default = true;
};

inline constexpr double default_state_tau_threshold = 0.95;

/// Three-qubit product input maximising tau3 after the CR gate. On CR outputs
/// tau3 = 4|c0 c1|^2 |u0^T sy u1|^2 |w0^T sy w1|^2 with u_j = R_j u, so the grid
/// search over (theta, gamma) factorises into independent per-qubit maximisations.
inline InitialStateResult initial_state_search(std::span<const ConditionalRotation> targets) {
  require(targets.size() == 2, "initial_state_search is implemented for GHZ3 (two targets)");
  auto tau_of = [&](const std::vector<Qubit>& q) {
    return three_tangle(apply_cr(targets, product_state(q)));
  };
  InitialStateResult r;
  r.qubits = {ket_plus(), ket0(), ket0()};
  r.tau3 = tau_of(r.qubits);
  if (r.tau3 >= default_state_tau_threshold) return r;

  std::vector<double> thetas, gammas;
  for (int i = 0; i <= 20; ++i) thetas.push_back(i * 0.05 * pi);
  for (int i = 0; i < 20; ++i) gammas.push_back(i * 0.1 * pi);
  const Mat2 sy = pauli::y();
  auto best_on_grid = [&](auto&& score) {
    double best = -1.0;
    Qubit arg = ket0();
    for (double th : thetas)
      for (double ga : gammas) {
        const Qubit q = bloch_qubit(th, ga);
        const double s = score(q);
        if (s > best + 1e-15) {
          best = s;
          arg = q;
        }
      }
    return arg;
  };
  const Qubit e = best_on_grid([](const Qubit& q) { return std::norm(q[0] * q[1]); });
  std::vector<Qubit> q{e};
  for (const auto& cr : targets) {
    const Mat2 r0 = cr.r0(), r1 = cr.r1();
    q.push_back(best_on_grid([&](const Qubit& u) {
      return std::norm(((r0 * u).transpose() * sy * (r1 * u))(0, 0));
    }));
  }
  const double tau = tau_of(q);
  if (tau > r.tau3) {
    r.qubits = q;
    r.tau3 = tau;
    r.used_default = false;
  }
  return r;
}

}  // namespace ghzdd

#endif
