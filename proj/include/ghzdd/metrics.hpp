#ifndef GHZDD_METRICS_HPP
#define GHZDD_METRICS_HPP

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "ghzdd/core.hpp"
#include "ghzdd/spin_model.hpp"

namespace ghzdd {

// ---------------------------------------------------------------------------
// Makhlin invariant and one-tangles
// ---------------------------------------------------------------------------

inline double g1(const ConditionalRotation& cr) {
  const double v = std::cos(cr.phi0 / 2) * std::cos(cr.phi1 / 2) +
                   cr.axis_dot() * std::sin(cr.phi0 / 2) * std::sin(cr.phi1 / 2);
  return clamp_checked(v * v, 0.0, 1.0, "G1");
}

/// Nuclear one-tangle (2/9)(1 - G1).
inline double one_tangle(double g) { return (2.0 / 9.0) * (1.0 - clamp_checked(g, 0.0, 1.0, "G1")); }
/// One-tangle in units of its maximum 2/9.
inline double one_tangle_scaled(double g) { return 1.0 - clamp_checked(g, 0.0, 1.0, "G1"); }

inline double max_entangling_power(int M) { return std::pow(2.0 / 3.0, M); }

/// Closed-form M-way entangling power of a controlled-rotation gate, M = targets + 1.
inline double mway_ep_unitary(std::span<const ConditionalRotation> targets) {
  require(!targets.empty(), "mway_ep_unitary: no target nuclei selected");
  const int M = static_cast<int>(targets.size()) + 1;
  double prod = 1.0;
  for (const auto& cr : targets) prod *= 1.0 - g1(cr);
  return max_entangling_power(M) * prod;
}

// ---------------------------------------------------------------------------
// Pure-state M-tangles. Qubit 0 is the most significant bit of the amplitude index.
// ---------------------------------------------------------------------------

namespace detail {

inline int qubit_count(const VecX& psi) {
  int n = 0;
  while ((Eigen::Index(1) << n) < psi.size()) ++n;
  require((Eigen::Index(1) << n) == psi.size(), "state dimension is not a power of two");
  return n;
}

inline void apply_1q(VecX& psi, int n, int q, const Mat2& op) {
  const Eigen::Index stride = Eigen::Index(1) << (n - 1 - q);
  for (Eigen::Index base = 0; base < psi.size(); base += 2 * stride) {
    for (Eigen::Index i = base; i < base + stride; ++i) {
      const cplx a = psi[i], b = psi[i + stride];
      psi[i] = op(0, 0) * a + op(0, 1) * b;
      psi[i + stride] = op(1, 0) * a + op(1, 1) * b;
    }
  }
}

// psi^T (op_0 x op_1 x ... ) psi
inline cplx bilinear(const VecX& psi, const std::vector<Mat2>& ops) {
  const int n = static_cast<int>(ops.size());
  VecX phi = psi;
  for (int q = 0; q < n; ++q) apply_1q(phi, n, q, ops[q]);
  return (psi.array() * phi.array()).sum();
}

// Single-qubit reduced density matrix of qubit q.
inline Mat2 reduced_1q(const VecX& psi, int n, int q) {
  const Eigen::Index stride = Eigen::Index(1) << (n - 1 - q);
  Mat2 rho = Mat2::Zero();
  for (Eigen::Index i = 0; i < psi.size(); ++i) {
    if (i & stride) continue;
    const cplx a = psi[i], b = psi[i + stride];
    rho(0, 0) += a * std::conj(a);
    rho(0, 1) += a * std::conj(b);
    rho(1, 0) += b * std::conj(a);
    rho(1, 1) += b * std::conj(b);
  }
  return rho;
}

inline double linear_entropy_tangle(const Mat2& rho) {
  return 2.0 * (1.0 - (rho * rho).trace().real());
}

// Squared concurrence of the two-qubit reduced state on (qa, qb) of a pure
// three-qubit state. The reduced state has rank <= 2; with branches x_c = <c|psi>
// of the traced qubit, the Wootters singular values are those of
// T_cd = x_c^T (sy x sy) x_d, so C^2 = |T|_F^2 - 2|det T|.
inline double concurrence_sq_3q(const VecX& psi, int qa, int qb) {
  const int qc = 3 - qa - qb;
  Eigen::Vector4cd x[2];
  for (int c = 0; c < 2; ++c) {
    for (int ab = 0; ab < 4; ++ab) {
      int b3[3];
      b3[qa] = (ab >> 1) & 1;
      b3[qb] = ab & 1;
      b3[qc] = c;
      x[c][ab] = psi[(b3[0] << 2) | (b3[1] << 1) | b3[2]];
    }
  }
  // sy x sy on two qubits maps |00>->-|11>, |01>->|10>, |10>->|01>, |11>->-|00>.
  auto flip = [](const Eigen::Vector4cd& v) {
    Eigen::Vector4cd w;
    w << -v[3], v[2], v[1], -v[0];
    return w;
  };
  Eigen::Matrix2cd T;
  for (int c = 0; c < 2; ++c)
    for (int d = 0; d < 2; ++d) T(c, d) = (x[c].array() * flip(x[d]).array()).sum();
  return std::max(0.0, T.squaredNorm() - 2.0 * std::abs(T.determinant()));
}

}  // namespace detail

/// Three-tangle via tau_{BC|A} - C^2_{AB} - C^2_{AC}; valid for any pure three-qubit state.
inline double three_tangle(const VecX& psi) {
  require(psi.size() == 8, "three_tangle needs 8 amplitudes");
  const double tau_a = detail::linear_entropy_tangle(detail::reduced_1q(psi, 3, 0));
  return tau_a - detail::concurrence_sq_3q(psi, 0, 1) - detail::concurrence_sq_3q(psi, 0, 2);
}

/// |<psi| sx sy sy |psi*>|^2, equal to the three-tangle on controlled-rotation states.
inline double three_tangle_cr_form(const VecX& psi) {
  require(psi.size() == 8, "three_tangle_cr_form needs 8 amplitudes");
  return std::norm(detail::bilinear(psi, {pauli::x(), pauli::y(), pauli::y()}));
}

/// Pure-state M-tangle. Even M uses the spin-flip overlap, M = 3 the CKW combination,
/// odd M > 3 the linearised projector form that holds only for controlled-rotation states.
inline double mtangle_pure(const VecX& psi, int M, bool cr_generated = false) {
  require(M >= 2, "mtangle_pure: M must be >= 2");
  require(psi.size() == (Eigen::Index(1) << M), "mtangle_pure: state dimension != 2^M");
  require(std::abs(psi.squaredNorm() - 1.0) < 1e-10, "mtangle_pure: state is not normalized");
  double tau = 0.0;
  if (M % 2 == 0) {
    tau = std::norm(detail::bilinear(psi, std::vector<Mat2>(M, pauli::y())));
  } else if (M == 3) {
    tau = three_tangle(psi);
  } else {
    require(cr_generated, "mtangle_pure: odd M > 3 is only defined here for controlled-rotation states");
    std::vector<Mat2> ops(M, pauli::y());
    for (const Mat2& a : {pauli::id(), pauli::x(), pauli::z()}) {
      ops[0] = a;
      tau += std::norm(detail::bilinear(psi, ops));
    }
  }
  return clamp_checked(tau, 0.0, 1.0, "M-tangle", 1e-9);
}

// ---------------------------------------------------------------------------
// Controlled-rotation gates and Kraus structure
// ---------------------------------------------------------------------------

/// Applies sum_j |j><j| (x) R_j^(1) (x) ... to a state whose qubit 0 is the electron.
inline VecX apply_cr(std::span<const ConditionalRotation> rotations, const VecX& psi) {
  const int n = detail::qubit_count(psi);
  require(n == static_cast<int>(rotations.size()) + 1, "apply_cr: dimension mismatch");
  const Eigen::Index half = psi.size() / 2;
  VecX out(psi.size());
  for (int branch = 0; branch < 2; ++branch) {
    VecX part = psi.segment(branch * half, half);
    for (int l = 0; l < n - 1; ++l) detail::apply_1q(part, n - 1, l, rotations[l].r(branch));
    out.segment(branch * half, half) = part;
  }
  return out;
}

/// Dense 2^M unitary of the controlled-rotation gate over the listed nuclei.
inline MatX cr_unitary(std::span<const ConditionalRotation> rotations) {
  const Eigen::Index dim = Eigen::Index(1) << (rotations.size() + 1);
  MatX u(dim, dim);
  for (Eigen::Index c = 0; c < dim; ++c) {
    VecX e = VecX::Zero(dim);
    e[c] = 1.0;
    u.col(c) = apply_cr(rotations, e);
  }
  return u;
}

/// Per-spin overlaps a_j = <0|R_j|0>, b_j = <1|R_j|0> of the traced-out (unwanted) nuclei,
/// which start in |0>.
struct KrausFactorSet {
  std::vector<std::array<cplx, 2>> a, b;

  std::size_t size() const { return a.size(); }

  /// g = prod_l <0|R0^dag R1|0> = sum_r conj(f_0^(r)) f_1^(r).
  cplx cross_overlap() const {
    cplx g = 1.0;
    for (std::size_t l = 0; l < a.size(); ++l)
      g *= std::conj(a[l][0]) * a[l][1] + std::conj(b[l][0]) * b[l][1];
    return g;
  }

  /// f_j^(r) for every bit string r of the unwanted register (bit l set: spin l in |1>).
  std::vector<std::array<cplx, 2>> enumerate(std::size_t cap = 20) const {
    if (a.size() > cap)
      throw cap_error("enumerated Kraus factors limited to " + std::to_string(cap) +
                      " spins; use the factorized cross overlap");
    const std::size_t count = std::size_t(1) << a.size();
    std::vector<std::array<cplx, 2>> f(count);
    for (std::size_t r = 0; r < count; ++r) {
      std::array<cplx, 2> v{1.0, 1.0};
      for (std::size_t l = 0; l < a.size(); ++l) {
        const bool one = (r >> l) & 1U;
        for (int j = 0; j < 2; ++j) v[j] *= one ? b[l][j] : a[l][j];
      }
      f[r] = v;
    }
    return f;
  }
};

inline KrausFactorSet kraus_factors(std::span<const ConditionalRotation> unwanted) {
  KrausFactorSet k;
  for (const auto& cr : unwanted) {
    std::array<cplx, 2> a{}, b{};
    for (int j = 0; j < 2; ++j) {
      const Mat2 r = cr.r(j);
      a[j] = r(0, 0);
      b[j] = r(1, 0);
      ensure(std::abs(std::norm(a[j]) + std::norm(b[j]) - 1.0) < 1e-12,
             "Kraus overlap pair is not normalized");
    }
    k.a.push_back(a);
    k.b.push_back(b);
  }
  return k;
}

/// Entangling power of the channel left after tracing out the unwanted nuclei:
/// eps(U) (1 + |g|^2) / 2.
inline double mway_ep_nonunitary(std::span<const ConditionalRotation> targets,
                                 std::span<const ConditionalRotation> unwanted) {
  const double ep = mway_ep_unitary(targets);
  const double g2 = std::norm(kraus_factors(unwanted).cross_overlap());
  return ep * 0.5 * (1.0 + clamp_checked(g2, 0.0, 1.0, "|g|^2"));
}

struct GateErrorReport {
  double infidelity = 0.0;
  std::size_t target_unitary_dim = 0;
};

/// 1 - average gate fidelity of the target channel against the gate with the
/// unwanted nuclei absent. With Tr[U_ideal^dag E_k] = 2^K (f_0 + f_1) the Kraus sum
/// collapses to d (1 - Re g) / (2 (d + 1)).
inline GateErrorReport gate_error(std::span<const ConditionalRotation> targets,
                                  std::span<const ConditionalRotation> unwanted) {
  const double d = std::ldexp(1.0, static_cast<int>(targets.size()) + 1);
  const double re_g = kraus_factors(unwanted).cross_overlap().real();
  const double err = d * (1.0 - re_g) / (2.0 * (d + 1.0));
  return {clamp_checked(err, 0.0, 1.0, "gate error"), static_cast<std::size_t>(d)};
}

/// Same quantity against an arbitrary ideal 2^M unitary. The branch traces
/// t_j = Tr[ideal^dag (|j><j| x R_j)] reduce the Kraus sum to
/// |t0|^2 + |t1|^2 + 2 Re(conj(t0) t1 g).
inline GateErrorReport gate_error(std::span<const ConditionalRotation> targets,
                                  std::span<const ConditionalRotation> unwanted,
                                  const MatX& ideal) {
  const Eigen::Index d = Eigen::Index(1) << (targets.size() + 1);
  require(ideal.rows() == d && ideal.cols() == d, "gate_error: ideal has wrong dimension");
  const MatX u = cr_unitary(targets);
  const Eigen::Index half = d / 2;
  const cplx t0 = (ideal.topLeftCorner(half, half).adjoint() * u.topLeftCorner(half, half)).trace();
  const cplx t1 =
      (ideal.bottomRightCorner(half, half).adjoint() * u.bottomRightCorner(half, half)).trace();
  const cplx g = kraus_factors(unwanted).cross_overlap();
  const double sum = std::norm(t0) + std::norm(t1) + 2.0 * (std::conj(t0) * t1 * g).real();
  const double dd = static_cast<double>(d);
  const double fbar = (sum + dd) / (dd * dd + dd);
  return {clamp_checked(1.0 - fbar, 0.0, 1.0, "gate error", 1e-10), static_cast<std::size_t>(d)};
}

// ---------------------------------------------------------------------------
// Report for a plan over a register
// ---------------------------------------------------------------------------

struct MetricsReport {
  std::vector<std::string> labels;
  std::vector<std::string> target_labels;
  std::vector<double> phi0, phi1, axis_dot, g1, one_tangles, one_tangles_scaled;
  double ep_unitary = 0.0;
  double ep_nonunitary = 0.0;
  double ep_scaled = 0.0;
  double ep_nonunitary_scaled = 0.0;
  double gate_error = 0.0;
  std::size_t target_unitary_dim = 0;
  double total_time = 0.0;
};

inline MetricsReport metrics_from_rotations(const Register& reg,
                                            const std::vector<ConditionalRotation>& rotations,
                                            const std::vector<std::size_t>& targets,
                                            double total_time) {
  require(rotations.size() == reg.size(), "one rotation per register spin required");
  require(!targets.empty(), "no target nuclei selected");
  MetricsReport m;
  std::vector<char> is_target(reg.size(), 0);
  std::vector<ConditionalRotation> tr, un;
  for (std::size_t i : targets) {
    require(i < reg.size(), "target index out of range");
    require(!is_target[i], "target listed twice");
    is_target[i] = 1;
    tr.push_back(rotations[i]);
    m.target_labels.push_back(reg.spins[i].label);
  }
  for (std::size_t i = 0; i < reg.size(); ++i) {
    const auto& cr = rotations[i];
    const double g = ghzdd::g1(cr);
    m.labels.push_back(reg.spins[i].label);
    m.phi0.push_back(cr.phi0);
    m.phi1.push_back(cr.phi1);
    m.axis_dot.push_back(cr.axis_dot());
    m.g1.push_back(g);
    m.one_tangles.push_back(one_tangle(g));
    m.one_tangles_scaled.push_back(one_tangle_scaled(g));
    if (!is_target[i]) un.push_back(cr);
  }
  const int M = static_cast<int>(tr.size()) + 1;
  m.ep_unitary = mway_ep_unitary(tr);
  m.ep_nonunitary = mway_ep_nonunitary(tr, un);
  m.ep_scaled = clamp_checked(m.ep_unitary / max_entangling_power(M), 0.0, 1.0, "scaled EP");
  m.ep_nonunitary_scaled = m.ep_nonunitary / max_entangling_power(M);
  ensure(m.ep_nonunitary <= m.ep_unitary + 1e-15, "non-unitary EP exceeds unitary EP");
  const auto ge = ghzdd::gate_error(tr, un);
  m.gate_error = ge.infidelity;
  m.target_unitary_dim = ge.target_unitary_dim;
  m.total_time = total_time;
  return m;
}

inline MetricsReport evaluate_metrics(const Register& reg, const SequencePlan& plan,
                                      const std::vector<std::size_t>& targets) {
  return metrics_from_rotations(reg, compose_register(reg, plan), targets, plan.total_time());
}

}  // namespace ghzdd

#endif
