#ifndef GHZDD_ORACLE_HPP
#define GHZDD_ORACLE_HPP

// Brute-force reference backends. Everything here is exponential in the qubit count
// and guarded by hard caps; production code never calls into this header.

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "ghzdd/core.hpp"
#include "ghzdd/metrics.hpp"
#include "ghzdd/mixed_state.hpp"
#include "ghzdd/parallel.hpp"
#include "ghzdd/spin_model.hpp"

namespace ghzdd::oracle {

inline constexpr int dense_qubit_cap = 14;
inline constexpr int projector_qubit_cap = 7;
inline constexpr int dense_projector_cap = 4;
inline constexpr int kraus_unwanted_cap = 10;

// ---------------------------------------------------------------------------
// Random instances
// ---------------------------------------------------------------------------

/// Haar-random pure qubit from a normalised complex Gaussian pair.
template <class Rng>
Qubit haar_qubit(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Qubit q(cplx(n(rng), n(rng)), cplx(n(rng), n(rng)));
  return q / q.norm();
}

/// Haar-random SU(2) from a normalised Gaussian quaternion.
template <class Rng>
Mat2 haar_su2(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Quat q{n(rng), n(rng), n(rng), n(rng)};
  const double s = std::sqrt(q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z);
  return from_quat({q.w / s, q.x / s, q.y / s, q.z / s});
}

template <class Rng>
ConditionalRotation random_cr(Rng& rng) {
  return ConditionalRotation::from_propagators(haar_su2(rng), haar_su2(rng));
}

/// (|0...0> + sign |1...1>) / sqrt(2).
inline VecX ghz_state(int M, double sign = 1.0) {
  VecX v = VecX::Zero(Eigen::Index(1) << M);
  v[0] = 1.0 / std::sqrt(2.0);
  v[v.size() - 1] = sign / std::sqrt(2.0);
  return v;
}

inline VecX w_state(int M) {
  VecX v = VecX::Zero(Eigen::Index(1) << M);
  for (int q = 0; q < M; ++q) v[Eigen::Index(1) << q] = 1.0 / std::sqrt(double(M));
  return v;
}

inline VecX kron(const VecX& a, const VecX& b) {
  VecX v(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) v.segment(i * b.size(), b.size()) = a[i] * b;
  return v;
}

// ---------------------------------------------------------------------------
// Propagators by direct exponentiation
// ---------------------------------------------------------------------------

inline Mat2 expm_hermitian(const Mat2& h, double tau) {
  Eigen::SelfAdjointEigenSolver<Mat2> es(h);
  const auto& w = es.eigenvalues();
  Eigen::Vector2cd phase(std::exp(-I_unit * w[0] * tau), std::exp(-I_unit * w[1] * tau));
  return es.eigenvectors() * phase.asDiagonal() * es.eigenvectors().adjoint();
}

/// (V0, V1) as the literal product of every free-evolution segment of every iteration.
inline std::pair<Mat2, Mat2> brute_force_propagators(const NuclearSpin& spin, const Register& reg,
                                                     const SequencePlan& plan) {
  const auto [h0, h1] = conditional_hamiltonians(spin, reg);
  const Mat2 h[2] = {h0, h1};
  Mat2 v[2] = {Mat2::Identity(), Mat2::Identity()};
  for (const auto& block : plan.blocks) {
    block.validate();
    std::vector<double> cuts{0.0};
    cuts.insert(cuts.end(), block.unit.pulse_fractions.begin(), block.unit.pulse_fractions.end());
    cuts.push_back(1.0);
    Mat2 unit[2] = {Mat2::Identity(), Mat2::Identity()};
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      const double tau = (cuts[i + 1] - cuts[i]) * block.t;
      for (int e = 0; e < 2; ++e) unit[e] = expm_hermitian(h[(e + i) % 2], tau) * unit[e];
    }
    for (long n = 0; n < block.N; ++n)
      for (int e = 0; e < 2; ++e) v[e] = unit[e] * v[e];
  }
  return {v[0], v[1]};
}

// ---------------------------------------------------------------------------
// Dense states
// ---------------------------------------------------------------------------

struct DenseState {
  VecX amplitudes;
  int qubits() const { return detail::qubit_count(amplitudes); }
};

inline void check_dense(const VecX& psi) {
  const int n = detail::qubit_count(psi);
  if (n > dense_qubit_cap)
    throw cap_error("dense oracle limited to " + std::to_string(dense_qubit_cap) + " qubits");
  require(std::abs(psi.squaredNorm() - 1.0) < 1e-12, "dense state is not normalized");
}

// Applies |0><0| x (x_l V0^(l)) + |1><1| x (x_l V1^(l)); qubit 0 is the electron.
inline VecX apply_conditional(const std::vector<std::pair<Mat2, Mat2>>& kernels, const VecX& psi) {
  const int n = detail::qubit_count(psi);
  require(static_cast<int>(kernels.size()) == n - 1, "one kernel per nuclear qubit required");
  VecX out = psi;
  const Eigen::Index half = psi.size() / 2;
  for (int l = 0; l < n - 1; ++l) {
    const Eigen::Index stride = Eigen::Index(1) << (n - 2 - l);
    for (Eigen::Index i = 0; i < psi.size(); ++i) {
      if (i & stride) continue;
      const Mat2& k = i < half ? kernels[l].first : kernels[l].second;
      const cplx a = out[i], b = out[i + stride];
      out[i] = k(0, 0) * a + k(0, 1) * b;
      out[i + stride] = k(1, 0) * a + k(1, 1) * b;
    }
  }
  return out;
}

/// Full electron + register evolution under the plan, built from segment exponentials.
inline DenseState evolve_dense(const Register& reg, const SequencePlan& plan, const DenseState& initial) {
  check_dense(initial.amplitudes);
  require(initial.qubits() == static_cast<int>(reg.size()) + 1, "state must cover electron + register");
  std::vector<std::pair<Mat2, Mat2>> k;
  for (const auto& s : reg.spins) k.push_back(brute_force_propagators(s, reg, plan));
  return {apply_conditional(k, initial.amplitudes)};
}

inline DenseState evolve_rotations(std::span<const ConditionalRotation> rotations, const DenseState& initial) {
  check_dense(initial.amplitudes);
  std::vector<std::pair<Mat2, Mat2>> k;
  for (const auto& cr : rotations) k.emplace_back(cr.r0(), cr.r1());
  return {apply_conditional(k, initial.amplitudes)};
}

/// Reduced density matrix on `keep` (ascending qubit indices, qubit 0 most significant).
inline MatX partial_trace(const VecX& psi, const std::vector<int>& keep) {
  const int n = detail::qubit_count(psi);
  if (n > dense_qubit_cap) throw cap_error("partial_trace beyond dense cap");
  for (std::size_t i = 0; i < keep.size(); ++i) {
    require(keep[i] >= 0 && keep[i] < n, "partial_trace: qubit index out of range");
    require(i == 0 || keep[i] > keep[i - 1], "partial_trace: indices must be ascending and unique");
  }
  const int nk = static_cast<int>(keep.size());
  std::vector<int> traced;
  for (int q = 0; q < n; ++q)
    if (std::find(keep.begin(), keep.end(), q) == keep.end()) traced.push_back(q);
  const Eigen::Index dk = Eigen::Index(1) << nk, dt = Eigen::Index(1) << traced.size();
  MatX psi_mat = MatX::Zero(dk, dt);
  for (Eigen::Index i = 0; i < psi.size(); ++i) {
    Eigen::Index a = 0, b = 0;
    for (int q : keep) a = (a << 1) | ((i >> (n - 1 - q)) & 1);
    for (int q : traced) b = (b << 1) | ((i >> (n - 1 - q)) & 1);
    psi_mat(a, b) = psi[i];
  }
  return psi_mat * psi_mat.adjoint();
}

// ---------------------------------------------------------------------------
// Kraus channel
// ---------------------------------------------------------------------------

/// sum_i E_i rho E_i^dag with E_i = sum_j f_j^(i) |j><j| x (x_targets R_j); unwanted start in |0>.
inline MatX enumerate_kraus_channel(std::span<const ConditionalRotation> targets,
                                    std::span<const ConditionalRotation> unwanted, const MatX& rho) {
  if (static_cast<int>(unwanted.size()) > kraus_unwanted_cap)
    throw cap_error("enumerated channel limited to " + std::to_string(kraus_unwanted_cap) + " unwanted nuclei");
  const Eigen::Index d = Eigen::Index(1) << (targets.size() + 1);
  require(rho.rows() == d && rho.cols() == d, "channel input has wrong dimension");
  const MatX u = cr_unitary(targets);
  const Eigen::Index half = d / 2;
  const auto f = kraus_factors(unwanted).enumerate(kraus_unwanted_cap);
  MatX out = MatX::Zero(d, d);
  for (const auto& fr : f) {
    MatX e = MatX::Zero(d, d);
    e.topLeftCorner(half, half) = fr[0] * u.topLeftCorner(half, half);
    e.bottomRightCorner(half, half) = fr[1] * u.bottomRightCorner(half, half);
    out += e * rho * e.adjoint();
  }
  return out;
}

inline MatX kraus_completeness(std::span<const ConditionalRotation> targets,
                               std::span<const ConditionalRotation> unwanted) {
  const Eigen::Index d = Eigen::Index(1) << (targets.size() + 1);
  const MatX u = cr_unitary(targets);
  const Eigen::Index half = d / 2;
  MatX sum = MatX::Zero(d, d);
  for (const auto& fr : kraus_factors(unwanted).enumerate(kraus_unwanted_cap)) {
    MatX e = MatX::Zero(d, d);
    e.topLeftCorner(half, half) = fr[0] * u.topLeftCorner(half, half);
    e.bottomRightCorner(half, half) = fr[1] * u.bottomRightCorner(half, half);
    sum += e.adjoint() * e;
  }
  return sum;
}

/// Channel entangling power from the explicit Kraus double sum.
inline double kraus_double_sum_ep(std::span<const ConditionalRotation> targets,
                                  std::span<const ConditionalRotation> unwanted, std::size_t cap = 20) {
  const auto f = kraus_factors(unwanted).enumerate(cap);
  double s = 0.0;
  for (const auto& fr : f)
    for (const auto& fs : f)
      s += (std::conj(fr[0]) * std::conj(fs[1]) * fr[1] * fs[0]).real();
  return mway_ep_unitary(targets) * 0.5 * (1.0 + s);
}

// ---------------------------------------------------------------------------
// Doubled-space projectors
// ---------------------------------------------------------------------------

namespace detail2 {

// Operator on a doubled-space vector stored as X(r, c), r = copy-1 index, c = copy-2 index.
inline MatX swap_pair(const MatX& x, int M, int j) {
  const Eigen::Index bit = Eigen::Index(1) << (M - 1 - j);
  MatX y(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r)
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      Eigen::Index r2 = r, c2 = c;
      if (((r & bit) != 0) != ((c & bit) != 0)) {
        r2 ^= bit;
        c2 ^= bit;
      }
      y(r2, c2) = x(r, c);
    }
  return y;
}

inline bool pair_symmetric(int M, int j) { return j == 0 && M % 2 == 1; }

inline MatX apply_p_tilde(MatX x, int M) {
  for (int j = 0; j < M; ++j) {
    const MatX s = swap_pair(x, M, j);
    x = pair_symmetric(M, j) ? MatX(0.5 * (x + s)) : MatX(0.5 * (x - s));
  }
  return x;
}

// Column s of the isometry onto (x)_j Sym^2(pair j), as an X(r, c) matrix.
inline MatX sym_basis(int M, std::size_t label) {
  MatX x = MatX::Ones(1, 1);
  for (int j = 0; j < M; ++j) {
    const int s = static_cast<int>(label % 3);
    label /= 3;
    Eigen::Matrix2cd w = Eigen::Matrix2cd::Zero();
    if (s == 0) w(0, 0) = 1.0;
    if (s == 1) w(1, 1) = 1.0;
    if (s == 2) w(0, 1) = w(1, 0) = 1.0 / std::sqrt(2.0);
    MatX next(x.rows() * 2, x.cols() * 2);
    for (Eigen::Index a = 0; a < x.rows(); ++a)
      for (Eigen::Index b = 0; b < x.cols(); ++b)
        next.block(2 * a, 2 * b, 2, 2) = x(a, b) * w;
    x = std::move(next);
  }
  return x;
}

}  // namespace detail2

/// 2^M Tr[rho^(x)2 P~] for a pure state.
inline double tangle_via_projectors(const VecX& psi, int M) {
  if (M > projector_qubit_cap) throw cap_error("projector tangle limited to 7 qubits");
  require(psi.size() == (Eigen::Index(1) << M), "state dimension != 2^M");
  const MatX x = psi * psi.transpose();
  return std::ldexp(detail2::apply_p_tilde(x, M).squaredNorm(), M);
}

/// 2^M Tr[U^(x)2 Omega (U^dag)^(x)2 P~] with Omega = 3^-M prod P+; evaluated as
/// 2^M 3^-M sum_w |P~ (U x U) w|^2 over an orthonormal basis w of the range of prod P+.
inline double trace_form_entangling_power(const MatX& u, int M) {
  if (M > projector_qubit_cap) throw cap_error("trace-form EP limited to 7 qubits");
  require(u.rows() == (Eigen::Index(1) << M) && u.cols() == u.rows(), "U must be 2^M x 2^M");
  const std::size_t cols = static_cast<std::size_t>(std::pow(3, M));
  double s = 0.0;
  for (std::size_t c = 0; c < cols; ++c) {
    const MatX w = detail2::sym_basis(M, c);
    s += detail2::apply_p_tilde(u * w * u.transpose(), M).squaredNorm();
  }
  return std::ldexp(s, M) / std::pow(3.0, M);
}

/// Same trace form for the channel: sum over Kraus pairs (E_r x E_s).
inline double channel_trace_form_ep(std::span<const ConditionalRotation> targets,
                                    std::span<const ConditionalRotation> unwanted) {
  const int M = static_cast<int>(targets.size()) + 1;
  if (M > projector_qubit_cap) throw cap_error("trace-form EP limited to 7 qubits");
  const MatX u = cr_unitary(targets);
  const Eigen::Index d = u.rows(), half = d / 2;
  std::vector<MatX> e;
  for (const auto& fr : kraus_factors(unwanted).enumerate(kraus_unwanted_cap)) {
    MatX k = MatX::Zero(d, d);
    k.topLeftCorner(half, half) = fr[0] * u.topLeftCorner(half, half);
    k.bottomRightCorner(half, half) = fr[1] * u.bottomRightCorner(half, half);
    e.push_back(std::move(k));
  }
  const std::size_t cols = static_cast<std::size_t>(std::pow(3, M));
  double s = 0.0;
  for (std::size_t c = 0; c < cols; ++c) {
    const MatX w = detail2::sym_basis(M, c);
    for (const auto& er : e)
      for (const auto& es : e) s += detail2::apply_p_tilde(er * w * es.transpose(), M).squaredNorm();
  }
  return std::ldexp(s, M) / std::pow(3.0, M);
}

/// Explicit 4^M x 4^M matrices of the doubled-space operators.
struct ProjectorPair {
  int M = 0;
  std::vector<MatX> swap, p_plus, p_minus;
  MatX p_tilde, omega;
};

inline ProjectorPair build_projector_pair(int M) {
  if (M > dense_projector_cap) throw cap_error("dense projector matrices limited to M <= 4");
  require(M >= 2, "projector pair needs M >= 2");
  ProjectorPair p;
  p.M = M;
  const Eigen::Index dim = Eigen::Index(1) << (2 * M);
  const Eigen::Index half = Eigen::Index(1) << M;
  const MatX id = MatX::Identity(dim, dim);
  p.p_tilde = id;
  MatX plus_all = id;
  for (int j = 0; j < M; ++j) {
    MatX s = MatX::Zero(dim, dim);
    for (Eigen::Index col = 0; col < dim; ++col) {
      MatX x = MatX::Zero(half, half);
      x(col / half, col % half) = 1.0;
      const MatX y = detail2::swap_pair(x, M, j);
      for (Eigen::Index r = 0; r < half; ++r)
        for (Eigen::Index c = 0; c < half; ++c) s(r * half + c, col) = y(r, c);
    }
    p.swap.push_back(s);
    p.p_plus.push_back(0.5 * (id + s));
    p.p_minus.push_back(0.5 * (id - s));
    p.p_tilde = p.p_tilde * (detail2::pair_symmetric(M, j) ? p.p_plus.back() : p.p_minus.back());
    plus_all = plus_all * p.p_plus.back();
  }
  p.omega = plus_all / std::pow(3.0, M);
  return p;
}

/// Eq.-style dense evaluation 2^M Tr[(U x U) Omega (U x U)^dag P~].
inline double dense_trace_form_entangling_power(const MatX& u, const ProjectorPair& p) {
  const Eigen::Index half = u.rows();
  const Eigen::Index dim = half * half;
  MatX uu(dim, dim);
  for (Eigen::Index a = 0; a < half; ++a)
    for (Eigen::Index b = 0; b < half; ++b) uu.block(a * half, b * half, half, half) = u(a, b) * u;
  return std::ldexp((uu * p.omega * uu.adjoint() * p.p_tilde).trace().real(), p.M);
}

// ---------------------------------------------------------------------------
// Monte Carlo entangling power
// ---------------------------------------------------------------------------

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

inline constexpr std::size_t mc_chunk = 512;

/// Average of mtangle_pure over Haar product inputs. Chunk c draws from an mt19937_64
/// seeded with (seed, c), so the estimate does not depend on the worker count.
inline McEstimate mc_entangling_power(std::span<const ConditionalRotation> targets, std::size_t samples,
                                      std::uint64_t seed, unsigned threads = 1) {
  const int M = static_cast<int>(targets.size()) + 1;
  if (M > projector_qubit_cap) throw cap_error("Monte-Carlo EP limited to 7 qubits");
  require(samples >= 1000, "Monte-Carlo EP needs at least 1000 samples");
  const std::size_t chunks = (samples + mc_chunk - 1) / mc_chunk;
  std::vector<double> sum(chunks, 0.0), sum2(chunks, 0.0);
  std::vector<std::pair<Mat2, Mat2>> k;
  for (const auto& cr : targets) k.emplace_back(cr.r0(), cr.r1());
  parallel_for(chunks, threads, [&](std::size_t c) {
    std::seed_seq ss{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                     static_cast<std::uint32_t>(c)};
    std::mt19937_64 rng(ss);
    const std::size_t n = std::min(mc_chunk, samples - c * mc_chunk);
    std::vector<Qubit> q(M);
    for (std::size_t i = 0; i < n; ++i) {
      for (auto& x : q) x = haar_qubit(rng);
      const VecX psi = apply_conditional(k, product_state(q));
      const double tau = mtangle_pure(psi, M, true);
      sum[c] += tau;
      sum2[c] += tau * tau;
    }
  });
  double s = 0.0, s2 = 0.0;
  for (std::size_t c = 0; c < chunks; ++c) {
    s += sum[c];
    s2 += sum2[c];
  }
  const double n = static_cast<double>(samples);
  const double mean = s / n;
  const double var = std::max(0.0, (s2 / n - mean * mean) * n / (n - 1.0));
  return {mean, std::sqrt(var / n), samples};
}

}  // namespace ghzdd::oracle

#endif
