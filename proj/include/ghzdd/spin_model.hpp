#ifndef GHZDD_SPIN_MODEL_HPP
#define GHZDD_SPIN_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "ghzdd/core.hpp"

namespace ghzdd {

inline constexpr double kilohertz = two_pi * 1e3;  // kHz -> rad/s
inline constexpr double microsecond = 1e-6;

// Default nuclear Larmor frequency, 2pi x 431.94 kHz (13C at roughly 403 G).
inline constexpr double default_omega_larmor = 431.94 * kilohertz;

/// Hyperfine-coupled nucleus; A and B are angular frequencies in rad/s.
struct NuclearSpin {
  std::string label;
  double A = 0.0;
  double B = 0.0;
};

/// Ordered nuclear register sharing one Larmor frequency.
struct Register {
  std::vector<NuclearSpin> spins;
  double omega_larmor = default_omega_larmor;

  Register() = default;
  Register(std::vector<NuclearSpin> s, double omega) : spins(std::move(s)), omega_larmor(omega) {
    validate();
  }

  void validate() const {
    require(!spins.empty(), "register is empty");
    require(omega_larmor > 0.0 && std::isfinite(omega_larmor), "omega_larmor must be positive");
    std::unordered_set<std::string> seen;
    for (const auto& s : spins) {
      require(!s.label.empty(), "spin label is empty");
      require(s.B >= 0.0, "spin " + s.label + ": B must be non-negative");
      require(std::isfinite(s.A) && std::isfinite(s.B), "spin " + s.label + ": non-finite coupling");
      require(seen.insert(s.label).second, "duplicate spin label " + s.label);
    }
  }

  std::size_t size() const { return spins.size(); }

  std::size_t index_of(const std::string& label) const {
    for (std::size_t i = 0; i < spins.size(); ++i)
      if (spins[i].label == label) return i;
    throw config_error("unknown spin label " + label);
  }

  const NuclearSpin& at(const std::string& label) const { return spins[index_of(label)]; }
};

enum class UnitKind { cpmg, udd, custom };

/// One pi-pulse unit of duration t; pulses sit at fractions of t.
struct SequenceUnit {
  UnitKind kind = UnitKind::cpmg;
  int order = 2;
  std::vector<double> pulse_fractions{0.25, 0.75};

  static SequenceUnit cpmg() { return {}; }

  // Uhrig spacing sin^2(k pi / (2n + 2)), k = 1..n.
  static SequenceUnit udd(int n) {
    require(n >= 1, "UDD order must be >= 1");
    SequenceUnit u;
    u.kind = UnitKind::udd;
    u.order = n;
    u.pulse_fractions.clear();
    for (int k = 1; k <= n; ++k) {
      const double s = std::sin(k * pi / (2.0 * n + 2.0));
      u.pulse_fractions.push_back(s * s);
    }
    return u;
  }

  static SequenceUnit custom(std::vector<double> fractions) {
    SequenceUnit u;
    u.kind = UnitKind::custom;
    u.order = static_cast<int>(fractions.size());
    u.pulse_fractions = std::move(fractions);
    return u;
  }

  // An even pulse count returns the electron to its initial state, keeping the
  // evolution of controlled-rotation form across repeated units.
  void validate() const {
    require(!pulse_fractions.empty(), "unit has no pulses");
    require(pulse_fractions.size() % 2 == 0, "unit must contain an even number of pi-pulses");
    double prev = 0.0;
    for (double f : pulse_fractions) {
      require(f > prev && f < 1.0, "pulse fractions must be strictly increasing inside (0,1)");
      prev = f;
    }
  }

  std::string name() const {
    switch (kind) {
      case UnitKind::cpmg: return "CPMG";
      case UnitKind::udd: return "UDD" + std::to_string(order);
      default: return "custom";
    }
  }
};

struct SequenceBlock {
  SequenceUnit unit;
  double t = 0.0;  // seconds
  long N = 1;

  double duration() const { return static_cast<double>(N) * t; }
  void validate() const {
    unit.validate();
    require(t > 0.0 && std::isfinite(t), "unit time must be positive");
    require(N >= 1, "iterations must be >= 1");
  }
};

struct SequencePlan {
  std::vector<SequenceBlock> blocks;

  double total_time() const {
    double T = 0.0;
    for (const auto& b : blocks) T += b.duration();
    return T;
  }
  void validate() const {
    for (const auto& b : blocks) b.validate();
  }
};

struct AxisAngle {
  double phi = 0.0;          // [0, 2pi)
  Vec3 n{0.0, 0.0, 1.0};     // canonical: first nonzero component positive
  int sign = 1;              // V = sign * exp(-i phi/2 sigma.n) after phase removal
};

/// Axis-angle form of a 2x2 unitary, global phase removed.
inline AxisAngle extract_axis_angle(const Mat2& v_in, double tol = 1e-8) {
  require(unitarity_defect(v_in) < tol, "extract_axis_angle: input is not unitary");
  Mat2 v = v_in;
  const cplx det = v.determinant();
  if (std::abs(det - 1.0) > 1e-14) v *= std::exp(-0.5 * I_unit * std::arg(det));
  Quat q = to_quat(v);
  int sign = 1;
  const double comps[3] = {q.x, q.y, q.z};
  const double s = std::sqrt(q.x * q.x + q.y * q.y + q.z * q.z);
  AxisAngle out;
  if (s < 1e-15) {
    if (q.w < 0) sign = -1;
    out.sign = sign;
    return out;
  }
  // Flip the quaternion so the axis has a positive leading component.
  for (double c : comps) {
    if (std::abs(c) > 1e-15 * s) {
      if (c < 0) sign = -1;
      break;
    }
  }
  if (sign < 0) q = {-q.w, -q.x, -q.y, -q.z};
  out.sign = sign;
  out.phi = 2.0 * std::atan2(s, q.w);
  if (out.phi >= two_pi) out.phi -= two_pi;
  out.n = Vec3(q.x, q.y, q.z) / s;
  return out;
}

/// Electron-conditioned nuclear rotations (phi_j, n_j); the SU(2) sign is kept
/// so that branch-relative phases survive the round trip.
struct ConditionalRotation {
  double phi0 = 0.0, phi1 = 0.0;
  Vec3 n0{0.0, 0.0, 1.0}, n1{0.0, 0.0, 1.0};
  int sign0 = 1, sign1 = 1;

  static ConditionalRotation from_propagators(const Mat2& v0, const Mat2& v1) {
    const AxisAngle a = extract_axis_angle(v0), b = extract_axis_angle(v1);
    return {a.phi, b.phi, a.n, b.n, a.sign, b.sign};
  }
  static ConditionalRotation unconditional(const Mat2& v) { return from_propagators(v, v); }

  Mat2 r0() const { return double(sign0) * su2_rotation(phi0, n0); }
  Mat2 r1() const { return double(sign1) * su2_rotation(phi1, n1); }
  Mat2 r(int branch) const { return branch == 0 ? r0() : r1(); }
  double axis_dot() const { return n0.dot(n1); }
};

/// H0 = (wL/2) sz, H1 = ((wL + A)/2) sz + (B/2) sx.
inline std::pair<Mat2, Mat2> conditional_hamiltonians(const NuclearSpin& spin, const Register& reg) {
  require(reg.omega_larmor > 0.0, "omega_larmor must be positive");
  const Mat2 h0 = 0.5 * reg.omega_larmor * pauli::z();
  const Mat2 h1 = 0.5 * (reg.omega_larmor + spin.A) * pauli::z() + 0.5 * spin.B * pauli::x();
  return {h0, h1};
}

/// Nuclear propagators for one unit with the electron starting in |0> (V0) or |1> (V1).
inline std::pair<Mat2, Mat2> unit_propagators(const NuclearSpin& spin, const Register& reg,
                                              const SequenceUnit& unit, double t) {
  unit.validate();
  require(t > 0.0 && std::isfinite(t), "unit time must be positive");
  const double hz[2] = {reg.omega_larmor, reg.omega_larmor + spin.A};
  const double hx[2] = {0.0, spin.B};
  Mat2 v[2] = {Mat2::Identity(), Mat2::Identity()};
  double start = 0.0;
  const std::size_t segments = unit.pulse_fractions.size() + 1;
  for (std::size_t i = 0; i < segments; ++i) {
    const double stop = i < unit.pulse_fractions.size() ? unit.pulse_fractions[i] : 1.0;
    const double tau = (stop - start) * t;
    for (int e = 0; e < 2; ++e) {
      const int branch = (e + static_cast<int>(i)) % 2;
      v[e] = precession(hx[branch], hz[branch], tau) * v[e];
    }
    start = stop;
  }
  return {v[0], v[1]};
}

inline std::pair<Mat2, Mat2> block_propagators(const NuclearSpin& spin, const Register& reg,
                                               const SequenceBlock& block) {
  block.validate();
  auto [v0, v1] = unit_propagators(spin, reg, block.unit, block.t);
  return {su2_power(v0, block.N), su2_power(v1, block.N)};
}

/// Time-ordered product of all blocks of the plan for one nucleus.
inline std::pair<Mat2, Mat2> plan_propagators(const NuclearSpin& spin, const Register& reg,
                                              const SequencePlan& plan) {
  Mat2 v0 = Mat2::Identity(), v1 = Mat2::Identity();
  for (const auto& b : plan.blocks) {
    auto [b0, b1] = block_propagators(spin, reg, b);
    v0 = b0 * v0;
    v1 = b1 * v1;
  }
  return {v0, v1};
}

inline ConditionalRotation compose_sequence(const NuclearSpin& spin, const Register& reg,
                                            const SequencePlan& plan) {
  plan.validate();
  auto [v0, v1] = plan_propagators(spin, reg, plan);
  return ConditionalRotation::from_propagators(v0, v1);
}

inline std::vector<ConditionalRotation> compose_register(const Register& reg,
                                                         const SequencePlan& plan) {
  std::vector<ConditionalRotation> out;
  out.reserve(reg.size());
  for (const auto& s : reg.spins) out.push_back(compose_sequence(s, reg, plan));
  return out;
}

/// Analytic CPMG resonance estimate (2k-1) 2pi / (wL + A/2); used only to centre scans.
inline double resonance_seed(const NuclearSpin& spin, const Register& reg, int k) {
  return (2.0 * k - 1.0) * two_pi / (reg.omega_larmor + 0.5 * spin.A);
}

struct Resonance {
  int k = 0;
  double t_k = 0.0;
  std::vector<double> grid;
};

// n0.n1 of the two unit rotation axes; +1 when either rotation is trivial.
inline double unit_axis_dot(const Mat2& v0, const Mat2& v1) {
  const Quat p = to_quat(v0), q = to_quat(v1);
  const double sp = std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z);
  const double sq = std::sqrt(q.x * q.x + q.y * q.y + q.z * q.z);
  if (sp == 0.0 || sq == 0.0) return 1.0;
  return (p.x * q.x + p.y * q.y + p.z * q.z) / (sp * sq);
}

/// Locates the most anti-parallel unit axes near each seed (the point where the iterated
/// G1 can reach 0) and returns the fine grid around it. Orders without an interior
/// minimum are omitted.
inline std::vector<Resonance> scan_resonances(const NuclearSpin& spin, const Register& reg,
                                              const SequenceUnit& unit, int k_max, double window,
                                              double grid_step) {
  require(k_max >= 1, "k_max must be >= 1");
  require(window > 0.0, "window must be positive");
  require(grid_step > 0.0, "grid_step must be positive");
  unit.validate();
  std::vector<Resonance> out;
  if (spin.B == 0.0) return out;
  const double half_span = pi / (reg.omega_larmor + 0.5 * spin.A);
  for (int k = 1; k <= k_max; ++k) {
    const double seed = resonance_seed(spin, reg, k);
    const long steps = static_cast<long>(std::floor(half_span / grid_step));
    double best_t = 0.0, best_g = 2.0;
    long best_i = 0;
    for (long i = -steps; i <= steps; ++i) {
      const double t = seed + static_cast<double>(i) * grid_step;
      if (t <= 0.0) continue;
      auto [v0, v1] = unit_propagators(spin, reg, unit, t);
      const double g = unit_axis_dot(v0, v1);
      if (g < best_g) {
        best_g = g;
        best_t = t;
        best_i = i;
      }
    }
    if (best_g >= 0.0 || best_i == -steps || best_i == steps) continue;
    Resonance r;
    r.k = k;
    r.t_k = best_t;
    const long half = std::lround(window / grid_step);
    for (long i = -half; i <= half; ++i) {
      const double t = best_t + static_cast<double>(i) * grid_step;
      if (t > 0.0) r.grid.push_back(t);
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace ghzdd

#endif
