#ifndef GHZDD_CORE_HPP
#define GHZDD_CORE_HPP

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ghzdd {

using cplx = std::complex<double>;
using Mat2 = Eigen::Matrix2cd;
using Vec3 = Eigen::Vector3d;
using VecX = Eigen::VectorXcd;
using MatX = Eigen::MatrixXcd;

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;
inline constexpr cplx I_unit{0.0, 1.0};

// Bad input: malformed files, out-of-range parameters, violated preconditions.
class config_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A computed quantity left its admissible range by more than roundoff.
class invariant_error : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Requested size exceeds a hard cap of a brute-force backend.
class cap_error : public std::length_error {
 public:
  using std::length_error::length_error;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw config_error(what);
}

inline void ensure(bool ok, const std::string& what) {
  if (!ok) throw invariant_error(what);
}

// Clamp into [lo, hi] when the excursion is below `slack`; larger excursions throw.
inline double clamp_checked(double v, double lo, double hi, const char* name,
                            double slack = 1e-12) {
  if (v < lo - slack || v > hi + slack || std::isnan(v))
    throw invariant_error(std::string(name) + " out of range: " + std::to_string(v));
  return v < lo ? lo : (v > hi ? hi : v);
}

namespace pauli {
inline Mat2 id() { return Mat2::Identity(); }
inline Mat2 x() {
  Mat2 m;
  m << 0, 1, 1, 0;
  return m;
}
inline Mat2 y() {
  Mat2 m;
  m << 0, -I_unit, I_unit, 0;
  return m;
}
inline Mat2 z() {
  Mat2 m;
  m << 1, 0, 0, -1;
  return m;
}
}  // namespace pauli

inline double unitarity_defect(const MatX& u) {
  return (u.adjoint() * u - MatX::Identity(u.rows(), u.cols())).norm();
}

// exp(-i angle/2 sigma.n) for unit n.
inline Mat2 su2_rotation(double angle, const Vec3& n) {
  const double c = std::cos(angle / 2), s = std::sin(angle / 2);
  Mat2 m;
  m << cplx(c, -s * n.z()), cplx(-s * n.y(), -s * n.x()), cplx(s * n.y(), -s * n.x()),
      cplx(c, s * n.z());
  return m;
}

// exp(-i tau H) for H = (hx sigma_x + hz sigma_z)/2.
inline Mat2 precession(double hx, double hz, double tau) {
  const double w = std::hypot(hx, hz);
  if (w == 0.0) return Mat2::Identity();
  const double c = std::cos(w * tau / 2), s = std::sin(w * tau / 2);
  const double nx = hx / w, nz = hz / w;
  Mat2 m;
  m << cplx(c, -s * nz), cplx(0, -s * nx), cplx(0, -s * nx), cplx(c, s * nz);
  return m;
}

// Quaternion components (w, x, y, z) of V = w I - i (x sx + y sy + z sz); V must be SU(2).
struct Quat {
  double w, x, y, z;
};

inline Quat to_quat(const Mat2& v) {
  return {0.5 * (v(0, 0) + v(1, 1)).real(), -0.5 * (v(0, 1) + v(1, 0)).imag(),
          0.5 * (v(1, 0) - v(0, 1)).real(), -0.5 * (v(0, 0) - v(1, 1)).imag()};
}

inline Mat2 from_quat(const Quat& q) {
  Mat2 m;
  m << cplx(q.w, -q.z), cplx(-q.y, -q.x), cplx(q.y, -q.x), cplx(q.w, q.z);
  return m;
}

// V^n for V in SU(2), exact up to roundoff in the half-angle.
inline Mat2 su2_power(const Mat2& v, long n) {
  const Quat q = to_quat(v);
  const double s = std::sqrt(q.x * q.x + q.y * q.y + q.z * q.z);
  const double half = std::atan2(s, q.w);
  const double c_n = std::cos(n * half), s_n = std::sin(n * half);
  if (s == 0.0) return from_quat({c_n, 0, 0, 0});
  return from_quat({c_n, s_n * q.x / s, s_n * q.y / s, s_n * q.z / s});
}

// |Tr(V0^dag V1)/2|^2 for SU(2) inputs: the Makhlin invariant of the conditional pair.
inline double g1_of(const Mat2& v0, const Mat2& v1) {
  const cplx t = (v0.adjoint() * v1).trace() / 2.0;
  return std::norm(t);
}

}  // namespace ghzdd

#endif
