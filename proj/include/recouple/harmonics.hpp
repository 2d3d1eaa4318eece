#pragma once

// Real solid spherical harmonics, rotations and real Wigner D-matrices.
//
// Component order inside a degree-l block is m = -l..l. Normalized components are
// r^l Y_lm with orthonormal real Y_lm and no Condon-Shortley sign, which gives
//
//   l = 1 : (y, z, x) * sqrt(3 / 4pi)
//   l = 2 : (xy, yz, 3z^2 - r^2, xz, x^2 - y^2) up to per-component constants.
//
// Raw components are the same polynomials rescaled so that their integer coefficients are
// coprime with the sign of the normalized harmonic. For l <= 2 this reproduces the list
// above verbatim, and raw = normalized / raw_scale. See docs/conventions.md.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "recouple/errors.hpp"
#include "recouple/rng.hpp"

namespace recouple {

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;
template <typename Scalar>
using Positions = Eigen::Matrix<Scalar, Eigen::Dynamic, 3, Eigen::RowMajor>;
template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

constexpr int sh_size(int l_max) { return (l_max + 1) * (l_max + 1); }
constexpr int sh_offset(int l) { return l * l; }

struct HarmonicConstants {
  int l_max = 0;
  std::vector<double> normalization;  // k_lm, indexed l*l + l + m
  std::vector<double> raw_scale;      // normalized / raw
};

const HarmonicConstants& harmonic_constants(int l_max);

enum class ShMode { Raw, Normalized };

/// Writes normalized solid harmonics of degrees 0..l_max at (x, y, z) into out[0 .. (l_max+1)^2).
/// `k` must come from harmonic_constants(L) with L >= l_max.
template <typename Scalar>
void solid_sh_into(const HarmonicConstants& k, int l_max, Scalar x, Scalar y, Scalar z,
                   Scalar* out) {
  const Scalar r2 = x * x + y * y + z * z;
  // a[m] = Re (x+iy)^m, b[m] = Im (x+iy)^m
  Scalar a[64], b[64], q[64];  // l_max < 64 (capacity is far lower)
  a[0] = 1;
  b[0] = 0;
  for (int m = 1; m <= l_max; ++m) {
    a[m] = x * a[m - 1] - y * b[m - 1];
    b[m] = x * b[m - 1] + y * a[m - 1];
  }
  for (int m = 0; m <= l_max; ++m) {
    // q[l] = r^(l-m) P_l^(m)(z/r), the m-th derivative of the Legendre polynomial, homogenized.
    Scalar double_fact = 1;
    for (int t = 1; t <= 2 * m - 1; t += 2) double_fact *= t;
    q[m] = double_fact;
    if (m + 1 <= l_max) q[m + 1] = (2 * m + 1) * z * q[m];
    for (int l = m + 2; l <= l_max; ++l)
      q[l] = ((2 * l - 1) * z * q[l - 1] - (l + m - 1) * r2 * q[l - 2]) / (l - m);
    for (int l = m; l <= l_max; ++l) {
      const int base = l * l + l;
      if (m == 0) {
        out[base] = static_cast<Scalar>(k.normalization[base]) * q[l];
      } else {
        out[base + m] = static_cast<Scalar>(k.normalization[base + m]) * q[l] * a[m];
        out[base - m] = static_cast<Scalar>(k.normalization[base - m]) * q[l] * b[m];
      }
    }
  }
}

template <typename Scalar>
void solid_sh_into(int l_max, Scalar x, Scalar y, Scalar z, Scalar* out) {
  solid_sh_into<Scalar>(harmonic_constants(l_max), l_max, x, y, z, out);
}

/// Per-node table of solid harmonics, row i holding blocks l = 0..l_max.
template <typename Scalar>
struct SolidHarmonicsTable {
  int l_max = 0;
  ShMode mode = ShMode::Normalized;
  RowMatrix<Scalar> values;

  Eigen::Index nodes() const { return values.rows(); }
  auto block(Eigen::Index node, int l) const {
    return values.row(node).segment(sh_offset(l), 2 * l + 1);
  }
  auto block(Eigen::Index node, int l) { return values.row(node).segment(sh_offset(l), 2 * l + 1); }
  const Scalar* data(Eigen::Index node, int l) const {
    return values.data() + node * values.cols() + sh_offset(l);
  }
};

template <typename Scalar>
void to_raw(SolidHarmonicsTable<Scalar>& table) {
  if (table.mode == ShMode::Raw) return;
  const auto& k = harmonic_constants(table.l_max);
  for (Eigen::Index c = 0; c < table.values.cols(); ++c)
    table.values.col(c) /= static_cast<Scalar>(k.raw_scale[c]);
  table.mode = ShMode::Raw;
}

/// Solid harmonics for every row of `positions`.
template <typename Scalar>
SolidHarmonicsTable<Scalar> solid_sh(int l_max, const Positions<Scalar>& positions,
                                     ShMode mode = ShMode::Normalized) {
  SolidHarmonicsTable<Scalar> table;
  table.l_max = l_max;
  table.values.resize(positions.rows(), sh_size(l_max));
  const auto& k = harmonic_constants(l_max);
  for (Eigen::Index i = 0; i < positions.rows(); ++i)
    solid_sh_into<Scalar>(k, l_max, positions(i, 0), positions(i, 1), positions(i, 2),
                          table.values.row(i).data());
  if (mode == ShMode::Raw) to_raw(table);
  return table;
}

template <typename Scalar>
SolidHarmonicsTable<Scalar> solid_sh(int l_max, const Vector3<Scalar>& r,
                                     ShMode mode = ShMode::Normalized) {
  Positions<Scalar> p(1, 3);
  p.row(0) = r.transpose();
  return solid_sh<Scalar>(l_max, p, mode);
}

/// Degree-l block only, normalized.
template <typename Scalar>
VectorX<Scalar> solid_sh_block(int l, const Vector3<Scalar>& r) {
  VectorX<Scalar> all(sh_size(l));
  solid_sh_into<Scalar>(l, r.x(), r.y(), r.z(), all.data());
  return all.segment(sh_offset(l), 2 * l + 1);
}

/// Angular harmonics Y_lm(r / |r|); undefined at the origin.
template <typename Scalar>
VectorX<Scalar> angular_sh(int l_max, const Vector3<Scalar>& r) {
  const Scalar norm = r.norm();
  if (!(norm > 0)) throw std::domain_error("angular harmonics are undefined at r = 0");
  VectorX<Scalar> out(sh_size(l_max));
  const Vector3<Scalar> u = r / norm;
  solid_sh_into<Scalar>(l_max, u.x(), u.y(), u.z(), out.data());
  return out;
}

/// max_m |R1_m(ri - rj) - (R1_m(ri) - R1_m(rj))|, or the same check at another degree.
template <typename Scalar>
Scalar additivity_check(const Vector3<Scalar>& ri, const Vector3<Scalar>& rj, int l = 1) {
  const VectorX<Scalar> lhs = solid_sh_block<Scalar>(l, ri - rj);
  const VectorX<Scalar> rhs = solid_sh_block<Scalar>(l, ri) - solid_sh_block<Scalar>(l, rj);
  return (lhs - rhs).cwiseAbs().maxCoeff();
}

/// Proper rotation; the constructor rejects anything that is not orthonormal with det +1.
template <typename Scalar>
class Rotation {
 public:
  Rotation() : m_(Matrix3<Scalar>::Identity()) {}
  explicit Rotation(const Matrix3<Scalar>& m) : m_(m) {
    const Scalar tol = std::is_same_v<Scalar, float> ? Scalar(1e-5) : Scalar(1e-12);
    if ((m.transpose() * m - Matrix3<Scalar>::Identity()).cwiseAbs().maxCoeff() > tol ||
        std::abs(m.determinant() - Scalar(1)) > tol)
      throw std::invalid_argument("matrix is not a proper rotation");
  }

  static Rotation identity() { return Rotation(); }

  static Rotation about_axis(const Vector3<Scalar>& axis, Scalar angle) {
    return Rotation(Eigen::AngleAxis<Scalar>(angle, axis.normalized()).toRotationMatrix());
  }

  /// Haar-uniform rotation from three uniforms (Shoemake).
  static Rotation random(CounterRng& rng) {
    const double u1 = rng.uniform(), u2 = rng.uniform(), u3 = rng.uniform();
    const double two_pi = 2.0 * std::numbers::pi;
    const Eigen::Quaterniond q(std::sqrt(u1) * std::cos(two_pi * u3),
                               std::sqrt(1 - u1) * std::sin(two_pi * u2),
                               std::sqrt(1 - u1) * std::cos(two_pi * u2),
                               std::sqrt(u1) * std::sin(two_pi * u3));
    return Rotation(q.normalized().toRotationMatrix().template cast<Scalar>());
  }

  const Matrix3<Scalar>& matrix() const { return m_; }
  Rotation transpose() const { return Rotation(Matrix3<Scalar>(m_.transpose())); }
  Rotation operator*(const Rotation& other) const {
    return Rotation(Matrix3<Scalar>(m_ * other.m_));
  }
  Vector3<Scalar> operator*(const Vector3<Scalar>& v) const { return m_ * v; }

 private:
  Matrix3<Scalar> m_;
};

template <typename Scalar>
Positions<Scalar> rotate_cloud(const Positions<Scalar>& positions, const Rotation<Scalar>& rot) {
  return positions * rot.matrix().transpose();
}

/// Real Wigner D-matrix of one degree: solid_sh(l, R r) = matrix * solid_sh(l, r).
template <typename Scalar>
struct WignerD {
  int degree = 0;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> matrix;
  double condition = 1.0;  // of the sample matrix used in the fit
};

namespace detail {

// Fibonacci lattice on the unit sphere.
inline Eigen::Matrix<double, Eigen::Dynamic, 3> fibonacci_sphere(int n) {
  Eigen::Matrix<double, Eigen::Dynamic, 3> p(n, 3);
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int k = 0; k < n; ++k) {
    const double z = 1.0 - (2.0 * k + 1.0) / n;
    const double s = std::sqrt(1.0 - z * z);
    p(k, 0) = s * std::cos(golden * k);
    p(k, 1) = s * std::sin(golden * k);
    p(k, 2) = z;
  }
  return p;
}

}  // namespace detail

/// Least-squares fit of D on a fixed spread of sample directions, evaluated before and
/// after rotation. Throws ConstructionError if the sample matrix is ill conditioned.
template <typename Scalar>
WignerD<Scalar> wigner_d(int l, const Rotation<Scalar>& rot) {
  const int dim = 2 * l + 1;
  const int samples = 2 * dim + 3;
  const auto dirs = detail::fibonacci_sphere(samples);
  const Eigen::Matrix3d rm = rot.matrix().template cast<double>();
  Eigen::MatrixXd before(samples, dim), after(samples, dim);
  for (int s = 0; s < samples; ++s) {
    const Eigen::Vector3d p = dirs.row(s).transpose();
    before.row(s) = solid_sh_block<double>(l, p).transpose();
    after.row(s) = solid_sh_block<double>(l, Eigen::Vector3d(rm * p)).transpose();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(before, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double condition = sv(0) / sv(sv.size() - 1);
  if (!std::isfinite(condition) || condition > 1e8)
    throw ConstructionError("Wigner D fit is ill conditioned (cond = " +
                            std::to_string(condition) + ")");
  const Eigen::MatrixXd dt = svd.solve(after);  // before * D^T = after
  WignerD<Scalar> d;
  d.degree = l;
  d.matrix = dt.transpose().template cast<Scalar>();
  d.condition = condition;
  return d;
}

}  // namespace recouple
