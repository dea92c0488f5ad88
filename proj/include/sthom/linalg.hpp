#pragma once

// Dense helpers for the small (d <= 2) coefficient matrices.

#include <Eigen/Dense>
#include <cmath>

#include "sthom/errors.hpp"

namespace sthom {

using Mat = Eigen::Matrix2d;
using Vec2 = Eigen::Vector2d;

/// Symmetric PSD square root. Exact closed form for 2x2; eigenvalues slightly
/// below zero (roundoff) are clamped.
inline Mat sym_sqrt(const Mat& S, int dim) {
  Mat R = Mat::Zero();
  if (dim == 1) {
    R(0, 0) = S(0, 0) > 0.0 ? std::sqrt(S(0, 0)) : 0.0;
    return R;
  }
  const double tr = S(0, 0) + S(1, 1);
  double det = S(0, 0) * S(1, 1) - S(0, 1) * S(1, 0);
  if (det < 0.0) det = 0.0;
  const double s = std::sqrt(det);
  const double tau2 = tr + 2.0 * s;
  if (tau2 <= 0.0) return R;
  const double tau = std::sqrt(tau2);
  R = S;
  R(0, 0) += s;
  R(1, 1) += s;
  R /= tau;
  return R;
}

/// Directional derivative of the PSD square root: solves R X + X R = dS for
/// symmetric X where R = sym_sqrt(S). Throws SingularSystem when R is
/// (numerically) singular, i.e. on the degenerate set of S.
inline Mat sym_sqrt_derivative(const Mat& R, const Mat& dS, int dim) {
  if (dim == 1) {
    if (R(0, 0) < 1e-14)
      throw SingularSystem("sqrt derivative undefined: degenerate matrix");
    Mat X = Mat::Zero();
    X(0, 0) = dS(0, 0) / (2.0 * R(0, 0));
    return X;
  }
  // Vectorize on the symmetric basis (x11, x12, x22).
  Eigen::Matrix3d M;
  M << 2 * R(0, 0), 2 * R(0, 1), 0,  //
      R(0, 1), R(0, 0) + R(1, 1), R(0, 1),
      0, 2 * R(0, 1), 2 * R(1, 1);
  Eigen::Vector3d rhs(dS(0, 0), dS(0, 1), dS(1, 1));
  Eigen::FullPivLU<Eigen::Matrix3d> lu(M);
  if (!lu.isInvertible())
    throw SingularSystem("sqrt derivative undefined: degenerate matrix");
  Eigen::Vector3d x = lu.solve(rhs);
  Mat X;
  X << x(0), x(1), x(1), x(2);
  return X;
}

/// Matrix absolute value sqrt(A A^T); A need not be symmetric.
inline Mat matrix_abs(const Mat& A, int dim) {
  Mat AA = Mat::Zero();
  AA.topLeftCorner(dim, dim) =
      A.topLeftCorner(dim, dim) * A.topLeftCorner(dim, dim).transpose();
  return sym_sqrt(AA, dim);
}

/// Smallest eigenvalue of a symmetric matrix restricted to the leading block.
inline double min_eigenvalue(const Mat& S, int dim) {
  if (dim == 1) return S(0, 0);
  const double tr = S(0, 0) + S(1, 1);
  const double det = S(0, 0) * S(1, 1) - S(0, 1) * S(1, 0);
  const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
  return tr / 2.0 - disc;
}

inline double max_eigenvalue(const Mat& S, int dim) {
  if (dim == 1) return S(0, 0);
  const double tr = S(0, 0) + S(1, 1);
  const double det = S(0, 0) * S(1, 1) - S(0, 1) * S(1, 0);
  const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
  return tr / 2.0 + disc;
}

/// X <= Y in the PSD order, up to slack.
inline bool psd_leq(const Mat& X, const Mat& Y, int dim, double slack = 1e-10) {
  Mat D = Mat::Zero();
  D.topLeftCorner(dim, dim) =
      Y.topLeftCorner(dim, dim) - X.topLeftCorner(dim, dim);
  return min_eigenvalue(D, dim) >= -slack;
}

}  // namespace sthom
