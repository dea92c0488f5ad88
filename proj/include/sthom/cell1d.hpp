#pragma once

// Effective diffusivity of a one-dimensional periodic medium a(t,x) in the
// three scaling regimes.
//
//   sub:      A = int_t ( int_x 1/a(t,x) dx )^{-1} dt     (slice harmonic mean)
//   super:    A = ( int_x ( int_t a(t,x) dt )^{-1} dx )^{-1}
//   critical: A = int int a (D_x v + 1) dx dt  where v is doubly periodic,
//             mean zero, and solves  D_t v - D_x( a (D_x v + 1) ) = 0.
//
// The critical cell problem is solved as a single space-time sparse system
// (not by time stepping): centered periodic time differences, conservative
// flux-form space differences with the coefficient evaluated at face
// midpoints. Centered time differences on an even n_t grid carry a spurious
// alternating-in-time constant mode next to the constant one; both are pinned
// by Lagrange multiplier rows. Summation by parts then gives the discrete
// identity  sum a (D_x v + 1) D_x v = 0  exactly, which is what makes the
// assembled A equal to the pi-weighted square form.

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <cmath>
#include <vector>

#include "sthom/errors.hpp"
#include "sthom/scaling.hpp"

namespace sthom {

struct CellOptions {
  int n_quad = 2048;  // quadrature nodes per axis for the closed forms
  int nt = 256;       // space-time grid for the critical solver
  int nx = 256;
  double overflow = 1e13;  // harmonic integrand cap; beyond it: degenerate
};

struct CellSolution {
  Regime regime = Regime::Sub;
  double A = 0.0;
  bool degenerate = false;
  double residual = 0.0;  // l2 residual of the discrete system (critical)
  int nt = 0, nx = 0;
  std::vector<double> corrector;  // row-major (nt, nx); empty for closed forms
};

/// Harmonic mean of samples f(i/n); zero (with flag) when the integrand
/// overflows, i.e. when the medium touches zero on the harmonic scale.
namespace detail {
template <typename F>
double harmonic_mean(F&& f, int n, double overflow, bool& degenerate) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = f(static_cast<double>(i) / n);
    if (v <= 0.0 || 1.0 / v > overflow) {
      degenerate = true;
      return 0.0;
    }
    s += 1.0 / v;
  }
  s /= n;
  if (s > overflow) {
    degenerate = true;
    return 0.0;
  }
  return 1.0 / s;
}
}  // namespace detail

template <typename Coeff>
CellSolution effective_subcritical(Coeff&& a, const CellOptions& opts = {}) {
  CellSolution sol;
  sol.regime = Regime::Sub;
  double acc = 0.0;
  for (int k = 0; k < opts.n_quad; ++k) {
    const double t = static_cast<double>(k) / opts.n_quad;
    bool deg = false;
    const double h =
        detail::harmonic_mean([&](double x) { return a(t, x); }, opts.n_quad,
                              opts.overflow, deg);
    sol.degenerate = sol.degenerate || deg;
    acc += h;
  }
  sol.A = acc / opts.n_quad;
  return sol;
}

template <typename Coeff>
CellSolution effective_supercritical(Coeff&& a, const CellOptions& opts = {}) {
  CellSolution sol;
  sol.regime = Regime::Super;
  bool deg = false;
  sol.A = detail::harmonic_mean(
      [&](double x) {
        double s = 0.0;
        for (int k = 0; k < opts.n_quad; ++k)
          s += a(static_cast<double>(k) / opts.n_quad, x);
        return s / opts.n_quad;
      },
      opts.n_quad, opts.overflow, deg);
  sol.degenerate = deg;
  return sol;
}

template <typename Coeff>
CellSolution effective_critical(Coeff&& a, const CellOptions& opts = {}) {
  const int nt = opts.nt, nx = opts.nx;
  const double ht = 1.0 / nt, hx = 1.0 / nx;
  const long N = static_cast<long>(nt) * nx;
  const int n_cons = (nt % 2 == 0 && nt > 1) ? 2 : 1;

  auto face = [&](int k, int i) {  // a at the right face of node (k,i)
    return a(static_cast<double>(k) * ht, (static_cast<double>(i) + 0.5) * hx);
  };

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(N) * 6 + 4 * N);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(N + n_cons);
  auto id = [&](int k, int i) { return static_cast<long>(k) * nx + i; };

  for (int k = 0; k < nt; ++k) {
    const int kp = (k + 1) % nt, km = (k + nt - 1) % nt;
    for (int i = 0; i < nx; ++i) {
      const int ip = (i + 1) % nx, im = (i + nx - 1) % nx;
      const double ae = face(k, i), aw = face(k, i - 1);
      if (ae <= 0.0 || aw <= 0.0)
        throw SingularSystem("critical cell problem needs a > 0 at faces");
      const long row = id(k, i);
      if (nt > 1) {
        trip.emplace_back(row, id(kp, i), 0.5 / ht);
        trip.emplace_back(row, id(km, i), -0.5 / ht);
      }
      trip.emplace_back(row, id(k, ip), -ae / (hx * hx));
      trip.emplace_back(row, id(k, i), (ae + aw) / (hx * hx));
      trip.emplace_back(row, id(k, im), -aw / (hx * hx));
      rhs(row) = (ae - aw) / hx;
    }
  }
  // Mean (and, on even n_t, alternating-mean) pins.
  for (long p = 0; p < N; ++p) {
    trip.emplace_back(N, p, 1.0);
    trip.emplace_back(p, N, 1.0);
    if (n_cons == 2) {
      const double sgn = (p / nx) % 2 == 0 ? 1.0 : -1.0;
      trip.emplace_back(N + 1, p, sgn);
      trip.emplace_back(p, N + 1, sgn);
    }
  }

  Eigen::SparseMatrix<double> M(N + n_cons, N + n_cons);
  M.setFromTriplets(trip.begin(), trip.end());
  M.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.analyzePattern(M);
  lu.factorize(M);
  if (lu.info() != Eigen::Success)
    throw SingularSystem("space-time cell system is singular beyond its null modes");
  Eigen::VectorXd sol_full = lu.solve(rhs);

  CellSolution sol;
  sol.regime = Regime::Critical;
  sol.nt = nt;
  sol.nx = nx;
  sol.residual = (M * sol_full - rhs).head(N).norm();
  sol.corrector.assign(static_cast<size_t>(N), 0.0);
  for (long p = 0; p < N; ++p) sol.corrector[static_cast<size_t>(p)] = sol_full(p);

  double A = 0.0;
  for (int k = 0; k < nt; ++k)
    for (int i = 0; i < nx; ++i) {
      const double dv =
          (sol_full(id(k, (i + 1) % nx)) - sol_full(id(k, i))) / hx;
      A += face(k, i) * (dv + 1.0) * ht * hx;
    }
  sol.A = A;
  return sol;
}

/// Dispatch on the regime of the given exponents.
template <typename Coeff>
CellSolution effective_cell1d(Coeff&& a, const ScalingExponents& sc,
                              const CellOptions& opts = {}) {
  switch (sc.regime()) {
    case Regime::Sub: return effective_subcritical(a, opts);
    case Regime::Super: return effective_supercritical(a, opts);
    default: return effective_critical(a, opts);
  }
}

}  // namespace sthom
