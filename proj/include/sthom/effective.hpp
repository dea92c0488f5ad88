#pragma once

// The homogenized limit: with effective diffusivity A, effective drift C and
// growth rate U, the candidate limit of z_eps(t, x) = E_x[ f(Xbar_t) e^{Qbar_t} ]
// is
//   z(t, x) = e^{U t} E[ f(x + C t + sqrt(t) A^{1/2} Z) ],  Z standard normal.
// Gaussian-bump and cosine payoffs integrate in closed form; everything else
// goes through tensor Gauss-Hermite quadrature.

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "sthom/corrector.hpp"
#include "sthom/environment.hpp"
#include "sthom/linalg.hpp"
#include "sthom/payoff.hpp"
#include "sthom/scaling.hpp"
#include "sthom/sde.hpp"
#include "sthom/trig_field.hpp"

namespace sthom {

namespace detail {

struct GaussHermite {
  std::vector<double> nodes;    // zeros of H_n
  std::vector<double> weights;  // sum = sqrt(pi)

  // Golub-Welsch on the Hermite Jacobi matrix.
  static GaussHermite compute(int n) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int k = 0; k + 1 < n; ++k) {
      const double off = std::sqrt(0.5 * (k + 1));
      J(k, k + 1) = off;
      J(k + 1, k) = off;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    GaussHermite q;
    q.nodes.resize(n);
    q.weights.resize(n);
    const double spi = std::sqrt(std::acos(-1.0));
    for (int k = 0; k < n; ++k) {
      q.nodes[k] = es.eigenvalues()(k);
      const double v0 = es.eigenvectors()(0, k);
      q.weights[k] = spi * v0 * v0;
    }
    return q;
  }
};

/// E[g(Z)] for Z standard normal in `dim` dimensions, tensor quadrature.
template <typename G>
double expect_normal(G&& g, int dim, int order) {
  const GaussHermite q = GaussHermite::compute(order);
  const double spi = std::sqrt(std::acos(-1.0));
  const double s2 = std::sqrt(2.0);
  double acc = 0.0;
  if (dim == 1) {
    for (int i = 0; i < order; ++i) {
      Vec2 z(s2 * q.nodes[i], 0.0);
      acc += q.weights[i] * g(z);
    }
    return acc / spi;
  }
  for (int i = 0; i < order; ++i)
    for (int j = 0; j < order; ++j) {
      Vec2 z(s2 * q.nodes[i], s2 * q.nodes[j]);
      acc += q.weights[i] * q.weights[j] * g(z);
    }
  return acc / (spi * spi);
}

}  // namespace detail

/// Evaluate the limit solution at macroscopic time t and point x.
inline double limit_solution(const EffectiveCoefficients& eff, const Payoff& f,
                             double t, const Vec2& x, int quad_order = 64) {
  const int dim = eff.dim;
  const double growth = std::exp(eff.U * t);
  Vec2 drifted = x + t * eff.C;

  switch (f.kind) {
    case Payoff::Kind::Constant:
      return growth * f.amp;
    case Payoff::Kind::Cosine: {
      Vec2 kv(f.freq[0], dim == 2 ? f.freq[1] : 0.0);
      const double decay =
          std::exp(-0.5 * two_pi * two_pi * t * kv.dot(eff.A * kv));
      return growth * f.amp *
             std::cos(two_pi * kv.dot(drifted) + f.phase) * decay;
    }
    case Payoff::Kind::GaussianBump: {
      const double s2 = f.width * f.width;
      Mat S = t * eff.A;
      for (int i = 0; i < dim; ++i) S(i, i) += s2;
      Vec2 v = drifted;
      v(0) -= f.center(0);
      if (dim == 2) v(1) -= f.center(1);
      double det, quad;
      if (dim == 1) {
        det = S(0, 0) / s2;
        quad = v(0) * v(0) / S(0, 0);
      } else {
        det = (S(0, 0) * S(1, 1) - S(0, 1) * S(1, 0)) / (s2 * s2);
        const Mat Si = S.inverse();
        quad = v.dot(Si * v);
      }
      return growth * f.amp / std::sqrt(det) * std::exp(-0.5 * quad);
    }
    case Payoff::Kind::BoundedCoordinate:
      break;
  }
  // generic payoff: quadrature against N(0, tA)
  const Mat R = std::sqrt(std::max(t, 0.0)) * sym_sqrt(eff.A, dim);
  return growth * detail::expect_normal(
                      [&](const Vec2& z) {
                        Vec2 y = drifted;
                        for (int r = 0; r < dim; ++r)
                          for (int s = 0; s < dim; ++s) y(r) += R(r, s) * z(s);
                        return f(y, dim);
                      },
                      dim, quad_order);
}

struct CompareRow {
  double eps = 0.0;
  MonteCarloEstimate mc;
  double limit = 0.0;
  double abs_err = 0.0;
  double z_score = 0.0;  // |mc.mean - limit| / stderr
};

struct CompareResult {
  double t = 0.0;
  Vec2 x0 = Vec2::Zero();
  EffectiveCoefficients eff;
  std::vector<CompareRow> rows;
};

/// Monte Carlo functional at each eps next to the limit-solution value.
inline CompareResult compare_homogenization(
    const Environment& env, const ScalingExponents& sc,
    const EffectiveCoefficients& eff, const Payoff& f, const Vec2& x0, double t,
    const std::vector<double>& eps_list, long n_paths,
    const SimOptions& opts = {}) {
  CompareResult res;
  res.t = t;
  res.x0 = x0;
  res.eff = eff;
  const double zlim = limit_solution(eff, f, t, x0);
  for (double eps : eps_list) {
    CompareRow row;
    row.eps = eps;
    row.mc = feynman_kac_estimate(env, sc, eps, f, x0, t, n_paths, opts);
    row.limit = zlim;
    row.abs_err = std::abs(row.mc.mean - zlim);
    row.z_score = row.mc.stderr_ > 0.0 ? row.abs_err / row.mc.stderr_ : 0.0;
    res.rows.push_back(row);
  }
  return res;
}

}  // namespace sthom
