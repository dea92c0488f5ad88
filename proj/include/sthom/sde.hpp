#pragma once

// Euler-Maruyama simulation of the multiscale diffusion
//
//   dX_t = eps^{-beta} b(t/eps^alpha, X_t/eps^beta) dt
//        + sigma(t/eps^alpha, X_t/eps^beta) dB_t
//
// together with the exponential-weight functional
//
//   Q_t = int_0^t [ eps^{-beta} c + d ](r/eps^alpha, X_r/eps^beta) dr
//
// and of the rescaled pair (X-bar, Q-bar) driven on the microscopic clock:
// eps^beta X-bar_{t/eps^{2 beta}} has the law of X_t started from the origin.
// Both integrators share one stepping core, and Gaussian increments are
// addressed by (seed, path, step), so the two agree path-by-path for matching
// seeds; at eps = 1 they coincide bitwise.
//
// Step rule: h <= c_step * min(eps^alpha, eps^{2 beta}); the default
// c_step = 1/4 merely caps the step, accuracy studies should pass a smaller
// value. The left endpoint quadrature for Q matches the Ito convention of the
// stochastic integrals.

#include <cmath>
#include <cstdint>
#include <thread>
#include <vector>

#include "sthom/environment.hpp"
#include "sthom/errors.hpp"
#include "sthom/payoff.hpp"
#include "sthom/rng.hpp"
#include "sthom/scaling.hpp"

namespace sthom {

struct SimOptions {
  double c_step = 0.25;
  double h = 0.0;  // explicit macroscopic step; 0 = the rule's bound
  std::uint64_t seed = 1;
  int threads = 1;  // 0 = hardware concurrency
};

struct SamplePath {
  std::vector<double> times;
  std::vector<Vec2> states;
  std::vector<double> Q;
  int dim = 1;
};

namespace detail {

inline double step_bound(const ScalingExponents& sc, double eps,
                         double c_step) {
  return c_step * std::min(std::pow(eps, sc.alpha), std::pow(eps, 2.0 * sc.beta));
}

inline double resolve_step(const ScalingExponents& sc, double eps,
                           const SimOptions& opts) {
  const double bound = step_bound(sc, eps, opts.c_step);
  if (opts.h <= 0.0) return bound;
  if (opts.h > bound * (1.0 + 1e-12))
    throw StepTooLarge("step " + std::to_string(opts.h) +
                       " exceeds the resolution bound " +
                       std::to_string(bound));
  return opts.h;
}

inline int thread_count(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace detail

/// Original-clock core. The observer sees every grid node (k, t_k, X_k, Q_k),
/// including k = 0 and the final node.
template <typename Obs>
void run_original(const Environment& env, const ScalingExponents& sc,
                  double eps, const Vec2& x0, double t0, double t1, double h,
                  std::uint64_t seed, std::uint64_t path_index, Obs&& obs) {
  const int dim = env.dim();
  const long n = std::lround(std::ceil((t1 - t0) / h - 1e-12));
  const double h_eff = (t1 - t0) / static_cast<double>(n);
  const double sqrt_h = std::sqrt(h_eff);
  const double inv_eps_a = std::pow(eps, -sc.alpha);
  const double inv_eps_b = std::pow(eps, -sc.beta);

  Vec2 X = x0;
  double Q = 0.0;
  obs(0L, t0, X, Q);
  for (long k = 0; k < n; ++k) {
    const double t = t0 + static_cast<double>(k) * h_eff;
    const double targ = t * inv_eps_a;
    Point xarg;
    xarg[0] = wrap_unit(X(0) * inv_eps_b);
    xarg[1] = dim == 2 ? wrap_unit(X(1) * inv_eps_b) : 0.0;
    const SdeCoeffs co = env.sde_at(wrap_unit(targ), xarg);
    Q += (inv_eps_b * env.c_at(wrap_unit(targ), xarg) +
          env.d_at(wrap_unit(targ), xarg)) *
         h_eff;
    const auto z = rng::normal_pair(seed, rng::stream_brownian, path_index,
                                    static_cast<std::uint64_t>(k));
    for (int i = 0; i < dim; ++i) {
      double dx = inv_eps_b * co.b(i) * h_eff;
      for (int j = 0; j < dim; ++j) dx += co.sigma(i, j) * (sqrt_h * z[j]);
      X(i) += dx;
    }
    if (!std::isfinite(X(0)) || !std::isfinite(X(dim - 1)) ||
        !std::isfinite(Q))
      throw NonFinite("trajectory left the finite range at step " +
                      std::to_string(k + 1));
    obs(k + 1, t0 + static_cast<double>(k + 1) * h_eff, X, Q);
  }
}

/// Rescaled-clock core: X-bar on [0, t1/eps^{2 beta}] with coefficients at
/// (eps^{2 beta - alpha} r + tshift, X-bar_r + xshift). The observer sees
/// (k, r_k, targ_k, Xbar_k, Qbar_k) with the torus-shifted time argument.
/// Qbar integrates c + eps^beta d.
template <typename Obs>
void run_rescaled(const Environment& env, const ScalingExponents& sc,
                  double eps, double t1, double h_macro, std::uint64_t seed,
                  std::uint64_t path_index, double tshift, const Point& xshift,
                  Obs&& obs) {
  const int dim = env.dim();
  const double eps2b = std::pow(eps, 2.0 * sc.beta);
  const double r_end = t1 / eps2b;
  const long n = std::lround(std::ceil(t1 / h_macro - 1e-12));
  const double hbar = r_end / static_cast<double>(n);
  const double sqrt_h = std::sqrt(hbar);
  const double rate = std::pow(eps, 2.0 * sc.beta - sc.alpha);
  const double eps_b = std::pow(eps, sc.beta);

  Vec2 X = Vec2::Zero();
  X(0) = xshift[0];
  X(1) = xshift[1];
  double Q = 0.0;
  obs(0L, 0.0, wrap_unit(tshift), X, Q);
  for (long k = 0; k < n; ++k) {
    const double r = static_cast<double>(k) * hbar;
    const double targ = wrap_unit(rate * r + tshift);
    Point xarg;
    xarg[0] = wrap_unit(X(0));
    xarg[1] = dim == 2 ? wrap_unit(X(1)) : 0.0;
    const SdeCoeffs co = env.sde_at(targ, xarg);
    Q += (env.c_at(targ, xarg) + eps_b * env.d_at(targ, xarg)) * hbar;
    const auto z = rng::normal_pair(seed, rng::stream_brownian, path_index,
                                    static_cast<std::uint64_t>(k));
    for (int i = 0; i < dim; ++i) {
      double dx = co.b(i) * hbar;
      for (int j = 0; j < dim; ++j) dx += co.sigma(i, j) * (sqrt_h * z[j]);
      X(i) += dx;
    }
    if (!std::isfinite(X(0)) || !std::isfinite(X(dim - 1)) ||
        !std::isfinite(Q))
      throw NonFinite("rescaled trajectory left the finite range at step " +
                      std::to_string(k + 1));
    obs(k + 1, static_cast<double>(k + 1) * hbar,
        wrap_unit(rate * static_cast<double>(k + 1) * hbar + tshift), X, Q);
  }
}

/// One trajectory on the original clock, recorded on its step grid.
inline SamplePath simulate_path(const Environment& env,
                                const ScalingExponents& sc, double eps,
                                const Vec2& x0, double t0, double t1,
                                const SimOptions& opts,
                                std::uint64_t path_index = 0) {
  const double h = detail::resolve_step(sc, eps, opts);
  SamplePath p;
  p.dim = env.dim();
  run_original(env, sc, eps, x0, t0, t1, h, opts.seed, path_index,
               [&](long, double t, const Vec2& X, double Q) {
                 p.times.push_back(t);
                 p.states.push_back(X);
                 p.Q.push_back(Q);
               });
  return p;
}

/// One trajectory of the rescaled pair, reported in macroscopic variables
/// (t, eps^beta X-bar, eps^beta Q-bar); same law as simulate_path from the
/// origin, and the identical trajectory at eps = 1 for matching seeds.
inline SamplePath simulate_rescaled(const Environment& env,
                                    const ScalingExponents& sc, double eps,
                                    double t1, const SimOptions& opts,
                                    std::uint64_t path_index = 0) {
  const double h = detail::resolve_step(sc, eps, opts);
  const double eps2b = std::pow(eps, 2.0 * sc.beta);
  const double eps_b = std::pow(eps, sc.beta);
  SamplePath p;
  p.dim = env.dim();
  run_rescaled(env, sc, eps, t1, h, opts.seed, path_index, 0.0,
               Point{0.0, 0.0},
               [&](long, double r, double, const Vec2& X, double Q) {
                 p.times.push_back(eps2b * r);
                 p.states.push_back(eps_b * X);
                 p.Q.push_back(eps_b * Q);
               });
  return p;
}

/// Run a per-path job over disjoint index blocks. Each path writes only its
/// own slot, and any reduction happens after the join, so the result is
/// independent of the thread count.
template <typename Job>
void run_paths(long n_paths, int threads, Job&& job) {
  const int nt = std::min<long>(detail::thread_count(threads), n_paths);
  if (nt <= 1) {
    for (long p = 0; p < n_paths; ++p) job(p);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(nt);
  const long chunk = (n_paths + nt - 1) / nt;
  for (int w = 0; w < nt; ++w) {
    const long lo = w * chunk, hi = std::min(n_paths, lo + chunk);
    pool.emplace_back([lo, hi, &job] {
      for (long p = lo; p < hi; ++p) job(p);
    });
  }
  for (auto& th : pool) th.join();
}

struct MonteCarloEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  long n_paths = 0;
  std::uint64_t seed = 0;
  double h = 0.0;
};

/// Semigroup estimate E[ f(X_t) exp(Q_t) ] started from x0.
inline MonteCarloEstimate feynman_kac_estimate(
    const Environment& env, const ScalingExponents& sc, double eps,
    const Payoff& payoff, const Vec2& x0, double t, long n_paths,
    const SimOptions& opts) {
  if (n_paths < 2) throw DegenerateSample("need at least 2 paths");
  const double h = detail::resolve_step(sc, eps, opts);
  const int dim = env.dim();
  std::vector<double> vals(n_paths);
  run_paths(n_paths, opts.threads, [&](long p) {
    Vec2 Xf = x0;
    double Qf = 0.0;
    run_original(env, sc, eps, x0, 0.0, t, h, opts.seed,
                 static_cast<std::uint64_t>(p),
                 [&](long, double, const Vec2& X, double Q) {
                   Xf = X;
                   Qf = Q;
                 });
    vals[p] = payoff(Xf, dim) * std::exp(Qf);
  });
  MonteCarloEstimate est;
  est.n_paths = n_paths;
  est.seed = opts.seed;
  est.h = h;
  double s = 0.0;
  for (double v : vals) s += v;
  est.mean = s / static_cast<double>(n_paths);
  double ss = 0.0;
  for (double v : vals) ss += (v - est.mean) * (v - est.mean);
  est.stderr_ = std::sqrt(ss / (static_cast<double>(n_paths) - 1.0) /
                          static_cast<double>(n_paths));
  return est;
}

/// Terminal states of an ensemble started from x0 (original clock).
inline std::vector<Vec2> terminal_ensemble(const Environment& env,
                                           const ScalingExponents& sc,
                                           double eps, const Vec2& x0,
                                           double t, long n_paths,
                                           const SimOptions& opts) {
  const double h = detail::resolve_step(sc, eps, opts);
  std::vector<Vec2> out(n_paths);
  run_paths(n_paths, opts.threads, [&](long p) {
    Vec2 Xf = x0;
    run_original(env, sc, eps, x0, 0.0, t, h, opts.seed,
                 static_cast<std::uint64_t>(p),
                 [&](long, double, const Vec2& X, double) { Xf = X; });
    out[p] = Xf;
  });
  return out;
}

struct CovarianceEstimate {
  Mat cov = Mat::Zero();
  Mat stderr_ = Mat::Zero();  // per-entry, Gaussian-theory approximation
  Vec2 mean = Vec2::Zero();
  long n_paths = 0;
};

/// Unbiased sample covariance of terminal states with per-entry standard
/// errors Var(S_ij) ~ (S_ii S_jj + S_ij^2)/(n-1); exact for Gaussian samples,
/// which is the regime the limit theorems put us in.
inline CovarianceEstimate empirical_covariance(const std::vector<Vec2>& pts,
                                               int dim) {
  const long n = static_cast<long>(pts.size());
  if (n < 2) throw DegenerateSample("covariance needs at least 2 paths");
  CovarianceEstimate e;
  e.n_paths = n;
  for (const auto& p : pts) e.mean += p;
  e.mean /= static_cast<double>(n);
  for (const auto& p : pts) {
    const Vec2 d = p - e.mean;
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) e.cov(i, j) += d(i) * d(j);
  }
  e.cov /= static_cast<double>(n - 1);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j)
      e.stderr_(i, j) = std::sqrt(
          (e.cov(i, i) * e.cov(j, j) + e.cov(i, j) * e.cov(i, j)) /
          static_cast<double>(n - 1));
  return e;
}

/// Covariance of a recorded path ensemble at a common grid time.
inline CovarianceEstimate empirical_covariance(
    const std::vector<SamplePath>& paths, double t) {
  if (paths.size() < 2) throw DegenerateSample("covariance needs at least 2 paths");
  std::vector<Vec2> pts;
  pts.reserve(paths.size());
  for (const auto& p : paths) {
    long hit = -1;
    for (long k = 0; k < static_cast<long>(p.times.size()); ++k)
      if (std::abs(p.times[k] - t) <= 1e-10) {
        hit = k;
        break;
      }
    if (hit < 0)
      throw GridMismatch("time " + std::to_string(t) +
                         " is not on a path's grid");
    pts.push_back(p.states[static_cast<size_t>(hit)]);
  }
  return empirical_covariance(pts, paths.front().dim);
}

}  // namespace sthom
