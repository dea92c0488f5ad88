#pragma once

// Ergodic-average verification and the modulus-of-continuity diagnostic for
// the environment seen from the particle.
//
// Ergodic check: the time average  eps^{2 beta} int_0^{t/eps^{2 beta}} g(Y_r) dr
// has expectation t * pi(g) when the initial environment is pi-distributed.
// Initial environments are realized by a uniform torus shift (tau, y) per
// path, optionally combined with a random-phase redraw of the medium, and the
// non-uniform x-marginal of pi is handled with self-normalized importance
// weights e^{-2V(y)}. With those weights a constant observable reproduces
// kappa * t exactly: no randomness survives the normalization.
//
// Modulus diagnostic: per delta, the empirical mean over paths of
//   sup_{|t-s| <= delta} | eps^{beta} int_{s/eps^{2 beta}}^{t/eps^{2 beta}} g(Y_r) dr |
// next to the envelope sqrt(delta) * ln(1/delta). The eps^{beta} scaling is
// the one under which the envelope is eps-uniform (CLT balance: the integral
// over a window of original-time length delta/eps^{2 beta} fluctuates like
// its square root). Windowed suprema come from a monotonic-deque pass over
// the cumulative integral, O(n) per delta.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "sthom/environment.hpp"
#include "sthom/errors.hpp"
#include "sthom/grid.hpp"
#include "sthom/rng.hpp"
#include "sthom/scaling.hpp"
#include "sthom/sde.hpp"

namespace sthom {

/// Catalog of observables g(t, x) evaluated through a (possibly re-phased)
/// environment. Kept closed so experiment configs stay declarative.
struct Observable {
  enum class Kind { Constant, Mode, DriftComponent, CField, DField };
  Kind kind = Kind::Constant;
  double amp = 1.0;
  TrigMode mode{};     // Mode only
  int component = 0;   // DriftComponent only

  double operator()(const Environment& env, double t, const Point& x) const {
    switch (kind) {
      case Kind::Constant:
        return amp;
      case Kind::Mode: {
        double arg = mode.kt * t;
        for (int i = 0; i < env.dim(); ++i) arg += mode.kx[i] * x[i];
        return amp * mode.amp * std::cos(two_pi * arg + mode.phase);
      }
      case Kind::DriftComponent:
        return env.drift_at(t, x)(component);
      case Kind::CField:
        return env.c_at(t, x);
      case Kind::DField:
        return env.d_at(t, x);
    }
    return 0.0;
  }

  int max_abs_kt() const { return kind == Kind::Mode ? std::abs(mode.kt) : 0; }
  int max_abs_kx(int axis) const {
    return kind == Kind::Mode ? std::abs(mode.kx[axis]) : 0;
  }

  static Observable constant(double v) {
    Observable g;
    g.kind = Kind::Constant;
    g.amp = v;
    return g;
  }
  static Observable trig_mode(const TrigMode& m, double amp = 1.0) {
    Observable g;
    g.kind = Kind::Mode;
    g.mode = m;
    g.amp = amp;
    return g;
  }
  static Observable drift_component(int i) {
    Observable g;
    g.kind = Kind::DriftComponent;
    g.component = i;
    return g;
  }
  static Observable c_field() {
    Observable g;
    g.kind = Kind::CField;
    return g;
  }
  static Observable d_field() {
    Observable g;
    g.kind = Kind::DField;
    return g;
  }
};

/// pi(g) by trapezoid quadrature on a grid resolving both g and the medium.
inline double pi_observable_average(const Environment& env, const Observable& g,
                                    int quad_n = 64) {
  int kt = 1, kx = 1;
  auto absorb = [&](const TrigField& f) {
    kt = std::max(kt, f.max_abs_kt());
    for (int i = 0; i < env.dim(); ++i) kx = std::max(kx, f.max_abs_kx(i));
  };
  for (const auto& f : env.spec.a) absorb(f);
  for (const auto& f : env.spec.H) absorb(f);
  absorb(env.spec.V);
  for (const auto& f : env.spec.f) absorb(f);
  absorb(env.spec.d);
  kt = std::max(kt, g.max_abs_kt());
  for (int i = 0; i < env.dim(); ++i) kx = std::max(kx, g.max_abs_kx(i));

  TorusGrid grid;
  grid.dim = env.dim();
  grid.nt = std::max(quad_n, 2 * kt + 2);
  grid.nx0 = std::max(quad_n, 2 * kx + 2);
  grid.nx1 = env.dim() == 2 ? grid.nx0 : 1;
  return pi_average(env, grid,
                    [&](double t, const Point& x) { return g(env, t, x); });
}

struct ErgodicOptions {
  double c_step = 0.25;
  double h = 0.0;
  std::uint64_t seed = 1;
  int threads = 1;
  bool redraw_phases = true;  // re-sample medium phases per path
  int quad_n = 64;            // pi(g) quadrature resolution
};

struct ErgodicResult {
  double eps = 0.0, t = 0.0;
  double estimate = 0.0;  // weighted mean of eps^{2 beta} int g
  double target = 0.0;    // weighted mean of t * pi(g)
  double gap = 0.0;
  double stderr_ = 0.0;   // standard error of the gap estimator
  long n_paths = 0;
  std::uint64_t seed = 0;
};

/// Monte Carlo test of the time-average law along rescaled trajectories.
inline ErgodicResult ergodic_average_check(const Environment& env,
                                           const ScalingExponents& sc,
                                           double eps, const Observable& g,
                                           double t, long n_paths,
                                           const ErgodicOptions& opts = {}) {
  if (n_paths < 2) throw DegenerateSample("need at least 2 paths");
  SimOptions sim;
  sim.c_step = opts.c_step;
  sim.h = opts.h;
  sim.seed = opts.seed;
  const double h = detail::resolve_step(sc, eps, sim);
  const double eps2b = std::pow(eps, 2.0 * sc.beta);

  std::vector<double> est(n_paths), tgt(n_paths), wgt(n_paths);
  const double base_target =
      opts.redraw_phases ? 0.0 : t * pi_observable_average(env, g, opts.quad_n);

  run_paths(n_paths, opts.threads, [&](long p) {
    const Environment* use = &env;
    Environment drawn;
    if (opts.redraw_phases) {
      const std::uint64_t pseed =
          rng::philox4x64({opts.seed, rng::stream_env},
                          {static_cast<std::uint64_t>(p), 0, 0, 0})
              .w[0];
      drawn = build_environment(sample_random_phase(env.spec, pseed));
      use = &drawn;
    }
    const double tau =
        rng::uniform(opts.seed, rng::stream_shift, static_cast<std::uint64_t>(p),
                     0, 0);
    Point y{rng::uniform(opts.seed, rng::stream_shift,
                         static_cast<std::uint64_t>(p), 0, 1),
            0.0};
    if (env.dim() == 2)
      y[1] = rng::uniform(opts.seed, rng::stream_shift,
                          static_cast<std::uint64_t>(p), 0, 2);

    double integral = 0.0, prev_g = 0.0, prev_r = 0.0;
    run_rescaled(*use, sc, eps, t, h, opts.seed,
                 static_cast<std::uint64_t>(p), tau, y,
                 [&](long k, double r, double targ, const Vec2& X, double) {
                   if (k > 0) integral += prev_g * (r - prev_r);
                   Point xw{wrap_unit(X(0)),
                            use->dim() == 2 ? wrap_unit(X(1)) : 0.0};
                   prev_g = g(*use, targ, xw);
                   prev_r = r;
                 });
    est[p] = eps2b * integral;
    tgt[p] = opts.redraw_phases
                 ? t * pi_observable_average(*use, g, opts.quad_n)
                 : base_target;
    wgt[p] = std::exp(-2.0 * use->V_at(y));
  });

  ErgodicResult res;
  res.eps = eps;
  res.t = t;
  res.n_paths = n_paths;
  res.seed = opts.seed;
  double wsum = 0.0, esum = 0.0, tsum = 0.0;
  for (long p = 0; p < n_paths; ++p) {
    wsum += wgt[p];
    esum += wgt[p] * est[p];
    tsum += wgt[p] * tgt[p];
  }
  res.estimate = esum / wsum;
  res.target = tsum / wsum;
  res.gap = res.estimate - res.target;
  const double wbar = wsum / static_cast<double>(n_paths);
  double ss = 0.0;
  for (long p = 0; p < n_paths; ++p) {
    const double r = wgt[p] * ((est[p] - tgt[p]) - res.gap) / wbar;
    ss += r * r;
  }
  res.stderr_ = std::sqrt(ss) / static_cast<double>(n_paths);
  return res;
}

struct ModulusOptions {
  double c_step = 0.25;
  double h = 0.0;
  std::uint64_t seed = 1;
  int threads = 1;
};

struct ModulusResult {
  double eps = 0.0, T = 0.0;
  std::vector<double> deltas;
  std::vector<double> modulus;   // E[sup over windows], per delta
  std::vector<double> envelope;  // sqrt(delta) ln(1/delta)
  std::vector<double> ratio;
  bool envelope_flag = false;    // ratio spread across deltas exceeds 2x
  long n_paths = 0;
  std::uint64_t seed = 0;
};

namespace detail {

/// max over windows of (length w+1) of (window max - window min).
inline double windowed_oscillation(const std::vector<double>& s, long w) {
  std::deque<long> hi, lo;
  double best = 0.0;
  for (long k = 0; k < static_cast<long>(s.size()); ++k) {
    while (!hi.empty() && s[hi.back()] <= s[k]) hi.pop_back();
    hi.push_back(k);
    while (!lo.empty() && s[lo.back()] >= s[k]) lo.pop_back();
    lo.push_back(k);
    while (hi.front() < k - w) hi.pop_front();
    while (lo.front() < k - w) lo.pop_front();
    if (k >= w) best = std::max(best, s[hi.front()] - s[lo.front()]);
  }
  return best;
}

}  // namespace detail

/// Continuity-modulus table for the integral of a divergence-structured
/// observable (a drift component or the c-field) along rescaled paths.
inline ModulusResult modulus_diagnostic(const Environment& env,
                                        const ScalingExponents& sc, double eps,
                                        const Observable& g, double T,
                                        const std::vector<double>& deltas,
                                        long n_paths,
                                        const ModulusOptions& opts = {}) {
  if (g.kind != Observable::Kind::DriftComponent &&
      g.kind != Observable::Kind::CField)
    throw ConfigError(
        "modulus observables must carry the divergence structure "
        "(drift component or c-field)");
  if (deltas.empty()) throw ConfigError("need at least one delta");
  SimOptions sim;
  sim.c_step = opts.c_step;
  sim.h = opts.h;
  sim.seed = opts.seed;
  const double h = detail::resolve_step(sc, eps, sim);
  const double eps2b = std::pow(eps, 2.0 * sc.beta);
  const double eps_b = std::pow(eps, sc.beta);

  ModulusResult res;
  res.eps = eps;
  res.T = T;
  res.deltas = deltas;
  res.n_paths = n_paths;
  res.seed = opts.seed;

  std::vector<std::vector<double>> sup(static_cast<size_t>(n_paths));
  run_paths(n_paths, opts.threads, [&](long p) {
    std::vector<double> cum;
    double prev_g = 0.0, prev_r = 0.0, hbar = 0.0;
    run_rescaled(env, sc, eps, T, h, opts.seed, static_cast<std::uint64_t>(p),
                 0.0, Point{0.0, 0.0},
                 [&](long k, double r, double targ, const Vec2& X, double) {
                   if (k > 0) {
                     cum.push_back(cum.back() + prev_g * (r - prev_r));
                     hbar = r - prev_r;
                   } else {
                     cum.push_back(0.0);
                   }
                   Point xw{wrap_unit(X(0)),
                            env.dim() == 2 ? wrap_unit(X(1)) : 0.0};
                   prev_g = g(env, targ, xw);
                   prev_r = r;
                 });
    sup[p].resize(deltas.size());
    for (size_t di = 0; di < deltas.size(); ++di) {
      const long w = std::max<long>(
          1, std::lround(deltas[di] / eps2b / hbar));
      sup[p][di] = eps_b * detail::windowed_oscillation(cum, w);
    }
  });

  for (size_t di = 0; di < deltas.size(); ++di) {
    double m = 0.0;
    for (long p = 0; p < n_paths; ++p) m += sup[p][di];
    m /= static_cast<double>(n_paths);
    const double env_d = std::sqrt(deltas[di]) * std::log(1.0 / deltas[di]);
    res.modulus.push_back(m);
    res.envelope.push_back(env_d);
    res.ratio.push_back(env_d > 0.0 ? m / env_d : 0.0);
  }
  const auto [lo, hi] =
      std::minmax_element(res.ratio.begin(), res.ratio.end());
  res.envelope_flag = *lo > 0.0 ? (*hi / *lo > 2.0) : (*hi > 0.0);
  return res;
}

}  // namespace sthom
