// Acceptance gate: one line per criterion, "criterion N PASS/FAIL <detail>",
// exit status = number of failures. Tolerances are pinned here and are not
// adjusted to make runs green; a red line plus its printed numbers is the
// intended failure mode.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sthom/cell1d.hpp"
#include "sthom/corrector.hpp"
#include "sthom/effective.hpp"
#include "sthom/environment.hpp"
#include "sthom/grid.hpp"
#include "sthom/linalg.hpp"
#include "sthom/payoff.hpp"
#include "sthom/sde.hpp"
#include "sthom/stats.hpp"
#include "test_media.hpp"

using namespace sthom;
using namespace sthom::testmedia;

namespace {

const double root3 = std::sqrt(3.0);

struct Gate {
  int failures = 0;

  template <typename Fn>
  void criterion(int id, Fn&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    std::ostringstream detail;
    bool ok = false;
    try {
      ok = fn(detail);
    } catch (const std::exception& e) {
      detail << " threw " << e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    std::printf("criterion %d %s%s [%.1fs]\n", id, ok ? "PASS" : "FAIL",
                detail.str().c_str(), secs);
    std::fflush(stdout);
    if (!ok) ++failures;
  }
};

double sine_coeff(double /*t*/, double x) {
  return 2.0 + std::sin(two_pi * x);
}
double wave_coeff(double t, double x) {
  return 2.0 + std::sin(two_pi * (x - t));
}

TorusGrid make_grid(int dim, int nt, int nx) {
  TorusGrid g;
  g.dim = dim;
  g.nt = nt;
  g.nx0 = nx;
  g.nx1 = dim == 2 ? nx : 1;
  return g;
}

ScalingExponents sub_sc() { return {1.0, 1.0}; }
ScalingExponents crit_sc() { return {2.0, 1.0}; }
ScalingExponents super_sc() { return {3.0, 1.0}; }

bool near(std::ostringstream& d, const char* label, double got, double want,
          double tol) {
  const bool ok = std::abs(got - want) <= tol;
  d << " " << label << "=" << got;
  if (!ok) d << "(off " << got - want << ", tol " << tol << ")";
  return ok;
}

}  // namespace

// 1: the static sine medium reproduces the harmonic mean sqrt(3) in all
// three regimes, closed forms at n_quad=2048 within 1e-6 and the space-time
// solver at 256x256 within 5e-3, in under 10 s.
static bool criterion1(std::ostringstream& d) {
  CellOptions opts;  // n_quad 2048, 256x256 defaults
  const auto t0 = std::chrono::steady_clock::now();
  const double sub = effective_subcritical(sine_coeff, opts).A;
  const double sup = effective_supercritical(sine_coeff, opts).A;
  const double crit = effective_critical(sine_coeff, opts).A;
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  bool ok = near(d, "sub", sub, root3, 1e-6);
  ok &= near(d, "super", sup, root3, 1e-6);
  ok &= near(d, "critical", crit, root3, 5e-3);
  if (secs >= 10.0) {
    d << " too slow " << secs << "s";
    ok = false;
  }
  return ok;
}

// 2: the traveling-wave medium separates the regimes: sub stays at the
// harmonic mean, super reaches the arithmetic mean 2, the two differ by more
// than 0.25, and the critical solver is grid-converged (256^2 vs 512^2
// within 1e-3).
static bool criterion2(std::ostringstream& d) {
  CellOptions opts;
  const double sub = effective_subcritical(wave_coeff, opts).A;
  const double sup = effective_supercritical(wave_coeff, opts).A;
  bool ok = near(d, "sub", sub, root3, 1e-6);
  ok &= near(d, "super", sup, 2.0, 1e-10);
  if (sup - sub <= 0.25) {
    d << " separation " << sup - sub << " <= 0.25";
    ok = false;
  }
  CellOptions fine = opts;
  const double c256 = effective_critical(wave_coeff, opts).A;
  fine.nt = 512;
  fine.nx = 512;
  const double c512 = effective_critical(wave_coeff, fine).A;
  d << " critical256=" << c256 << " critical512=" << c512;
  if (std::abs(c256 - c512) > 1e-3) {
    d << " drift " << c256 - c512 << " > 1e-3";
    ok = false;
  }
  return ok;
}

// 3: the d-dimensional corrector machinery reduced to the 1-D sine medium
// reproduces sqrt(3) within 1e-3 at n_x=256 through every solver path, in
// under 60 s. Returns the critical continuation value for criterion 5.
static std::optional<double> corrector_A_critical;
static bool criterion3(std::ostringstream& d) {
  const auto t0 = std::chrono::steady_clock::now();
  const Environment env = build_environment(sine1d());
  const CorrectorWorkspace ws = assemble_operator(env, make_grid(1, 4, 256));
  bool ok = near(d, "sub_direct", sub_direct(ws).eff.A(0, 0), root3, 1e-3);
  ok &= near(d, "super_direct", super_direct(ws).eff.A(0, 0), root3, 1e-3);
  const double a_sub = lambda_continuation(ws, sub_sc()).eff.A(0, 0);
  const double a_crit = lambda_continuation(ws, crit_sc()).eff.A(0, 0);
  const double a_sup = lambda_continuation(ws, super_sc()).eff.A(0, 0);
  ok &= near(d, "cont_sub", a_sub, root3, 1e-3);
  ok &= near(d, "cont_critical", a_crit, root3, 1e-3);
  ok &= near(d, "cont_super", a_sup, root3, 1e-3);
  corrector_A_critical = a_crit;
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  if (secs >= 60.0) {
    d << " too slow " << secs << "s";
    ok = false;
  }
  return ok;
}

// 4: along the default schedule lambda = 2^-2 .. 2^-10 on the traveling
// wave, the vanishing-mass diagnostic lambda*||u||^2 ends below 10% of its
// start and the xi Cauchy gaps decrease monotonically up to 5%.
static bool criterion4(std::ostringstream& d) {
  const Environment env = build_environment(wave1d());
  const CorrectorWorkspace ws = assemble_operator(env, make_grid(1, 128, 128));
  const ContinuationResult res = lambda_continuation(ws, crit_sc());
  const auto& h = res.history;
  bool ok = h.size() == 9;
  const double first = h.front().l2_pi, last = h.back().l2_pi;
  d << " l2_pi " << first << " -> " << last;
  if (!(last < 0.1 * first)) {
    d << " (no decay)";
    ok = false;
  }
  for (size_t i = 2; i < h.size(); ++i)
    if (h[i].cauchy_gap > 1.05 * h[i - 1].cauchy_gap) {
      d << " gap up at lambda=" << h[i].lambda << " (" << h[i - 1].cauchy_gap
        << " -> " << h[i].cauchy_gap << ")";
      ok = false;
    }
  if (ok) d << " gaps " << h[1].cauchy_gap << " .. " << h.back().cauchy_gap;
  return ok;
}

// 5: the variance of the macroscopic process at t=1 on the sine medium,
// eps=0.05 critical, 10^4 paths, matches the corrector-based A within
// 3 standard errors, in under 5 min.
static bool criterion5(std::ostringstream& d) {
  const auto t0 = std::chrono::steady_clock::now();
  const Environment env = build_environment(sine1d());
  SimOptions opts;
  opts.seed = 52026;
  // the default step is ~0.7 medium periods at eps=0.05 and inflates the
  // variance; refine until the Euler bias sits well inside the allowance
  opts.c_step = 0.005;
  const std::vector<Vec2> pts =
      terminal_ensemble(env, crit_sc(), 0.05, Vec2::Zero(), 1.0, 10000, opts);
  const CovarianceEstimate cov = empirical_covariance(pts, 1);
  const double a_ref = corrector_A_critical.value_or(root3);
  const double var = cov.cov(0, 0), se = cov.stderr_(0, 0);
  d << " var=" << var << " corrector_A=" << a_ref << " stderr=" << se;
  bool ok = std::abs(var - a_ref) <= 3.0 * se;
  if (!ok) d << " |diff|=" << std::abs(var - a_ref) << " > 3*stderr";
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  if (secs >= 300.0) {
    d << " too slow " << secs << "s";
    ok = false;
  }
  return ok;
}

// 6: Feynman-Kac values for the gaussian-bump payoff at x=0, t=1 approach
// the closed-form limit (1+sqrt(3))^{-1/2}; the gap is weakly decreasing
// over eps = 0.4, 0.2, 0.1 within MC noise and ends below 3*stderr + 0.05.
static bool criterion6(std::ostringstream& d) {
  const Environment env = build_environment(sine1d());
  EffectiveCoefficients eff;
  eff.dim = 1;
  eff.A = Mat::Zero();
  eff.A(0, 0) = root3;
  eff.C = Vec2::Zero();
  eff.U = 0.0;
  SimOptions opts;
  opts.seed = 62026;
  // refined step so the discretization bias is subdominant to the
  // homogenization gap being measured
  opts.c_step = 0.01;
  const CompareResult res = compare_homogenization(
      env, crit_sc(), eff, Payoff::gaussian(1.0, Vec2::Zero(), 1.0),
      Vec2::Zero(), 1.0, {0.4, 0.2, 0.1}, 10000, opts);
  bool ok = near(d, "z_bar", res.rows.front().limit,
                 0.6050003337060556, 1e-12);
  for (const auto& r : res.rows)
    d << " gap(" << r.eps << ")=" << r.abs_err << "+-" << r.mc.stderr_;
  for (size_t i = 1; i < res.rows.size(); ++i) {
    const auto& a = res.rows[i - 1];
    const auto& b = res.rows[i];
    const double slack =
        3.0 * std::sqrt(a.mc.stderr_ * a.mc.stderr_ +
                        b.mc.stderr_ * b.mc.stderr_);
    if (b.abs_err > a.abs_err + slack) {
      d << " gap grew at eps=" << b.eps;
      ok = false;
    }
  }
  const auto& fin = res.rows.back();
  if (fin.abs_err > 3.0 * fin.mc.stderr_ + 0.05) {
    d << " final gap " << fin.abs_err << " > 3*stderr+0.05";
    ok = false;
  }
  return ok;
}

// 7: time averages along rescaled trajectories match the invariant-measure
// averages: constant (exact), pure sine mode on the flat and on the tilted
// medium, and the centered c-field. Gaps at eps=0.1 within 3*stderr, and the
// eps=0.2 -> 0.1 gap shrinks within 2 combined stderr. The 1e-12 floor only
// covers roundoff in the zero-variance constant family.
static bool criterion7(std::ostringstream& d) {
  struct Family {
    const char* name;
    EnvironmentSpec spec;
    Observable g;
    double c_step;
    long n;
  };
  TrigMode sine_mode = mode1(0, 1, 1.0, -half_pi);
  const std::vector<Family> families{
      {"const", sine1d(), Observable::constant(0.7), 0.25, 64},
      {"mode", sine1d(), Observable::trig_mode(sine_mode), 0.004, 400},
      {"tilted", tilted1d(), Observable::trig_mode(sine_mode), 0.004, 400},
      {"cfield", cfield1d(), Observable::c_field(), 0.004, 400},
  };
  bool ok = true;
  for (const auto& fam : families) {
    const Environment env = build_environment(fam.spec);
    ErgodicOptions opts;
    opts.seed = 72026;
    opts.c_step = fam.c_step;
    const ErgodicResult r2 =
        ergodic_average_check(env, crit_sc(), 0.2, fam.g, 1.0, fam.n, opts);
    const ErgodicResult r1 =
        ergodic_average_check(env, crit_sc(), 0.1, fam.g, 1.0, fam.n, opts);
    d << " " << fam.name << ": gap02=" << r2.gap << " gap01=" << r1.gap
      << " se=" << r1.stderr_;
    if (std::abs(r1.gap) > 3.0 * r1.stderr_ + 1e-12) {
      d << " (3*stderr exceeded)";
      ok = false;
    }
    const double comb = std::sqrt(r1.stderr_ * r1.stderr_ +
                                  r2.stderr_ * r2.stderr_);
    if (std::abs(r1.gap) > std::abs(r2.gap) + 2.0 * comb + 1e-12) {
      d << " (no shrink)";
      ok = false;
    }
  }
  return ok;
}

// 8: the stream matrix H12 = 0.5 sin(2 pi x1) sin(2 pi x2) on a = Id
// enhances diffusion: assembled A is symmetric with both eigenvalues
// >= 1 - 1e-6.
static bool criterion8(std::ostringstream& d) {
  const Environment env = build_environment(enhance2d());
  const CorrectorWorkspace ws = assemble_operator(env, make_grid(2, 4, 64));
  const Mat A = sub_direct(ws).eff.A;
  d << " A=[" << A(0, 0) << "," << A(0, 1) << ";" << A(1, 0) << "," << A(1, 1)
    << "]";
  bool ok = true;
  if (std::abs(A(0, 1) - A(1, 0)) > 1e-12) {
    d << " not symmetric";
    ok = false;
  }
  const double lo = min_eigenvalue(A, 2);
  d << " min_eig=" << lo;
  if (lo < 1.0 - 1e-6) {
    d << " < 1-1e-6";
    ok = false;
  }
  return ok;
}

// 9: structural invariants on 100 randomized media with fixed seeds:
// pi-weight normalization, summation-by-parts of the full operator pairing,
// coercivity against the reference form, vanishing of the antisymmetric
// form's quadratic, and analytic jets against central differences.
static bool criterion9(std::ostringstream& d) {
  int bad_trials = 0;
  std::string first_fail;
  for (int trial = 0; trial < 100; ++trial) {
    const int dim = 1 + trial % 2;
    const std::uint64_t seed = 9000 + trial;
    std::ostringstream why;
    try {
      const Environment env = build_environment(random_valid(dim, seed));
      const TorusGrid g = make_grid(dim, 6, 12);
      const CorrectorWorkspace ws = assemble_operator(env, g);
      const long N = g.size();

      if (std::abs(ws.w.sum() - 1.0) > 1e-12 || ws.w.minCoeff() <= 0.0)
        why << "weights;";

      Eigen::VectorXd u(N), v(N);
      for (long p = 0; p < N; ++p) {
        u(p) = 2.0 * rng::uniform(seed, 9, static_cast<std::uint64_t>(p), 0) -
               1.0;
        v(p) = 2.0 * rng::uniform(seed, 9, static_cast<std::uint64_t>(p), 1) -
               1.0;
      }

      // summation by parts: the pi-pairing of S = W^{-1}K - theta Dt is the
      // symmetrized K form; the Dt part cancels exactly
      const double theta = 0.7;
      auto Sv = [&](const Eigen::VectorXd& z) -> Eigen::VectorXd {
        return ws.WiK * z - theta * (ws.Dt * z);
      };
      const double lhs = Sv(u).dot(ws.w.asDiagonal() * v) +
                         Sv(v).dot(ws.w.asDiagonal() * u);
      const double rhs = u.dot(ws.K * v) + v.dot(ws.K * u);
      if (std::abs(lhs - rhs) > 1e-9 * (std::abs(lhs) + std::abs(rhs) + 1.0))
        why << "sbp;";

      // coercivity witness: m = 0.6 for this catalog
      const double ea = u.dot(ws.K * u), et = u.dot(ws.Ktilde * u);
      if (ea < 0.6 * et - 1e-9 * (1.0 + std::abs(ea))) why << "coercivity;";

      if (dim == 2) {
        const SpMat KH = detail::assemble_form(
            env, g, [&](double t, const Point& x) { return env.H_at(t, x); });
        const double qh = u.dot(KH * u);
        if (std::abs(qh) > 1e-9 * (1.0 + u.squaredNorm())) why << "hform;";
      }

      // jets against central differences
      const TrigField& field = env.spec.a[0];
      for (int pt = 0; pt < 3; ++pt) {
        const double t =
            rng::uniform(seed, 9, 100 + static_cast<std::uint64_t>(pt), 2);
        Point x{rng::uniform(seed, 9, 100 + static_cast<std::uint64_t>(pt), 3),
                rng::uniform(seed, 10, 100 + static_cast<std::uint64_t>(pt), 0)};
        const FieldJet jet = field.jet(t, x);
        const double hh = 1e-5;
        const double fd_t =
            (field.eval(t + hh, x) - field.eval(t - hh, x)) / (2.0 * hh);
        if (std::abs(fd_t - jet.dt) > 1e-5 * (1.0 + std::abs(jet.dt)))
          why << "jet_t;";
        for (int ax = 0; ax < dim; ++ax) {
          Point xp = x, xm = x;
          xp[ax] += hh;
          xm[ax] -= hh;
          const double fd_x =
              (field.eval(t, xp) - field.eval(t, xm)) / (2.0 * hh);
          if (std::abs(fd_x - jet.dx[ax]) > 1e-5 * (1.0 + std::abs(jet.dx[ax])))
            why << "jet_x;";
        }
      }
    } catch (const std::exception& e) {
      why << "threw " << e.what();
    }
    if (!why.str().empty()) {
      ++bad_trials;
      if (first_fail.empty())
        first_fail = " trial " + std::to_string(trial) + ": " + why.str();
    }
  }
  d << " trials=100 failed=" << bad_trials << first_fail;
  return bad_trials == 0;
}

// 10: the continuity-modulus table for the integral of the centered c-field
// tracks the sqrt(delta) ln(1/delta) envelope: ratio spread across
// delta = 0.1, 0.05, 0.025 within a factor 2 per eps, and per-delta ratios
// within 50% between eps = 0.1 and 0.05.
static bool criterion10(std::ostringstream& d) {
  const Environment env = build_environment(cfield1d());
  ModulusOptions opts;
  opts.seed = 102026;
  opts.c_step = 0.05;
  const std::vector<double> deltas{0.1, 0.05, 0.025};
  const ModulusResult r1 = modulus_diagnostic(
      env, crit_sc(), 0.1, Observable::c_field(), 1.0, deltas, 256, opts);
  const ModulusResult r2 = modulus_diagnostic(
      env, crit_sc(), 0.05, Observable::c_field(), 1.0, deltas, 256, opts);
  bool ok = true;
  for (const ModulusResult* r : {&r1, &r2}) {
    double lo = r->ratio[0], hi = r->ratio[0];
    for (double v : r->ratio) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    d << " eps=" << r->eps << " ratios=[" << r->ratio[0] << "," << r->ratio[1]
      << "," << r->ratio[2] << "]";
    if (!(lo > 0.0) || hi / lo > 2.0) {
      d << " spread " << hi / lo << " > 2";
      ok = false;
    }
  }
  for (size_t i = 0; i < deltas.size(); ++i) {
    const double a = r1.ratio[i], b = r2.ratio[i];
    const double spread = std::max(a, b) / std::min(a, b);
    if (!(std::min(a, b) > 0.0) || spread > 1.5) {
      d << " eps-spread at delta=" << deltas[i] << " is " << spread << " > 1.5";
      ok = false;
    }
  }
  return ok;
}

int main() {
  Gate gate;
  gate.criterion(1, criterion1);
  gate.criterion(2, criterion2);
  gate.criterion(3, criterion3);
  gate.criterion(4, criterion4);
  gate.criterion(5, criterion5);
  gate.criterion(6, criterion6);
  gate.criterion(7, criterion7);
  gate.criterion(8, criterion8);
  gate.criterion(9, criterion9);
  gate.criterion(10, criterion10);
  if (gate.failures == 0) std::printf("acceptance: all criteria pass\n");
  else std::printf("acceptance: %d criteria failing\n", gate.failures);
  return gate.failures;
}
