#pragma once

// Resolvent correctors for the environment-as-seen-from-the-particle process
// and the effective coefficients assembled from them.
//
// The generator splits as L + theta * D_t with
//   L u = 1/2 e^{2V} sum_ij D_i( e^{-2V} (a + H)_ij D_j u ),
// and the corrector u_lambda solves
//   lambda u - L u - theta(lambda) D_t u = rhs,  rhs in { b_1..b_d, c }.
//
// Discretization: one sparse operator on the space-time torus grid.
//  * Diagonal entries a_ii: conservative face fluxes, coefficient and
//    exp(-2V) evaluated at face midpoints.
//  * Off-diagonal entries (a_ij, H_ij): node-centered averaged gradients.
//  * D_t: centered periodic differences (exactly antisymmetric under the
//    pi-weights, because V carries no time modes).
// The operator is *defined* through its bilinear form, so summation by parts
//   <L_h u, v>_pi = -1/2 <(a+H) grad_h u, grad_h v>_pi
// holds to roundoff by construction, and with it the energy identity
//   lambda <u,u>_pi + 1/2 <a grad u, grad u>_pi = <rhs, u>_pi.
//
// sigma-gradients: xi_i = sigma^T (node-averaged face gradient of u^i);
// effective coefficients
//   A = <(sigma + xi*)(sigma + xi*)^T>_pi,
//   C = <(sigma + xi*) kappa>_pi,   U = <|kappa|^2/2 + d>_pi.
//
// The lambda-continuation walks lambda = 2^-2 .. 2^-10 with warm starts.
// theta follows the regime: lambda^{1-alpha/(2 beta)} for sub/super, 1 at
// criticality. The sub limit is cross-checked by slice-elliptic solves (time
// frozen to a parameter), the super limit by one elliptic solve in the
// time-averaged medium.

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <cmath>
#include <optional>
#include <vector>

#include "sthom/environment.hpp"
#include "sthom/errors.hpp"
#include "sthom/grid.hpp"
#include "sthom/scaling.hpp"

namespace sthom {

using SpMat = Eigen::SparseMatrix<double>;

struct CorrectorOptions {
  double tol = 1e-9;      // relative residual target, unweighted l2
  long max_iter = 50000;
  int k_min = 2, k_max = 10;     // default lambda schedule 2^-k
  std::vector<double> schedule;  // explicit decreasing schedule, overrides k_*
  double trend_factor = 0.5;  // NoTrend when lam|u|^2 fails to drop this much

  std::vector<double> lambdas() const {
    if (!schedule.empty()) return schedule;
    std::vector<double> out;
    for (int k = k_min; k <= k_max; ++k) out.push_back(std::pow(2.0, -k));
    return out;
  }
};

struct CorrectorWorkspace {
  TorusGrid grid;
  const Environment* env = nullptr;
  Eigen::VectorXd w;   // probability weights of the discrete pi-measure
  SpMat K;             // u^T K u = 1/2 <(a+H) grad u, grad u>_pi
  SpMat Ktilde;        // same with a_tilde: u^T Ktilde u = ||u||_1^2
  SpMat WiK;           // row-scaled: -L_h
  SpMat Dt;            // centered time derivative
};

struct ResolventSolution {
  Eigen::VectorXd u;
  double lambda = 0.0, theta = 0.0;
  double residual = 0.0;
  long iterations = 0;
  double l2_pi = 0.0;         // lambda ||u||_{2,pi}^2
  double energy_a = 0.0;      // 1/2 <(a+H) grad u, grad u>_pi (H part vanishes)
  double energy_tilde = 0.0;  // ||u||_1^2
  double rhs_pairing = 0.0;   // <rhs, u>_pi
};

struct EffectiveCoefficients {
  int dim = 1;
  Mat A = Mat::Zero();
  Vec2 C = Vec2::Zero();
  double U = 0.0;
};

namespace detail {

/// Assemble the pi-weighted bilinear form for a coefficient tensor given by
/// `coeff(t, x) -> Mat` (full matrix; the antisymmetric part lands in the
/// node-centered terms). Slice problems pass a grid view with nt = 1.
template <typename CoeffFn>
SpMat assemble_form(const Environment& env, const TorusGrid& g, CoeffFn&& coeff) {
  const int dim = g.dim;
  const long N = g.size();
  const double vol = g.ht() * g.hx(0) * (dim == 2 ? g.hx(1) : 1.0);

  // Node-weight normalization; faces reuse it so the form stays symmetric.
  double wtot = 0.0;
  for (int i = 0; i < g.nx0; ++i)
    for (int j = 0; j < g.nx1; ++j)
      wtot += std::exp(-2.0 * env.V_at(g.xcoord(i, j))) * g.nt;
  wtot *= vol;

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(N) * (dim == 2 ? 20 : 6));

  for (int k = 0; k < g.nt; ++k) {
    const double t = g.tcoord(k);
    for (int i = 0; i < g.nx0; ++i)
      for (int j = 0; j < g.nx1; ++j) {
        const long p = g.index(k, i, j);
        const Point xp = g.xcoord(i, j);

        // axis-0 face to the right of (i,j)
        {
          Point xf = xp;
          xf[0] += 0.5 * g.hx(0);
          const double wf = std::exp(-2.0 * env.V_at(xf)) * vol / wtot;
          const double c00 = coeff(t, xf)(0, 0);
          const double gcoef = 0.5 * wf * c00 / (g.hx(0) * g.hx(0));
          const long q = g.index(k, (i + 1) % g.nx0, j);
          trip.emplace_back(p, p, gcoef);
          trip.emplace_back(q, q, gcoef);
          trip.emplace_back(p, q, -gcoef);
          trip.emplace_back(q, p, -gcoef);
        }
        if (dim == 2) {
          Point xf = xp;
          xf[1] += 0.5 * g.hx(1);
          const double wf = std::exp(-2.0 * env.V_at(xf)) * vol / wtot;
          const double c11 = coeff(t, xf)(1, 1);
          const double gcoef = 0.5 * wf * c11 / (g.hx(1) * g.hx(1));
          const long q = g.index(k, i, (j + 1) % g.nx1);
          trip.emplace_back(p, p, gcoef);
          trip.emplace_back(q, q, gcoef);
          trip.emplace_back(p, q, -gcoef);
          trip.emplace_back(q, p, -gcoef);

          // node-centered cross terms, i != j
          const double wp = std::exp(-2.0 * env.V_at(xp)) * vol / wtot;
          const Mat cc = coeff(t, xp);
          const long ip = g.index(k, (i + 1) % g.nx0, j);
          const long im = g.index(k, (i + g.nx0 - 1) % g.nx0, j);
          const long jp = g.index(k, i, (j + 1) % g.nx1);
          const long jm = g.index(k, i, (j + g.nx1 - 1) % g.nx1);
          const double f0 = 1.0 / (2.0 * g.hx(0)), f1 = 1.0 / (2.0 * g.hx(1));
          // c01: rows from axis-0 gradient of v, cols from axis-1 of u
          for (int sv = 0; sv < 2; ++sv)
            for (int su = 0; su < 2; ++su) {
              const double sgn = (sv == 0 ? 1.0 : -1.0) * (su == 0 ? 1.0 : -1.0);
              trip.emplace_back(sv == 0 ? ip : im, su == 0 ? jp : jm,
                                0.5 * wp * cc(0, 1) * sgn * f0 * f1);
              trip.emplace_back(sv == 0 ? jp : jm, su == 0 ? ip : im,
                                0.5 * wp * cc(1, 0) * sgn * f0 * f1);
            }
        }
      }
  }
  SpMat K(N, N);
  K.setFromTriplets(trip.begin(), trip.end());
  K.makeCompressed();
  return K;
}

inline SpMat assemble_dt(const TorusGrid& g) {
  const long N = g.size();
  SpMat Dt(N, N);
  if (g.nt < 3) return Dt;  // derivative of a <=2-slice grid is identically 0
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(N) * 2);
  const double f = 0.5 * g.nt;
  for (int k = 0; k < g.nt; ++k)
    for (int i = 0; i < g.nx0; ++i)
      for (int j = 0; j < g.nx1; ++j) {
        trip.emplace_back(g.index(k, i, j), g.index((k + 1) % g.nt, i, j), f);
        trip.emplace_back(g.index(k, i, j),
                          g.index((k + g.nt - 1) % g.nt, i, j), -f);
      }
  Dt.setFromTriplets(trip.begin(), trip.end());
  Dt.makeCompressed();
  return Dt;
}

}  // namespace detail

/// Build the discrete operator pieces on a grid that resolves the medium.
inline CorrectorWorkspace assemble_operator(const Environment& env,
                                            const TorusGrid& grid) {
  grid.require_resolves(env.spec);
  CorrectorWorkspace ws;
  ws.grid = grid;
  ws.env = &env;
  const auto wv = grid.pi_weights(env);
  ws.w = Eigen::Map<const Eigen::VectorXd>(wv.data(), wv.size());
  ws.K = detail::assemble_form(
      env, grid, [&](double t, const Point& x) {
        return Mat(env.a_at(t, x) + env.H_at(t, x));
      });
  ws.Ktilde = detail::assemble_form(
      env, grid, [&](double t, const Point& x) { return env.a_tilde_at(t, x); });
  ws.WiK = ws.w.cwiseInverse().asDiagonal() * ws.K;
  ws.Dt = detail::assemble_dt(grid);
  return ws;
}

/// Node values of a pointwise function as a rhs vector.
template <typename F>
Eigen::VectorXd grid_values(const TorusGrid& g, F&& fn) {
  Eigen::VectorXd v(g.size());
  for (int k = 0; k < g.nt; ++k)
    for (int i = 0; i < g.nx0; ++i)
      for (int j = 0; j < g.nx1; ++j)
        v(g.index(k, i, j)) = fn(g.tcoord(k), g.xcoord(i, j));
  return v;
}

/// One resolvent solve (lambda I - L_h - theta D_t) u = rhs by BiCGSTAB with
/// diagonal preconditioning. Throws SolverDivergence if the unweighted relative
/// residual cannot be pushed below 10*tol within max_iter iterations.
inline ResolventSolution solve_resolvent(
    const CorrectorWorkspace& ws, const Eigen::VectorXd& rhs, double lambda,
    double theta, const CorrectorOptions& opts = {},
    const Eigen::VectorXd* guess = nullptr) {
  const long N = ws.grid.size();
  SpMat S = ws.WiK;
  if (theta != 0.0 && ws.Dt.nonZeros() > 0) S = S - theta * ws.Dt;
  SpMat I(N, N);
  I.setIdentity();
  S = S + lambda * I;
  S.makeCompressed();

  Eigen::BiCGSTAB<SpMat> krylov;
  krylov.setTolerance(opts.tol);
  krylov.setMaxIterations(opts.max_iter);
  krylov.compute(S);
  ResolventSolution sol;
  if (guess != nullptr && guess->size() == N)
    sol.u = krylov.solveWithGuess(rhs, *guess);
  else
    sol.u = krylov.solve(rhs);
  sol.iterations = krylov.iterations();
  const double rhs_norm = rhs.norm();
  sol.residual = rhs_norm > 0.0 ? (S * sol.u - rhs).norm() / rhs_norm : 0.0;
  if (!std::isfinite(sol.residual) || sol.residual > 10.0 * opts.tol)
    throw SolverDivergence("resolvent solve stalled: relative residual " +
                      std::to_string(sol.residual) + " at lambda " +
                      std::to_string(lambda));
  sol.lambda = lambda;
  sol.theta = theta;
  sol.l2_pi = lambda * sol.u.dot(ws.w.cwiseProduct(sol.u));
  sol.energy_a = sol.u.dot(ws.K * sol.u);
  sol.energy_tilde = sol.u.dot(ws.Ktilde * sol.u);
  sol.rhs_pairing = rhs.dot(ws.w.cwiseProduct(sol.u));
  return sol;
}

/// sigma^T (node-averaged face gradient) per node; the time axis never enters.
inline std::vector<Vec2> sigma_gradient(const CorrectorWorkspace& ws,
                                        const Eigen::VectorXd& u) {
  const TorusGrid& g = ws.grid;
  const int dim = g.dim;
  std::vector<Vec2> xi(static_cast<size_t>(g.size()), Vec2::Zero());
  for (int k = 0; k < g.nt; ++k)
    for (int i = 0; i < g.nx0; ++i)
      for (int j = 0; j < g.nx1; ++j) {
        const long p = g.index(k, i, j);
        Vec2 grad = Vec2::Zero();
        grad(0) = (u(g.index(k, (i + 1) % g.nx0, j)) -
                   u(g.index(k, (i + g.nx0 - 1) % g.nx0, j))) *
                  0.5 * g.nx0;
        if (dim == 2)
          grad(1) = (u(g.index(k, i, (j + 1) % g.nx1)) -
                     u(g.index(k, i, (j + g.nx1 - 1) % g.nx1))) *
                    0.5 * g.nx1;
        const Mat sig = ws.env->sigma_at(g.tcoord(k), g.xcoord(i, j));
        Vec2 v = Vec2::Zero();
        for (int r = 0; r < dim; ++r)
          for (int s = 0; s < dim; ++s) v(r) += sig(s, r) * grad(s);
        xi[static_cast<size_t>(p)] = v;
      }
  return xi;
}

/// A, C, U assembled from the sigma-gradients of the coordinate correctors
/// (xi, one field per coordinate) and of the drift-functional corrector
/// (kappa; empty when c is inactive).
inline EffectiveCoefficients effective_coefficients(
    const CorrectorWorkspace& ws, const std::vector<std::vector<Vec2>>& xi,
    const std::vector<Vec2>* kappa) {
  const TorusGrid& g = ws.grid;
  const int dim = g.dim;
  EffectiveCoefficients eff;
  eff.dim = dim;
  for (int k = 0; k < g.nt; ++k)
    for (int i = 0; i < g.nx0; ++i)
      for (int j = 0; j < g.nx1; ++j) {
        const long p = g.index(k, i, j);
        const double wp = ws.w(p);
        const Mat sig = ws.env->sigma_at(g.tcoord(k), g.xcoord(i, j));
        // rows of (sigma + xi*): row r = sigma_{r,.} + xi_r
        Mat rows = Mat::Zero();
        for (int r = 0; r < dim; ++r)
          for (int s = 0; s < dim; ++s)
            rows(r, s) = sig(r, s) + xi[static_cast<size_t>(r)][p](s);
        for (int r = 0; r < dim; ++r)
          for (int s = 0; s < dim; ++s) {
            double acc = 0.0;
            for (int q = 0; q < dim; ++q) acc += rows(r, q) * rows(s, q);
            eff.A(r, s) += wp * acc;
          }
        if (kappa != nullptr) {
          const Vec2& kap = (*kappa)[static_cast<size_t>(p)];
          for (int r = 0; r < dim; ++r) {
            double acc = 0.0;
            for (int q = 0; q < dim; ++q) acc += rows(r, q) * kap(q);
            eff.C(r) += wp * acc;
          }
          eff.U += wp * 0.5 * kap.squaredNorm();
        }
        eff.U += wp * ws.env->d_at(g.tcoord(k), g.xcoord(i, j));
      }
  // Exact symmetry can be lost to roundoff only; restore it.
  eff.A = 0.5 * (eff.A + Mat(eff.A.transpose()));
  return eff;
}

struct LambdaRecord {
  double lambda = 0.0, theta = 0.0;
  double l2_pi = 0.0;          // max over right-hand sides
  double energy_tilde = 0.0;   // max over right-hand sides
  double cauchy_gap = 0.0;     // max over rhs of ||xi(l_k)-xi(l_{k-1})||_{2,pi}
  double residual = 0.0;
  long iterations = 0;
};

struct ContinuationResult {
  ScalingExponents scaling;
  std::vector<ResolventSolution> solutions;  // b_1..b_d, then c if active
  std::vector<std::vector<Vec2>> xi;
  std::vector<Vec2> kappa;
  bool has_c = false;
  std::vector<LambdaRecord> history;
  EffectiveCoefficients eff;
};

/// Walk the lambda schedule with warm starts and assemble the effective
/// coefficients at the terminal lambda. Throws NoTrend when lambda ||u||^2
/// shows no decreasing trend over the schedule.
inline ContinuationResult lambda_continuation(const CorrectorWorkspace& ws,
                                              const ScalingExponents& sc,
                                              const CorrectorOptions& opts = {}) {
  const Environment& env = *ws.env;
  const int dim = env.dim();
  const bool has_c = [&] {
    for (const auto& f : env.spec.f)
      if (!f.zero()) return true;
    return false;
  }();

  std::vector<Eigen::VectorXd> rhs;
  for (int i = 0; i < dim; ++i)
    rhs.push_back(grid_values(ws.grid, [&](double t, const Point& x) {
      return env.drift_at(t, x)(i);
    }));
  if (has_c)
    rhs.push_back(grid_values(
        ws.grid, [&](double t, const Point& x) { return env.c_at(t, x); }));

  ContinuationResult res;
  res.scaling = sc;
  res.has_c = has_c;
  const size_t n_rhs = rhs.size();
  std::vector<Eigen::VectorXd> warm(n_rhs);
  std::vector<std::vector<Vec2>> prev_xi(n_rhs);

  const std::vector<double> schedule = opts.lambdas();
  for (size_t step = 0; step < schedule.size(); ++step) {
    const double lambda = schedule[step];
    const double theta = sc.theta(lambda);
    LambdaRecord rec;
    rec.lambda = lambda;
    rec.theta = theta;
    std::vector<ResolventSolution> sols;
    for (size_t r = 0; r < n_rhs; ++r) {
      ResolventSolution s =
          solve_resolvent(ws, rhs[r], lambda, theta, opts,
                          warm[r].size() > 0 ? &warm[r] : nullptr);
      warm[r] = s.u;
      rec.l2_pi = std::max(rec.l2_pi, s.l2_pi);
      rec.energy_tilde = std::max(rec.energy_tilde, s.energy_tilde);
      rec.residual = std::max(rec.residual, s.residual);
      rec.iterations += s.iterations;
      auto xi_r = sigma_gradient(ws, s.u);
      if (!prev_xi[r].empty()) {
        double gap2 = 0.0;
        for (long p = 0; p < ws.grid.size(); ++p)
          gap2 += ws.w(p) *
                  (xi_r[static_cast<size_t>(p)] - prev_xi[r][static_cast<size_t>(p)])
                      .squaredNorm();
        rec.cauchy_gap = std::max(rec.cauchy_gap, std::sqrt(gap2));
      }
      prev_xi[r] = std::move(xi_r);
      sols.push_back(std::move(s));
    }
    res.history.push_back(rec);
    if (step + 1 == schedule.size()) res.solutions = std::move(sols);
  }

  if (res.history.size() >= 2) {
    const double first = res.history.front().l2_pi;
    const double last = res.history.back().l2_pi;
    if (first > 0.0 && last > opts.trend_factor * first)
      throw NoTrend("lambda ||u||^2 does not decrease over the schedule (" +
                    std::to_string(first) + " -> " + std::to_string(last) + ")");
  }

  for (int i = 0; i < dim; ++i) res.xi.push_back(prev_xi[static_cast<size_t>(i)]);
  if (has_c) res.kappa = prev_xi.back();
  res.eff = effective_coefficients(ws, res.xi, has_c ? &res.kappa : nullptr);
  return res;
}

namespace detail {

/// Slice-elliptic solve with a mean-zero pin (bordered system, direct).
inline Eigen::VectorXd bordered_slice_solve(const SpMat& Kslice,
                                            const Eigen::VectorXd& wslice,
                                            const Eigen::VectorXd& rhs_w) {
  const long n = Kslice.rows();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(Kslice.nonZeros()) + 2 * n);
  for (int c = 0; c < Kslice.outerSize(); ++c)
    for (SpMat::InnerIterator it(Kslice, c); it; ++it)
      trip.emplace_back(it.row(), it.col(), it.value());
  for (long p = 0; p < n; ++p) {
    trip.emplace_back(n, p, wslice(p));
    trip.emplace_back(p, n, wslice(p));
  }
  SpMat M(n + 1, n + 1);
  M.setFromTriplets(trip.begin(), trip.end());
  M.makeCompressed();
  Eigen::SparseLU<SpMat> lu;
  lu.analyzePattern(M);
  lu.factorize(M);
  if (lu.info() != Eigen::Success)
    throw SingularSystem("slice system is singular beyond the constant mode");
  Eigen::VectorXd b(n + 1);
  b.head(n) = rhs_w;
  b(n) = 0.0;
  return lu.solve(b).head(n);
}

}  // namespace detail

struct DirectResult {
  Eigen::VectorXd u;  // corrector on the full grid
  std::vector<std::vector<Vec2>> xi;
  EffectiveCoefficients eff;
};

/// theta -> 0 limit: time is a parameter; solve the elliptic cell problem
/// slice by slice and assemble A over the whole space-time grid.
inline DirectResult sub_direct(const CorrectorWorkspace& ws) {
  const Environment& env = *ws.env;
  const TorusGrid& g = ws.grid;
  const int dim = g.dim;
  const long slice_n = static_cast<long>(g.nx0) * g.nx1;

  DirectResult res;
  res.u = Eigen::VectorXd::Zero(g.size());
  for (int i = 0; i < dim; ++i) {
    Eigen::VectorXd u_full(g.size());
    for (int k = 0; k < g.nt; ++k) {
      // Restrict the form to this slice: reuse the assembler on an nt=1 view.
      TorusGrid gs = g;
      gs.nt = 1;
      const double t = g.tcoord(k);
      SpMat Ks = detail::assemble_form(env, gs, [&](double, const Point& x) {
        return Mat(env.a_at(t, x) + env.H_at(t, x));
      });
      const auto wv = gs.pi_weights(env);
      Eigen::VectorXd wslice =
          Eigen::Map<const Eigen::VectorXd>(wv.data(), wv.size());
      Eigen::VectorXd rhs_w(slice_n);
      for (int ii = 0; ii < g.nx0; ++ii)
        for (int jj = 0; jj < g.nx1; ++jj) {
          const long ps = gs.index(0, ii, jj);
          rhs_w(ps) = wslice(ps) * env.drift_at(t, g.xcoord(ii, jj))(i);
        }
      const Eigen::VectorXd us =
          detail::bordered_slice_solve(Ks, wslice, rhs_w);
      for (int ii = 0; ii < g.nx0; ++ii)
        for (int jj = 0; jj < g.nx1; ++jj)
          u_full(g.index(k, ii, jj)) = us(gs.index(0, ii, jj));
    }
    res.xi.push_back(sigma_gradient(ws, u_full));
    if (i == 0) res.u = u_full;
  }
  res.eff = effective_coefficients(ws, res.xi, nullptr);
  return res;
}

/// theta -> infinity limit: the corrector is time-independent and solves the
/// elliptic problem in the time-averaged medium; sigma stays time-dependent
/// in the assembly of A.
inline DirectResult super_direct(const CorrectorWorkspace& ws) {
  const Environment& env = *ws.env;
  const TorusGrid& g = ws.grid;
  const int dim = g.dim;

  EnvironmentSpec avg = env.spec;
  for (auto& f : avg.a) f = f.time_average();
  for (auto& f : avg.H) f = f.time_average();
  for (auto& f : avg.f) f = f.time_average();
  avg.d = avg.d.time_average();
  const Environment env_avg = build_environment(avg);

  TorusGrid gs = g;
  gs.nt = 1;
  SpMat Ks = detail::assemble_form(env_avg, gs, [&](double, const Point& x) {
    return Mat(env_avg.a_at(0.0, x) + env_avg.H_at(0.0, x));
  });
  const auto wv = gs.pi_weights(env_avg);
  Eigen::VectorXd wslice =
      Eigen::Map<const Eigen::VectorXd>(wv.data(), wv.size());

  DirectResult res;
  for (int i = 0; i < dim; ++i) {
    Eigen::VectorXd rhs_w(gs.size());
    for (int ii = 0; ii < g.nx0; ++ii)
      for (int jj = 0; jj < g.nx1; ++jj) {
        const long ps = gs.index(0, ii, jj);
        rhs_w(ps) = wslice(ps) * env_avg.drift_at(0.0, g.xcoord(ii, jj))(i);
      }
    const Eigen::VectorXd us = detail::bordered_slice_solve(Ks, wslice, rhs_w);
    Eigen::VectorXd u_full(g.size());
    for (int k = 0; k < g.nt; ++k)
      for (int ii = 0; ii < g.nx0; ++ii)
        for (int jj = 0; jj < g.nx1; ++jj)
          u_full(g.index(k, ii, jj)) = us(gs.index(0, ii, jj));
    res.xi.push_back(sigma_gradient(ws, u_full));
    if (i == 0) res.u = u_full;
  }
  res.eff = effective_coefficients(ws, res.xi, nullptr);
  return res;
}

}  // namespace sthom
