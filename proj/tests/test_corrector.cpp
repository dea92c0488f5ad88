#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "sthom/corrector.hpp"
#include "test_media.hpp"

using namespace sthom;
using namespace sthom::testmedia;

namespace {

const double kSqrt3 = 1.7320508075688772;

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

}  // namespace

TEST_CASE("static sine medium reproduces the harmonic mean", "[corrector]") {
  const Environment env = build_environment(sine1d());
  const auto ws = assemble_operator(env, make_grid(1, 4, 256));

  const DirectResult sub = sub_direct(ws);
  CHECK(sub.eff.A(0, 0) == Catch::Approx(kSqrt3).margin(1e-3));
  const DirectResult sup = super_direct(ws);
  CHECK(sup.eff.A(0, 0) == Catch::Approx(kSqrt3).margin(1e-3));

  for (const auto& sc : {sub_sc(), crit_sc(), super_sc()}) {
    const ContinuationResult res = lambda_continuation(ws, sc);
    CHECK(res.eff.A(0, 0) == Catch::Approx(kSqrt3).margin(1e-3));
    CHECK(res.eff.dim == 1);
    CHECK(std::abs(res.eff.C(0)) < 1e-8);
    CHECK(std::abs(res.eff.U) < 1e-10);
  }
}

TEST_CASE("traveling wave: direct solvers hit their closed forms", "[corrector]") {
  const Environment env = build_environment(wave1d());
  const auto ws = assemble_operator(env, make_grid(1, 8, 256));

  // slice-by-slice: every slice is a shifted sine, harmonic mean sqrt(3)
  const DirectResult sub = sub_direct(ws);
  CHECK(sub.eff.A(0, 0) == Catch::Approx(kSqrt3).margin(1e-3));

  // time averaging flattens the medium entirely: corrector 0, A = <a> = 2
  const DirectResult sup = super_direct(ws);
  CHECK(sup.eff.A(0, 0) == Catch::Approx(2.0).margin(1e-12));
  CHECK(sup.u.norm() < 1e-9);
}

TEST_CASE("traveling wave: critical continuation hits the frozen value",
          "[corrector]") {
  const Environment env = build_environment(wave1d());
  const auto ws = assemble_operator(env, make_grid(1, 128, 128));
  const ContinuationResult res = lambda_continuation(ws, crit_sc());
  CHECK(res.eff.A(0, 0) == Catch::Approx(1.7403307933333018).margin(1e-4));

  // the resolvent diagnostic trends to zero along the schedule
  REQUIRE(res.history.size() >= 2);
  CHECK(res.history.back().l2_pi < 0.1 * res.history.front().l2_pi);
  // Cauchy gaps contract overall
  double first_gap = 0.0, last_gap = 0.0;
  for (const auto& rec : res.history)
    if (rec.cauchy_gap > 0.0) {
      if (first_gap == 0.0) first_gap = rec.cauchy_gap;
      last_gap = rec.cauchy_gap;
    }
  CHECK(last_gap < first_gap);
}

TEST_CASE("stream enhancement lifts the diffusivity above the identity",
          "[corrector]") {
  const Environment env = build_environment(enhance2d());
  const auto ws = assemble_operator(env, make_grid(2, 4, 64));
  const DirectResult res = sub_direct(ws);
  const Mat A = res.eff.A;
  CHECK((A - A.transpose()).norm() < 1e-12);
  CHECK(A(0, 0) == Catch::Approx(1.030770695960).margin(2e-4));
  CHECK(A(1, 1) == Catch::Approx(1.030770695960).margin(2e-4));
  CHECK(std::abs(A(0, 1)) < 1e-8);
  CHECK(min_eigenvalue(A, 2) >= 1.0 - 1e-6);
}

TEST_CASE("drift functional feeds the growth coefficients", "[corrector]") {
  const Environment env = build_environment(cfield1d());
  const auto ws = assemble_operator(env, make_grid(1, 4, 128));
  const ContinuationResult res = lambda_continuation(ws, crit_sc());
  REQUIRE(res.has_c);
  REQUIRE(res.solutions.size() == 2);
  REQUIRE(!res.kappa.empty());
  // flat unit diffusion: the coordinate corrector vanishes
  CHECK(res.eff.A(0, 0) == Catch::Approx(1.0).margin(1e-10));
  // c = 0.6 pi cos(2 pi x) and L = (1/2) Dxx give the corrector
  // (0.3/pi) cos(2 pi x), so kappa = -0.6 sin(2 pi x): C averages out and
  // U = <kappa^2>/2 = 0.36/4 = 0.09
  CHECK(std::abs(res.eff.C(0)) < 1e-7);
  CHECK(res.eff.U == Catch::Approx(0.09).margin(3e-4));

  EnvironmentSpec with_d = cfield1d();
  with_d.d = TrigField::constant(1, 0.3);
  const Environment env2 = build_environment(with_d);
  const auto ws2 = assemble_operator(env2, make_grid(1, 4, 128));
  const ContinuationResult res2 = lambda_continuation(ws2, crit_sc());
  CHECK(res2.eff.U == Catch::Approx(0.3 + 0.09).margin(3e-4));
}

TEST_CASE("continuation rejects data with no decaying trend", "[corrector]") {
  const Environment env = build_environment(sine1d());
  const auto ws = assemble_operator(env, make_grid(1, 4, 64));
  CorrectorOptions opts;
  opts.trend_factor = 1e-6;
  CHECK_THROWS_AS(lambda_continuation(ws, crit_sc(), opts), NoTrend);
}

TEST_CASE("explicit schedules drive the continuation", "[corrector]") {
  const Environment env = build_environment(sine1d());
  const auto ws = assemble_operator(env, make_grid(1, 4, 64));
  CorrectorOptions opts;
  opts.schedule = {0.25, 0.05, 0.01};
  const ContinuationResult res = lambda_continuation(ws, crit_sc(), opts);
  REQUIRE(res.history.size() == 3);
  CHECK(res.history[0].lambda == 0.25);
  CHECK(res.history[2].lambda == 0.01);
  CHECK(res.solutions.front().lambda == 0.01);
}

TEST_CASE("cross-solver agreement on the separable medium", "[corrector]") {
  const Environment env = build_environment(separable1d());
  const auto ws = assemble_operator(env, make_grid(1, 32, 128));
  // both limits collapse to sqrt(3) because the time factor averages to one
  CHECK(sub_direct(ws).eff.A(0, 0) == Catch::Approx(kSqrt3).margin(2e-3));
  CHECK(super_direct(ws).eff.A(0, 0) == Catch::Approx(kSqrt3).margin(2e-3));
}
