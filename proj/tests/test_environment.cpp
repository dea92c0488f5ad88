#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "sthom/environment.hpp"
#include "sthom/grid.hpp"
#include "test_media.hpp"

using namespace sthom;
using namespace sthom::testmedia;

namespace {

const double kPi = std::acos(-1.0);

bool has_check(const ValidationReport& rep, const std::string& name) {
  for (const auto& v : rep.violations)
    if (v.check == name) return true;
  return false;
}

}  // namespace

TEST_CASE("fixture media validate", "[env]") {
  for (const auto& spec : {sine1d(), wave1d(), separable1d(), enhance2d(),
                           cfield1d(), tilted1d(), brownian(1), brownian(2)}) {
    const ValidationReport rep = validate_environment(spec);
    INFO(rep.summary());
    CHECK(rep.ok);
  }
}

TEST_CASE("drift of the divergence form on the sine medium", "[env]") {
  const Environment env = build_environment(sine1d());
  // b = a'/2 = pi cos(2 pi x)
  CHECK(env.drift_at(0.3, {0.0, 0.0})(0) == Catch::Approx(kPi).margin(1e-13));
  CHECK(env.drift_at(0.0, {0.25, 0.0})(0) == Catch::Approx(0.0).margin(1e-13));
  CHECK(env.drift_at(0.0, {0.5, 0.0})(0) == Catch::Approx(-kPi).margin(1e-13));
  CHECK(env.sigma_at(0.0, {0.25, 0.0})(0, 0) ==
        Catch::Approx(std::sqrt(3.0)).margin(1e-13));
  CHECK(env.c_at(0.1, {0.4, 0.0}) == 0.0);
  CHECK(env.Z == Catch::Approx(1.0).margin(1e-13));
}

TEST_CASE("potential tilts drift and invariant weight", "[env]") {
  const Environment env = build_environment(tilted1d(), 64);
  // a = 1: b = -D V = -pi cos(2 pi x)
  CHECK(env.drift_at(0.0, {0.0, 0.0})(0) == Catch::Approx(-kPi).margin(1e-12));
  // Z = integral of e^{-sin(2 pi x)} = I_0(1)
  CHECK(env.Z == Catch::Approx(1.2660658777520084).margin(1e-12));
}

TEST_CASE("stream term enters the drift antisymmetrically", "[env]") {
  const Environment env = build_environment(enhance2d());
  const Point x{0.2, 0.35};
  const Mat h = env.H_at(0.0, x);
  CHECK(h(0, 1) == Catch::Approx(0.5 * std::sin(two_pi * x[0]) *
                                 std::sin(two_pi * x[1])).margin(1e-13));
  CHECK(h(0, 1) == -h(1, 0));
  CHECK(h(0, 0) == 0.0);
  // b_1 = D_2 H_12 / 2, b_2 = -D_1 H_12 / 2
  const double d2 = 0.5 * two_pi * std::sin(two_pi * x[0]) * std::cos(two_pi * x[1]);
  const double d1 = 0.5 * two_pi * std::cos(two_pi * x[0]) * std::sin(two_pi * x[1]);
  const Vec2 b = env.drift_at(0.0, x);
  CHECK(b(0) == Catch::Approx(0.5 * d2).margin(1e-12));
  CHECK(b(1) == Catch::Approx(-0.5 * d1).margin(1e-12));
}

TEST_CASE("sde coefficients agree with their separate definitions", "[env]") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    for (int dim = 1; dim <= 2; ++dim) {
      const Environment env = build_environment(random_valid(dim, seed));
      for (int p = 0; p < 10; ++p) {
        const double t = p / 10.0 + 0.013;
        const Point x{0.1 * p + 0.05, 0.37 + 0.061 * p};
        const SdeCoeffs co = env.sde_at(t, x);
        CHECK((co.b - env.drift_at(t, x)).norm() < 1e-13);
        CHECK((co.sigma * co.sigma - env.a_at(t, x)).norm() < 1e-11);
      }
    }
  }
}

TEST_CASE("drift functional is centered under the invariant measure", "[env]") {
  for (const auto& spec :
       {cfield1d(), random_valid(1, 11), random_valid(2, 12)}) {
    const Environment env = build_environment(spec);
    TorusGrid g;
    g.dim = spec.dim;
    g.nt = 64;
    g.nx0 = 64;
    g.nx1 = spec.dim == 2 ? 64 : 1;
    const double mean =
        pi_average(env, g, [&](double t, const Point& x) { return env.c_at(t, x); });
    CHECK(std::abs(mean) < 1e-10);
  }
}

TEST_CASE("drift functional expands the product rule", "[env]") {
  // a_tilde = 1, V = sin(2 pi x)/2, f = 0.3 sin(2 pi x):
  // c = D f - 2 V' f.
  EnvironmentSpec s = tilted1d();
  s.f = {field1(0.0, {mode1(0, 1, 0.3, -half_pi)})};
  const Environment env = build_environment(s);
  for (int p = 0; p < 16; ++p) {
    const double x = p / 16.0;
    const double fx = 0.3 * std::sin(two_pi * x);
    const double dfx = 0.3 * two_pi * std::cos(two_pi * x);
    const double dv = kPi * std::cos(two_pi * x);
    CHECK(env.c_at(0.2, {x, 0.0}) ==
          Catch::Approx(dfx - 2.0 * dv * fx).margin(1e-11));
  }
}

TEST_CASE("validator rejects what it must", "[env]") {
  SECTION("time modes in the envelope") {
    EnvironmentSpec s = sine1d();
    s.a_tilde = {field1(2.0, {mode1(1, 1, 0.5, 0.0)})};
    const auto rep = validate_environment(s);
    CHECK(!rep.ok);
    CHECK(has_check(rep, "TimeDependenceViolation"));
  }
  SECTION("indefinite envelope") {
    EnvironmentSpec s = sine1d();
    s.a = {field1(0.0, {mode1(0, 1, 1.0, -half_pi)})};
    s.a_tilde = s.a;
    const auto rep = validate_environment(s);
    CHECK(!rep.ok);
    CHECK(has_check(rep, "PSDViolation"));
  }
  SECTION("pinch bound failure") {
    EnvironmentSpec s = wave1d();
    s.constants.M = 1.2;  // max a / a_tilde = 1.5
    const auto rep = validate_environment(s);
    CHECK(!rep.ok);
    CHECK(has_check(rep, "BoundViolation"));
  }
  SECTION("time derivative bound failure") {
    EnvironmentSpec s = wave1d();
    s.constants.C2a = 3.0;  // |D_t a| reaches 2 pi > 3.0 * 2
    const auto rep = validate_environment(s);
    CHECK(!rep.ok);
    CHECK(has_check(rep, "BoundViolation"));
  }
  SECTION("stream bound failure") {
    EnvironmentSpec s = enhance2d();
    s.constants.C1H = 0.3;
    const auto rep = validate_environment(s);
    CHECK(!rep.ok);
    CHECK(has_check(rep, "BoundViolation"));
  }
  SECTION("layout failure") {
    EnvironmentSpec s = sine1d();
    s.f.clear();
    const auto rep = validate_environment(s);
    CHECK(!rep.ok);
    CHECK(has_check(rep, "ConfigViolation"));
  }
  SECTION("active f over a degenerate envelope") {
    EnvironmentSpec s;
    s.dim = 1;
    s.a = {field1(1.0, {mode1(0, 1, -1.0, 0.0)})};  // 1 - cos, zero at x = 0
    s.a_tilde = s.a;
    s.V = TrigField::constant(1, 0.0);
    s.f = {field1(0.0, {mode1(0, 1, 0.1, 0.0)})};
    s.d = TrigField::constant(1, 0.0);
    s.constants = {1.0, 1.0, 2.5, 1.0, 1.0, 1.0};
    const auto rep = validate_environment(s);
    CHECK(!rep.ok);
    CHECK(has_check(rep, "DegeneracyViolation"));
  }
  SECTION("build throws with the report attached") {
    EnvironmentSpec s = enhance2d();
    s.constants.C1H = 0.1;
    try {
      build_environment(s);
      FAIL("expected a validation error");
    } catch (const ValidationError& e) {
      CHECK(!e.report.ok);
      CHECK(!e.report.violations.empty());
    }
  }
}

TEST_CASE("randomized media stay valid under phase redraws", "[env]") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const EnvironmentSpec base = random_valid(seed % 2 == 0 ? 1 : 2, seed);
    REQUIRE(validate_environment(base).ok);
    const EnvironmentSpec drawn = sample_random_phase(base, seed * 31 + 7);
    const auto rep = validate_environment(drawn);
    INFO(rep.summary());
    CHECK(rep.ok);
  }
}

TEST_CASE("phase redraw is deterministic and moves modes together", "[env]") {
  const EnvironmentSpec base = sine1d();
  const EnvironmentSpec d1 = sample_random_phase(base, 99);
  const EnvironmentSpec d2 = sample_random_phase(base, 99);
  CHECK(d1.a[0].modes[0].phase == d2.a[0].modes[0].phase);
  CHECK(d1.a[0].modes[0].phase != base.a[0].modes[0].phase);
  // a and a_tilde share the wavevector, so they shift by the same amount
  // and the medium keeps a = a_tilde pointwise.
  const Environment env = build_environment(d1);
  for (int p = 0; p < 8; ++p) {
    const Point x{p / 8.0, 0.0};
    CHECK(env.a_at(0.1, x)(0, 0) ==
          Catch::Approx(env.a_tilde_at(0.1, x)(0, 0)).margin(1e-13));
  }
}
