#pragma once

// Environment = one realization of the random medium, concretized as a family
// of trigonometric polynomials on the space-time torus together with the
// structural constants it must respect:
//
//   a    diffusion matrix, symmetric, pinched between m*a_tilde and M*a_tilde
//   a_tilde  time-independent reference matrix (may be degenerate)
//   H    antisymmetric stream matrix, |H| <= C1H * a_tilde in the PSD order
//   V    time-independent potential; pi-measure weight is exp(-2V)/Z
//   f    bounded vector field entering only through the drift functional c
//   d    bounded scalar zero-order term
//
// Derived at evaluation time, exactly (term-by-term differentiation):
//   b_i = sum_j ( 1/2 D_j a_ij - a_ij D_j V + 1/2 D_j H_ij )
//   c   = e^{2V} sum_ij D_i ( e^{-2V} sigma_tilde_ij f_j )
//   sigma = symmetric PSD root of a (not a Cholesky factor)

#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sthom/errors.hpp"
#include "sthom/linalg.hpp"
#include "sthom/rng.hpp"
#include "sthom/trig_field.hpp"

namespace sthom {

struct StructuralConstants {
  double m = 1.0;    // lower pinch of a against a_tilde
  double M = 1.0;    // upper pinch
  double K = 0.0;    // uniform sup bound on |a| and |H|
  double C1H = 0.0;  // |H|      <= C1H * a_tilde
  double C2H = 0.0;  // |D_t H|  <= C2H * a_tilde
  double C2a = 0.0;  // |D_t a|  <= C2a * a_tilde
};

/// Upper-triangle position of (i,j), i <= j, for dim-by-dim symmetric storage.
inline int upper_index(int i, int j, int dim) {
  (void)dim;
  if (i == 0) return j;
  return 2;  // dim == 2, (1,1)
}

struct EnvironmentSpec {
  int dim = 1;
  std::vector<TrigField> a;        // upper triangle, size dim*(dim+1)/2
  std::vector<TrigField> a_tilde;  // same layout, time-independent
  std::vector<TrigField> H;        // strict upper triangle, size 0 or 1
  TrigField V;
  std::vector<TrigField> f;  // size dim
  TrigField d;
  StructuralConstants constants;

  int triangle_size() const { return dim * (dim + 1) / 2; }
};

struct Violation {
  std::string check;
  std::string message;
  double t = 0.0;
  Point x{0.0, 0.0};
  double margin = 0.0;  // most negative slack observed for this check
};

struct ValidationReport {
  bool ok = true;
  std::vector<Violation> violations;
  long nodes_checked = 0;
  int grid_nt = 0;
  int grid_nx = 0;

  std::string summary() const {
    std::ostringstream os;
    os << (ok ? "valid" : "invalid") << " (" << nodes_checked
       << " nodes checked)";
    for (const auto& v : violations)
      os << "\n  [" << v.check << "] " << v.message << " at t=" << v.t
         << " x=(" << v.x[0] << "," << v.x[1] << "), margin " << v.margin;
    return os.str();
  }
};

struct ValidationError : Error {
  ValidationReport report;
  explicit ValidationError(ValidationReport r)
      : Error("environment validation failed: " + r.summary()),
        report(std::move(r)) {}
};

/// Drift vector and diffusion root at a point; the innermost objects of the
/// path simulator.
struct SdeCoeffs {
  Vec2 b = Vec2::Zero();
  Mat sigma = Mat::Zero();
};

class Environment {
 public:
  EnvironmentSpec spec;
  double Z = 1.0;  // integral of exp(-2V) over the spatial torus

  int dim() const { return spec.dim; }

  // ---- pointwise matrix/scalar evaluation --------------------------------

  Mat a_at(double t, const Point& x) const { return sym_at(spec.a, t, x); }
  Mat a_tilde_at(double t, const Point& x) const {
    return sym_at(spec.a_tilde, t, x);
  }

  Mat H_at(double t, const Point& x) const {
    Mat h = Mat::Zero();
    if (spec.dim == 2 && !spec.H.empty()) {
      const double v = spec.H[0].eval(t, x);
      h(0, 1) = v;
      h(1, 0) = -v;
    }
    return h;
  }

  double V_at(const Point& x) const { return spec.V.eval(0.0, x); }

  double d_at(double t, const Point& x) const { return spec.d.eval(t, x); }

  Mat sigma_at(double t, const Point& x) const {
    return sym_sqrt(a_at(t, x), spec.dim);
  }

  Mat sigma_tilde_at(double t, const Point& x) const {
    return sym_sqrt(a_tilde_at(t, x), spec.dim);
  }

  /// Time derivatives of a and H (for the structural bound checks).
  Mat dt_a_at(double t, const Point& x) const {
    Mat m = Mat::Zero();
    for (int i = 0; i < spec.dim; ++i)
      for (int j = i; j < spec.dim; ++j) {
        const double v = spec.a[upper_index(i, j, spec.dim)].jet(t, x).dt;
        m(i, j) = v;
        m(j, i) = v;
      }
    return m;
  }

  Mat dt_H_at(double t, const Point& x) const {
    Mat m = Mat::Zero();
    if (spec.dim == 2 && !spec.H.empty()) {
      const double v = spec.H[0].jet(t, x).dt;
      m(0, 1) = v;
      m(1, 0) = -v;
    }
    return m;
  }

  // ---- derived coefficients ----------------------------------------------

  /// b_i = sum_j ( 1/2 D_j a_ij - a_ij D_j V + 1/2 D_j H_ij ).
  Vec2 drift_at(double t, const Point& x) const {
    const int n = spec.dim;
    FieldJet aj[3];
    for (int u = 0; u < spec.triangle_size(); ++u) aj[u] = spec.a[u].jet(t, x);
    const FieldJet vj = spec.V.jet(0.0, x);
    Vec2 b = Vec2::Zero();
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int j = 0; j < n; ++j) {
        const FieldJet& e = aj[upper_index(std::min(i, j), std::max(i, j), n)];
        s += 0.5 * e.dx[j] - e.value * vj.dx[j];
      }
      b(i) = s;
    }
    if (n == 2 && !spec.H.empty()) {
      const FieldJet hj = spec.H[0].jet(t, x);
      // H_12 = h, H_21 = -h; only the off-diagonal derivative survives.
      b(0) += 0.5 * hj.dx[1];
      b(1) -= 0.5 * hj.dx[0];
    }
    return b;
  }

  /// Drift and diffusion root in one pass over the trigonometric modes.
  SdeCoeffs sde_at(double t, const Point& x) const {
    const int n = spec.dim;
    FieldJet aj[3];
    for (int u = 0; u < spec.triangle_size(); ++u) aj[u] = spec.a[u].jet(t, x);
    const FieldJet vj = spec.V.jet(0.0, x);
    SdeCoeffs s;
    Mat a = Mat::Zero();
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        const double v = aj[upper_index(i, j, n)].value;
        a(i, j) = v;
        a(j, i) = v;
      }
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int j = 0; j < n; ++j) {
        const FieldJet& e = aj[upper_index(std::min(i, j), std::max(i, j), n)];
        acc += 0.5 * e.dx[j] - e.value * vj.dx[j];
      }
      s.b(i) = acc;
    }
    if (n == 2 && !spec.H.empty()) {
      const FieldJet hj = spec.H[0].jet(t, x);
      s.b(0) += 0.5 * hj.dx[1];
      s.b(1) -= 0.5 * hj.dx[0];
    }
    s.sigma = sym_sqrt(a, n);
    return s;
  }

  /// Drift functional c = e^{2V} sum_ij D_i ( e^{-2V} sigma_tilde_ij f_j ).
  /// Expanded:  sum_ij [ (D_i sigma_tilde)_ij f_j + sigma_tilde_ij D_i f_j
  ///                     - 2 D_i V sigma_tilde_ij f_j ].
  /// Requires a_tilde nondegenerate wherever f is active.
  double c_at(double t, const Point& x) const {
    const int n = spec.dim;
    if (all_zero(spec.f)) return 0.0;
    const Mat st = sigma_tilde_at(t, x);
    FieldJet fj[2];
    for (int j = 0; j < n; ++j) fj[j] = spec.f[j].jet(t, x);
    const FieldJet vj = spec.V.jet(0.0, x);

    double c = 0.0;
    for (int i = 0; i < n; ++i) {
      // D_i sigma_tilde via the Sylvester identity st*X + X*st = D_i a_tilde.
      Mat dat = Mat::Zero();
      for (int p = 0; p < n; ++p)
        for (int q = p; q < n; ++q) {
          const double v = spec.a_tilde[upper_index(p, q, n)].jet(t, x).dx[i];
          dat(p, q) = v;
          dat(q, p) = v;
        }
      const Mat dst = sym_sqrt_derivative(st, dat, n);
      for (int j = 0; j < n; ++j)
        c += dst(i, j) * fj[j].value + st(i, j) * fj[j].dx[i] -
             2.0 * vj.dx[i] * st(i, j) * fj[j].value;
    }
    return c;
  }

 private:
  Mat sym_at(const std::vector<TrigField>& entries, double t,
             const Point& x) const {
    Mat m = Mat::Zero();
    for (int i = 0; i < spec.dim; ++i)
      for (int j = i; j < spec.dim; ++j) {
        const double v = entries[upper_index(i, j, spec.dim)].eval(t, x);
        m(i, j) = v;
        m(j, i) = v;
      }
    return m;
  }

  static bool all_zero(const std::vector<TrigField>& fs) {
    for (const auto& f : fs)
      if (!f.zero()) return false;
    return true;
  }
};

namespace detail {

struct CheckTracker {
  ValidationReport& report;
  std::string check;
  double worst = 0.0;
  bool bad = false;
  double t = 0.0;
  Point x{};
  std::string msg;

  CheckTracker(ValidationReport& r, std::string c)
      : report(r), check(std::move(c)) {}

  void offer(double margin, double tt, const Point& xx, const std::string& m) {
    if (margin < worst) {
      worst = margin;
      t = tt;
      x = xx;
      msg = m;
      bad = true;
    }
  }

  ~CheckTracker() {
    if (bad) {
      report.ok = false;
      report.violations.push_back({check, msg, t, x, worst});
    }
  }
};

}  // namespace detail

/// Structural validation on a grid that resolves every mode. Pointwise PSD
/// comparisons carry a 1e-9 slack so media sitting exactly on a bound pass.
inline ValidationReport validate_environment(const EnvironmentSpec& spec,
                                             int resolution = 0) {
  ValidationReport rep;
  const double slack = 1e-9;

  auto structural = [&](bool cond, const std::string& check,
                        const std::string& msg) {
    if (!cond) {
      rep.ok = false;
      rep.violations.push_back({check, msg, 0.0, {0.0, 0.0}, -1.0});
    }
  };

  structural(spec.dim == 1 || spec.dim == 2, "ConfigViolation",
             "dimension must be 1 or 2");
  if (!rep.ok) return rep;
  structural(static_cast<int>(spec.a.size()) == spec.triangle_size(), "ConfigViolation",
             "a must hold the upper triangle");
  structural(static_cast<int>(spec.a_tilde.size()) == spec.triangle_size(),
             "ConfigViolation", "a_tilde must hold the upper triangle");
  structural(static_cast<int>(spec.H.size()) == (spec.dim == 2 ? 1 : 0) ||
                 spec.H.empty(),
             "ConfigViolation", "H holds the strict upper triangle");
  structural(static_cast<int>(spec.f.size()) == spec.dim, "ConfigViolation",
             "f must have dim components");
  const auto& cst = spec.constants;
  structural(cst.m > 0.0 && cst.M >= cst.m, "ConfigViolation",
             "need 0 < m <= M");
  structural(cst.K > 0.0, "ConfigViolation", "need K > 0");
  structural(cst.C1H >= 0.0 && cst.C2H >= 0.0 && cst.C2a >= 0.0, "ConfigViolation",
             "stream/time bounds must be nonnegative");
  for (const auto& e : spec.a_tilde)
    structural(e.time_independent(), "TimeDependenceViolation",
               "a_tilde must not carry time modes");
  structural(spec.V.time_independent(), "TimeDependenceViolation",
             "V must not carry time modes");
  if (!rep.ok) return rep;

  // Grid: at least two nodes per highest wavenumber on every axis.
  int kt = 1, kx = 1;
  auto absorb = [&](const TrigField& f) {
    kt = std::max(kt, f.max_abs_kt());
    for (int i = 0; i < spec.dim; ++i) kx = std::max(kx, f.max_abs_kx(i));
  };
  for (const auto& f : spec.a) absorb(f);
  for (const auto& f : spec.a_tilde) absorb(f);
  for (const auto& f : spec.H) absorb(f);
  absorb(spec.V);
  for (const auto& f : spec.f) absorb(f);
  absorb(spec.d);
  int nt = std::max(resolution, std::max(2 * kt + 1, 8));
  int nx = std::max(resolution, std::max(2 * kx + 1, 8));
  rep.grid_nt = nt;
  rep.grid_nx = nx;

  Environment env;
  env.spec = spec;

  const bool has_f = [&] {
    for (const auto& f : spec.f)
      if (!f.zero()) return true;
    return false;
  }();

  {
    detail::CheckTracker t_psd(rep, "PSDViolation");
    detail::CheckTracker t_lower(rep, "BoundViolation");
    detail::CheckTracker t_upper(rep, "BoundViolation");
    detail::CheckTracker t_supa(rep, "BoundViolation");
    detail::CheckTracker t_suph(rep, "BoundViolation");
    detail::CheckTracker t_h1(rep, "BoundViolation");
    detail::CheckTracker t_h2(rep, "BoundViolation");
    detail::CheckTracker t_a2(rep, "BoundViolation");
    detail::CheckTracker t_deg(rep, "DegeneracyViolation");

    const int nx1 = spec.dim == 2 ? nx : 1;
    for (int it = 0; it < nt; ++it) {
      const double t = static_cast<double>(it) / nt;
      for (int i0 = 0; i0 < nx; ++i0)
        for (int i1 = 0; i1 < nx1; ++i1) {
          const Point x{static_cast<double>(i0) / nx,
                        static_cast<double>(i1) / nx1};
          const Mat at = env.a_tilde_at(t, x);
          const Mat a = env.a_at(t, x);
          ++rep.nodes_checked;

          t_psd.offer(min_eigenvalue(at, spec.dim) + slack, t, x,
                      "a_tilde not PSD");
          t_lower.offer(
              min_eigenvalue(Mat(a - cst.m * at), spec.dim) + slack, t, x,
              "a < m * a_tilde");
          t_upper.offer(
              min_eigenvalue(Mat(cst.M * at - a), spec.dim) + slack, t, x,
              "a > M * a_tilde");

          const double na = max_eigenvalue(matrix_abs(a, spec.dim), spec.dim);
          t_supa.offer(cst.K - na + slack, t, x, "|a| exceeds K");

          if (spec.dim == 2 && !spec.H.empty()) {
            const Mat h = env.H_at(t, x);
            const Mat habs = matrix_abs(h, 2);
            t_suph.offer(cst.K - max_eigenvalue(habs, 2) + slack, t, x,
                         "|H| exceeds K");
            t_h1.offer(min_eigenvalue(Mat(cst.C1H * at - habs), 2) + slack, t,
                       x, "|H| not dominated by C1H * a_tilde");
            const Mat dh = matrix_abs(env.dt_H_at(t, x), 2);
            t_h2.offer(min_eigenvalue(Mat(cst.C2H * at - dh), 2) + slack, t, x,
                       "|D_t H| not dominated by C2H * a_tilde");
          }
          const Mat da = matrix_abs(env.dt_a_at(t, x), spec.dim);
          t_a2.offer(min_eigenvalue(Mat(cst.C2a * at - da), spec.dim) + slack,
                     t, x, "|D_t a| not dominated by C2a * a_tilde");

          if (has_f)
            t_deg.offer(min_eigenvalue(at, spec.dim) - 1e-8, t, x,
                        "f active on a degenerate a_tilde");
        }
    }
  }
  return rep;
}

/// Validate and assemble. Z is the exp(-2V) integral over the spatial torus,
/// computed by the trapezoid rule on the validation grid (spectrally accurate
/// for smooth periodic data).
inline Environment build_environment(const EnvironmentSpec& spec,
                                     int resolution = 0) {
  ValidationReport rep = validate_environment(spec, resolution);
  if (!rep.ok) throw ValidationError(std::move(rep));
  Environment env;
  env.spec = spec;
  const int nx = rep.grid_nx;
  const int nx1 = spec.dim == 2 ? nx : 1;
  double z = 0.0;
  for (int i0 = 0; i0 < nx; ++i0)
    for (int i1 = 0; i1 < nx1; ++i1) {
      const Point x{static_cast<double>(i0) / nx,
                    static_cast<double>(i1) / nx1};
      z += std::exp(-2.0 * env.V_at(x));
    }
  env.Z = z / (nx * nx1);
  return env;
}

/// Resample mode phases. Every distinct wavevector (kt, kx) receives one
/// uniform phase increment, applied to all entries carrying that wavevector
/// (sign-canonicalized), so symmetric storage relations and any mode-wise
/// coupling between fields survive. Structural bounds are NOT automatically
/// preserved; re-validate the result.
inline EnvironmentSpec sample_random_phase(const EnvironmentSpec& spec,
                                           std::uint64_t seed) {
  EnvironmentSpec out = spec;
  auto canonical = [](const TrigMode& m, int dim, int& sign) {
    std::array<int, 3> k{m.kt, m.kx[0], dim == 2 ? m.kx[1] : 0};
    sign = 1;
    for (int v : k) {
      if (v > 0) break;
      if (v < 0) {
        sign = -1;
        break;
      }
    }
    if (sign < 0)
      for (auto& v : k) v = -v;
    return k;
  };
  auto key_of = [](const std::array<int, 3>& k) {
    const auto enc = [](int v) {
      return static_cast<std::uint64_t>(static_cast<std::uint32_t>(v + (1 << 20)));
    };
    return (enc(k[0]) << 42) ^ (enc(k[1]) << 21) ^ enc(k[2]);
  };
  auto shift_of = [&](const std::array<int, 3>& k) {
    return two_pi * rng::uniform(seed, rng::stream_phase, key_of(k), 0);
  };
  auto apply = [&](TrigField& f) {
    for (TrigMode& m : f.modes) {
      if (m.kt == 0 && m.kx[0] == 0 && (spec.dim == 1 || m.kx[1] == 0))
        continue;  // constant term: phase is meaningless
      int sign = 1;
      const auto k = canonical(m, spec.dim, sign);
      m.phase += sign * shift_of(k);
    }
  };
  for (auto& f : out.a) apply(f);
  for (auto& f : out.a_tilde) apply(f);
  for (auto& f : out.H) apply(f);
  apply(out.V);
  for (auto& f : out.f) apply(f);
  apply(out.d);
  return out;
}

}  // namespace sthom
