#pragma once

// Trigonometric polynomials on the unit space-time torus. These are the
// concrete media of the whole laboratory: every coefficient field is a finite
// sum  offset + sum_m amp_m cos(2 pi (kt_m t + kx_m . x) + phase_m),
// so time/space derivatives are available term by term, exactly.

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

namespace sthom {

inline constexpr double two_pi = 6.283185307179586476925287;

using Point = std::array<double, 2>;  // spatial point, first `dim` entries used

struct TrigMode {
  int kt = 0;
  std::array<int, 2> kx{0, 0};
  double amp = 0.0;
  double phase = 0.0;
};

/// Value plus first derivatives at a space-time point.
struct FieldJet {
  double value = 0.0;
  double dt = 0.0;
  std::array<double, 2> dx{0.0, 0.0};
};

struct TrigField {
  int dim = 1;
  double offset = 0.0;
  std::vector<TrigMode> modes;

  double eval(double t, const Point& x) const {
    double v = offset;
    for (const TrigMode& m : modes) {
      double arg = m.kt * t;
      for (int i = 0; i < dim; ++i) arg += m.kx[i] * x[i];
      v += m.amp * std::cos(two_pi * arg + m.phase);
    }
    return v;
  }

  FieldJet jet(double t, const Point& x) const {
    FieldJet j;
    j.value = offset;
    for (const TrigMode& m : modes) {
      double arg = m.kt * t;
      for (int i = 0; i < dim; ++i) arg += m.kx[i] * x[i];
      const double c = std::cos(two_pi * arg + m.phase);
      const double s = std::sin(two_pi * arg + m.phase);
      j.value += m.amp * c;
      j.dt -= m.amp * two_pi * m.kt * s;
      for (int i = 0; i < dim; ++i) j.dx[i] -= m.amp * two_pi * m.kx[i] * s;
    }
    return j;
  }

  /// Exact average over the time circle: drops every mode with kt != 0.
  TrigField time_average() const {
    TrigField f;
    f.dim = dim;
    f.offset = offset;
    for (const TrigMode& m : modes)
      if (m.kt == 0) f.modes.push_back(m);
    return f;
  }

  bool time_independent() const {
    for (const TrigMode& m : modes)
      if (m.kt != 0 && m.amp != 0.0) return false;
    return true;
  }

  bool zero() const {
    if (offset != 0.0) return false;
    for (const TrigMode& m : modes)
      if (m.amp != 0.0) return false;
    return true;
  }

  int max_abs_kt() const {
    int k = 0;
    for (const TrigMode& m : modes) k = std::max(k, std::abs(m.kt));
    return k;
  }

  int max_abs_kx(int axis) const {
    int k = 0;
    for (const TrigMode& m : modes) k = std::max(k, std::abs(m.kx[axis]));
    return k;
  }

  static TrigField constant(int dim, double value) {
    TrigField f;
    f.dim = dim;
    f.offset = value;
    return f;
  }
};

/// Wrap a coordinate into [0,1); keeps cos() arguments small on long runs.
inline double wrap_unit(double v) {
  const double w = v - std::floor(v);
  return w < 1.0 ? w : 0.0;
}

inline Point wrap_unit(const Point& p, int dim) {
  Point q = p;
  for (int i = 0; i < dim; ++i) q[i] = wrap_unit(p[i]);
  return q;
}

}  // namespace sthom
