#pragma once

// Terminal payoffs for the limit problem and the Monte Carlo estimators.
// All of them are bounded continuous, which is what the convergence
// statements ask of test functions.

#include <cmath>
#include <string>

#include "sthom/linalg.hpp"
#include "sthom/trig_field.hpp"

namespace sthom {

struct Payoff {
  enum class Kind { Constant, GaussianBump, Cosine, BoundedCoordinate };

  Kind kind = Kind::Constant;
  double amp = 1.0;
  // GaussianBump: center, width.  Cosine: integer frequency, phase.
  // BoundedCoordinate: axis, scale (tanh(x_axis / scale)).
  Vec2 center = Vec2::Zero();
  double width = 1.0;
  std::array<int, 2> freq{1, 0};
  double phase = 0.0;
  int axis = 0;
  double scale = 1.0;

  double operator()(const Vec2& y, int dim) const {
    switch (kind) {
      case Kind::Constant:
        return amp;
      case Kind::GaussianBump: {
        double q = 0.0;
        for (int i = 0; i < dim; ++i) {
          const double z = y(i) - center(i);
          q += z * z;
        }
        return amp * std::exp(-q / (2.0 * width * width));
      }
      case Kind::Cosine: {
        double arg = phase;
        for (int i = 0; i < dim; ++i) arg += two_pi * freq[i] * y(i);
        return amp * std::cos(arg);
      }
      case Kind::BoundedCoordinate:
        return amp * std::tanh(y(axis) / scale);
    }
    return 0.0;
  }

  static Payoff constant(double v) {
    Payoff p;
    p.kind = Kind::Constant;
    p.amp = v;
    return p;
  }
  static Payoff gaussian(double amp, Vec2 center, double width) {
    Payoff p;
    p.kind = Kind::GaussianBump;
    p.amp = amp;
    p.center = center;
    p.width = width;
    return p;
  }
  static Payoff cosine(double amp, std::array<int, 2> freq, double phase = 0) {
    Payoff p;
    p.kind = Kind::Cosine;
    p.amp = amp;
    p.freq = freq;
    p.phase = phase;
    return p;
  }
  static Payoff bounded_coordinate(int axis, double scale) {
    Payoff p;
    p.kind = Kind::BoundedCoordinate;
    p.axis = axis;
    p.scale = scale;
    return p;
  }
};

}  // namespace sthom
