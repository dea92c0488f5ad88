#pragma once

#include <cmath>
#include <string>

namespace sthom {

enum class Regime { Sub, Critical, Super };

/// Time/space scale exponents (alpha for time, beta for space). The sign of
/// alpha - 2*beta selects which of the three effective descriptions applies.
struct ScalingExponents {
  double alpha = 2.0;
  double beta = 1.0;

  Regime regime(double tol = 1e-12) const {
    const double g = alpha - 2.0 * beta;
    if (g < -tol) return Regime::Sub;
    if (g > tol) return Regime::Super;
    return Regime::Critical;
  }

  /// Weight of the time-derivative term in the resolvent equation,
  /// theta(lambda) = lambda^(1 - alpha/(2 beta)). Tends to 0 (Sub),
  /// 1 (Critical) or infinity (Super) as lambda -> 0.
  double theta(double lambda) const {
    if (regime() == Regime::Critical) return 1.0;
    return std::pow(lambda, 1.0 - alpha / (2.0 * beta));
  }
};

inline std::string regime_name(Regime r) {
  switch (r) {
    case Regime::Sub: return "sub";
    case Regime::Critical: return "critical";
    default: return "super";
  }
}

}  // namespace sthom
