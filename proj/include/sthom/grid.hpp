#pragma once

// Uniform periodic grids on the space-time torus and the discrete pi-measure
// (probability weights proportional to exp(-2V), independent of t).

#include <vector>

#include "sthom/environment.hpp"
#include "sthom/errors.hpp"

namespace sthom {

struct TorusGrid {
  int dim = 1;
  int nt = 1;
  int nx0 = 8;
  int nx1 = 1;  // 1 when dim == 1

  long size() const { return static_cast<long>(nt) * nx0 * nx1; }
  double ht() const { return 1.0 / nt; }
  double hx(int axis) const { return axis == 0 ? 1.0 / nx0 : 1.0 / nx1; }

  long index(int k, int i, int j = 0) const {
    return (static_cast<long>(k) * nx0 + i) * nx1 + j;
  }
  int tindex(long p) const { return static_cast<int>(p / (static_cast<long>(nx0) * nx1)); }
  int xindex(long p) const { return static_cast<int>((p / nx1) % nx0); }
  int yindex(long p) const { return static_cast<int>(p % nx1); }

  double tcoord(int k) const { return static_cast<double>(k) / nt; }
  Point xcoord(int i, int j = 0) const {
    return {static_cast<double>(i) / nx0, static_cast<double>(j) / nx1};
  }

  /// Probability weights of the discrete pi-measure: w_p ~ exp(-2V(x_p)),
  /// normalized to sum exactly to one on this grid.
  std::vector<double> pi_weights(const Environment& env) const {
    std::vector<double> w(size());
    double total = 0.0;
    for (int i = 0; i < nx0; ++i)
      for (int j = 0; j < nx1; ++j) {
        const double wx = std::exp(-2.0 * env.V_at(xcoord(i, j)));
        for (int k = 0; k < nt; ++k) w[index(k, i, j)] = wx;
        total += wx * nt;
      }
    for (auto& v : w) v /= total;
    return w;
  }

  /// Fail unless the grid resolves every mode of the environment (at least
  /// two nodes per oscillation on each axis).
  void require_resolves(const EnvironmentSpec& spec) const {
    int kt = 0, k0 = 0, k1 = 0;
    auto absorb = [&](const TrigField& f) {
      kt = std::max(kt, f.max_abs_kt());
      k0 = std::max(k0, f.max_abs_kx(0));
      if (spec.dim == 2) k1 = std::max(k1, f.max_abs_kx(1));
    };
    for (const auto& f : spec.a) absorb(f);
    for (const auto& f : spec.a_tilde) absorb(f);
    for (const auto& f : spec.H) absorb(f);
    absorb(spec.V);
    for (const auto& f : spec.f) absorb(f);
    absorb(spec.d);
    if ((kt > 0 && nt < 2 * kt + 1) || nx0 < 2 * k0 + 1 ||
        (spec.dim == 2 && nx1 < 2 * k1 + 1))
      throw GridTooCoarse("grid does not resolve the medium's wavenumbers");
    if (spec.dim == 1 && nx1 != 1)
      throw GridMismatch("one-dimensional grid must have nx1 == 1");
  }
};

/// pi-weighted space-time average of an arbitrary function on grid nodes.
template <typename F>
double pi_average(const Environment& env, const TorusGrid& grid, F&& fn) {
  const auto w = grid.pi_weights(env);
  double s = 0.0;
  for (int k = 0; k < grid.nt; ++k) {
    const double t = grid.tcoord(k);
    for (int i = 0; i < grid.nx0; ++i)
      for (int j = 0; j < grid.nx1; ++j)
        s += w[grid.index(k, i, j)] * fn(t, grid.xcoord(i, j));
  }
  return s;
}

}  // namespace sthom
