#pragma once

// JSON bindings for environment specs, experiment configuration, and result
// payloads, plus deterministic file writers.
//
// Environment document layout: top-level keys dimension, a, a_tilde, H, V, f,
// d, constants {m, M, K, C1H, C2H, C2a}; every field entry is
// {offset, modes: [{kt, kx: [..], amp, phase}]}. Matrix fields are stored
// entry-wise: upper triangle for a and a_tilde, strict upper triangle for H.
// Full row-major d*d lists are also accepted; the redundant entries are then
// checked against the symmetry (a, a_tilde) or antisymmetry (H) relation and
// mismatches are reported as SymmetryViolation / AntisymmetryViolation.
//
// Reruns must be byte-identical, so every writer here is deterministic:
// doubles go through the shortest-round-trip serializer, object keys are
// sorted, and timestamps are confined to the run manifest.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "sthom/cell1d.hpp"
#include "sthom/corrector.hpp"
#include "sthom/effective.hpp"
#include "sthom/environment.hpp"
#include "sthom/errors.hpp"
#include "sthom/payoff.hpp"
#include "sthom/scaling.hpp"
#include "sthom/sde.hpp"
#include "sthom/stats.hpp"

namespace sthom {
namespace io {

using njson = nlohmann::json;

// ---- parse helpers --------------------------------------------------------

inline const njson& need(const njson& j, const char* key, const char* where) {
  auto it = j.find(key);
  if (it == j.end())
    throw ConfigError(std::string("missing key '") + key + "' in " + where);
  return *it;
}

inline double need_num(const njson& j, const char* key, const char* where) {
  const njson& v = need(j, key, where);
  if (!v.is_number())
    throw ConfigError(std::string("key '") + key + "' in " + where +
                      " must be a number");
  return v.get<double>();
}

inline double opt_num(const njson& j, const char* key, double fallback) {
  auto it = j.find(key);
  return it == j.end() ? fallback : it->get<double>();
}

inline long opt_int(const njson& j, const char* key, long fallback) {
  auto it = j.find(key);
  return it == j.end() ? fallback : it->get<long>();
}

inline std::uint64_t need_seed(const njson& j, const char* where) {
  const njson& v = need(j, "seed", where);
  if (!v.is_number_integer() || v.get<long long>() < 0)
    throw ConfigError(std::string("'seed' in ") + where +
                      " must be a nonnegative integer (explicit seeds only)");
  return v.get<std::uint64_t>();
}

// ---- trig fields ----------------------------------------------------------

inline njson mode_to_json(const TrigMode& m, int dim) {
  njson kx = njson::array();
  for (int i = 0; i < dim; ++i) kx.push_back(m.kx[i]);
  return njson{{"kt", m.kt}, {"kx", kx}, {"amp", m.amp}, {"phase", m.phase}};
}

inline njson field_to_json(const TrigField& f) {
  njson modes = njson::array();
  for (const auto& m : f.modes) modes.push_back(mode_to_json(m, f.dim));
  return njson{{"offset", f.offset}, {"modes", modes}};
}

inline TrigField field_from_json(const njson& j, int dim, const char* where) {
  if (!j.is_object())
    throw ConfigError(std::string("field ") + where +
                      " must be an object {offset, modes}");
  TrigField f;
  f.dim = dim;
  f.offset = opt_num(j, "offset", 0.0);
  if (auto it = j.find("modes"); it != j.end()) {
    for (const auto& jm : *it) {
      TrigMode m;
      m.kt = static_cast<int>(need(jm, "kt", where).get<long>());
      const njson& kx = need(jm, "kx", where);
      if (!kx.is_array() || static_cast<int>(kx.size()) != dim)
        throw ConfigError(std::string("mode kx in ") + where + " must list " +
                          std::to_string(dim) + " integers");
      for (int i = 0; i < dim; ++i) m.kx[i] = kx[i].get<int>();
      m.amp = need_num(jm, "amp", where);
      m.phase = opt_num(jm, "phase", 0.0);
      f.modes.push_back(m);
    }
  }
  return f;
}

namespace detail {

/// Pointwise max |F - G| on a grid resolving both fields.
inline double field_gap(const TrigField& F, const TrigField& G, int dim) {
  int kt = 1, kx = 1;
  for (const auto* f : {&F, &G}) {
    kt = std::max(kt, f->max_abs_kt());
    for (int i = 0; i < dim; ++i) kx = std::max(kx, f->max_abs_kx(i));
  }
  const int nt = 2 * kt + 3, nx = 2 * kx + 3;
  const int nx1 = dim == 2 ? nx : 1;
  double worst = 0.0;
  for (int it = 0; it < nt; ++it)
    for (int i0 = 0; i0 < nx; ++i0)
      for (int i1 = 0; i1 < nx1; ++i1) {
        const double t = static_cast<double>(it) / nt;
        const Point x{static_cast<double>(i0) / nx,
                      static_cast<double>(i1) / nx1};
        worst = std::max(worst, std::abs(F.eval(t, x) - G.eval(t, x)));
      }
  return worst;
}

inline TrigField field_negate(TrigField f) {
  f.offset = -f.offset;
  for (auto& m : f.modes) m.amp = -m.amp;
  return f;
}

}  // namespace detail

// ---- environment spec -----------------------------------------------------

inline njson environment_to_json(const EnvironmentSpec& spec) {
  njson a = njson::array(), at = njson::array(), h = njson::array(),
        fv = njson::array();
  for (const auto& e : spec.a) a.push_back(field_to_json(e));
  for (const auto& e : spec.a_tilde) at.push_back(field_to_json(e));
  for (const auto& e : spec.H) h.push_back(field_to_json(e));
  for (const auto& e : spec.f) fv.push_back(field_to_json(e));
  return njson{{"dimension", spec.dim},
               {"a", a},
               {"a_tilde", at},
               {"H", h},
               {"V", field_to_json(spec.V)},
               {"f", fv},
               {"d", field_to_json(spec.d)},
               {"constants",
                {{"m", spec.constants.m},
                 {"M", spec.constants.M},
                 {"K", spec.constants.K},
                 {"C1H", spec.constants.C1H},
                 {"C2H", spec.constants.C2H},
                 {"C2a", spec.constants.C2a}}}};
}

inline EnvironmentSpec environment_from_json(const njson& j) {
  EnvironmentSpec spec;
  spec.dim = static_cast<int>(need(j, "dimension", "environment").get<long>());
  if (spec.dim != 1 && spec.dim != 2)
    throw ConfigError("environment dimension must be 1 or 2");
  const int d = spec.dim;
  const int tri = d * (d + 1) / 2, stri = d * (d - 1) / 2, full = d * d;

  auto fields_of = [&](const njson& arr, const char* where) {
    std::vector<TrigField> out;
    if (!arr.is_array())
      throw ConfigError(std::string(where) + " must be an array of fields");
    for (const auto& e : arr) out.push_back(field_from_json(e, d, where));
    return out;
  };

  ValidationReport storage_report;
  auto storage_violation = [&](const char* check, const std::string& msg,
                               double margin) {
    storage_report.ok = false;
    storage_report.violations.push_back(
        {check, msg, 0.0, {0.0, 0.0}, -margin});
  };

  // symmetric matrix: upper triangle, or full row-major with a symmetry check
  auto sym_matrix = [&](const njson& arr, const char* where) {
    auto fs = fields_of(arr, where);
    if (static_cast<int>(fs.size()) == tri) return fs;
    if (static_cast<int>(fs.size()) == full && d == 2) {
      const double gap = detail::field_gap(fs[1], fs[2], d);
      if (gap > 1e-10)
        storage_violation("SymmetryViolation",
                          std::string(where) +
                              " off-diagonal entries disagree (max gap " +
                              std::to_string(gap) + ")",
                          gap);
      return std::vector<TrigField>{fs[0], fs[1], fs[3]};
    }
    if (static_cast<int>(fs.size()) == full && d == 1) return fs;
    throw ConfigError(std::string(where) + " must list " +
                      std::to_string(tri) + " (upper triangle) or " +
                      std::to_string(full) + " (full) fields");
  };

  spec.a = sym_matrix(need(j, "a", "environment"), "a");
  spec.a_tilde = sym_matrix(need(j, "a_tilde", "environment"), "a_tilde");

  if (auto it = j.find("H"); it != j.end()) {
    auto fs = fields_of(*it, "H");
    if (static_cast<int>(fs.size()) == stri) {
      spec.H = fs;
    } else if (static_cast<int>(fs.size()) == full) {
      for (int i = 0; i < d; ++i) {
        const double dg = detail::field_gap(fs[i * d + i],
                                            TrigField::constant(d, 0.0), d);
        if (dg > 1e-10)
          storage_violation("AntisymmetryViolation",
                            "H diagonal entry " + std::to_string(i) +
                                " is not zero (max " + std::to_string(dg) + ")",
                            dg);
      }
      if (d == 2) {
        const double gap =
            detail::field_gap(fs[1], detail::field_negate(fs[2]), d);
        if (gap > 1e-10)
          storage_violation("AntisymmetryViolation",
                            "H(1,2) != -H(2,1) (max gap " +
                                std::to_string(gap) + ")",
                            gap);
        spec.H = {fs[1]};
      }
    } else if (!fs.empty()) {
      throw ConfigError("H must list the strict upper triangle (" +
                        std::to_string(stri) + ") or the full matrix (" +
                        std::to_string(full) + ") fields");
    }
  }
  if (!storage_report.ok) throw ValidationError(std::move(storage_report));

  spec.V = j.contains("V") ? field_from_json(j["V"], d, "V")
                           : TrigField::constant(d, 0.0);
  if (auto it = j.find("f"); it != j.end()) {
    spec.f = fields_of(*it, "f");
    if (static_cast<int>(spec.f.size()) != d)
      throw ConfigError("f must list one field per coordinate");
  } else {
    spec.f.assign(d, TrigField::constant(d, 0.0));
  }
  spec.d = j.contains("d") ? field_from_json(j["d"], d, "d")
                           : TrigField::constant(d, 0.0);

  const njson& cst = need(j, "constants", "environment");
  spec.constants.m = need_num(cst, "m", "constants");
  spec.constants.M = need_num(cst, "M", "constants");
  spec.constants.K = need_num(cst, "K", "constants");
  spec.constants.C1H = need_num(cst, "C1H", "constants");
  spec.constants.C2H = need_num(cst, "C2H", "constants");
  spec.constants.C2a = need_num(cst, "C2a", "constants");
  return spec;
}

// ---- scaling, payoff, observable -----------------------------------------

inline ScalingExponents scaling_from_json(const njson& j) {
  ScalingExponents sc;
  sc.alpha = need_num(j, "alpha", "scaling");
  sc.beta = need_num(j, "beta", "scaling");
  if (sc.alpha <= 0.0 || sc.beta <= 0.0)
    throw ConfigError("scaling exponents must be positive");
  return sc;
}

inline Payoff payoff_from_json(const njson& j, int dim) {
  const std::string kind = need(j, "kind", "payoff").get<std::string>();
  if (kind == "constant") return Payoff::constant(opt_num(j, "amp", 1.0));
  if (kind == "gaussian_bump") {
    Vec2 center = Vec2::Zero();
    if (auto it = j.find("center"); it != j.end())
      for (int i = 0; i < dim && i < static_cast<int>(it->size()); ++i)
        center(i) = (*it)[i].get<double>();
    return Payoff::gaussian(opt_num(j, "amp", 1.0), center,
                            opt_num(j, "width", 1.0));
  }
  if (kind == "cosine") {
    std::array<int, 2> freq{1, 0};
    if (auto it = j.find("freq"); it != j.end())
      for (int i = 0; i < dim && i < static_cast<int>(it->size()); ++i)
        freq[i] = (*it)[i].get<int>();
    return Payoff::cosine(opt_num(j, "amp", 1.0), freq,
                          opt_num(j, "phase", 0.0));
  }
  if (kind == "bounded_coordinate")
    return Payoff::bounded_coordinate(
        static_cast<int>(opt_int(j, "axis", 0)), opt_num(j, "scale", 1.0));
  throw ConfigError("unknown payoff kind '" + kind + "'");
}

inline njson payoff_to_json(const Payoff& f, int dim) {
  switch (f.kind) {
    case Payoff::Kind::Constant:
      return njson{{"kind", "constant"}, {"amp", f.amp}};
    case Payoff::Kind::GaussianBump: {
      njson c = njson::array();
      for (int i = 0; i < dim; ++i) c.push_back(f.center(i));
      return njson{{"kind", "gaussian_bump"},
                   {"amp", f.amp},
                   {"center", c},
                   {"width", f.width}};
    }
    case Payoff::Kind::Cosine: {
      njson fr = njson::array();
      for (int i = 0; i < dim; ++i) fr.push_back(f.freq[i]);
      return njson{{"kind", "cosine"},
                   {"amp", f.amp},
                   {"freq", fr},
                   {"phase", f.phase}};
    }
    case Payoff::Kind::BoundedCoordinate:
      return njson{
          {"kind", "bounded_coordinate"}, {"axis", f.axis}, {"scale", f.scale}};
  }
  return njson{};
}

inline Observable observable_from_json(const njson& j, int dim) {
  const std::string kind = need(j, "kind", "observable").get<std::string>();
  if (kind == "constant") return Observable::constant(opt_num(j, "amp", 1.0));
  if (kind == "mode") {
    TrigMode m;
    m.kt = static_cast<int>(opt_int(j, "kt", 0));
    const njson& kx = need(j, "kx", "observable");
    for (int i = 0; i < dim && i < static_cast<int>(kx.size()); ++i)
      m.kx[i] = kx[i].get<int>();
    m.amp = 1.0;
    m.phase = opt_num(j, "phase", 0.0);
    return Observable::trig_mode(m, opt_num(j, "amp", 1.0));
  }
  if (kind == "drift_component")
    return Observable::drift_component(
        static_cast<int>(opt_int(j, "component", 0)));
  if (kind == "c_field") return Observable::c_field();
  if (kind == "d_field") return Observable::d_field();
  throw ConfigError("unknown observable kind '" + kind + "'");
}

// ---- result payloads ------------------------------------------------------

inline njson report_to_json(const ValidationReport& rep) {
  njson viols = njson::array();
  for (const auto& v : rep.violations)
    viols.push_back(njson{{"check", v.check},
                          {"message", v.message},
                          {"t", v.t},
                          {"x", {v.x[0], v.x[1]}},
                          {"margin", v.margin}});
  return njson{{"ok", rep.ok},
               {"violations", viols},
               {"nodes_checked", rep.nodes_checked},
               {"grid", {{"nt", rep.grid_nt}, {"nx", rep.grid_nx}}}};
}

inline njson cell_to_json(const CellSolution& sol) {
  return njson{{"regime", regime_name(sol.regime)},
               {"A", sol.A},
               {"degenerate", sol.degenerate},
               {"residual", sol.residual},
               {"grid", {{"nt", sol.nt}, {"nx", sol.nx}}}};
}

inline njson effective_to_json(const EffectiveCoefficients& eff) {
  njson a = njson::array(), c = njson::array();
  for (int i = 0; i < eff.dim; ++i)
    for (int k = 0; k < eff.dim; ++k) a.push_back(eff.A(i, k));
  for (int i = 0; i < eff.dim; ++i) c.push_back(eff.C(i));
  return njson{{"A", a}, {"C", c}, {"U", eff.U}, {"dim", eff.dim}};
}

inline njson continuation_to_json(const ContinuationResult& res) {
  njson diag = njson::array();
  for (const auto& rec : res.history)
    diag.push_back(njson{{"lambda", rec.lambda},
                         {"theta", rec.theta},
                         {"l2_pi", rec.l2_pi},
                         {"energy_tilde", rec.energy_tilde},
                         {"cauchy_gap", rec.cauchy_gap},
                         {"residual", rec.residual},
                         {"iterations", rec.iterations}});
  njson out = effective_to_json(res.eff);
  out["solver"] = "continuation";
  out["lambda_final"] =
      res.history.empty() ? 0.0 : res.history.back().lambda;
  out["diagnostics"] = diag;
  return out;
}

inline njson estimate_to_json(const MonteCarloEstimate& e) {
  return njson{{"mean", e.mean},
               {"stderr", e.stderr_},
               {"n_paths", e.n_paths},
               {"seed", e.seed},
               {"h", e.h}};
}

inline njson compare_to_json(const CompareResult& res) {
  njson rows = njson::array();
  for (const auto& r : res.rows)
    rows.push_back(njson{{"eps", r.eps},
                         {"z_eps", r.mc.mean},
                         {"stderr", r.mc.stderr_},
                         {"z_bar", r.limit},
                         {"gap", r.abs_err},
                         {"z_score", r.z_score},
                         {"n_paths", r.mc.n_paths},
                         {"h", r.mc.h}});
  njson out = effective_to_json(res.eff);
  out["t"] = res.t;
  out["x"] = njson::array();
  for (int i = 0; i < res.eff.dim; ++i) out["x"].push_back(res.x0(i));
  out["rows"] = rows;
  return out;
}

inline njson ergodic_to_json(const ErgodicResult& r) {
  return njson{{"eps", r.eps},         {"t", r.t},
               {"estimate", r.estimate}, {"target", r.target},
               {"gap", r.gap},         {"stderr", r.stderr_},
               {"n_paths", r.n_paths}, {"seed", r.seed}};
}

inline njson modulus_to_json(const ModulusResult& r) {
  njson rows = njson::array();
  for (size_t i = 0; i < r.deltas.size(); ++i)
    rows.push_back(njson{{"delta", r.deltas[i]},
                         {"modulus", r.modulus[i]},
                         {"envelope", r.envelope[i]},
                         {"ratio", r.ratio[i]}});
  return njson{{"eps", r.eps},
               {"T", r.T},
               {"rows", rows},
               {"envelope_flag", r.envelope_flag},
               {"n_paths", r.n_paths},
               {"seed", r.seed}};
}

// ---- hashing and writers --------------------------------------------------

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

inline std::string config_hash(const njson& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(config.dump())));
  return buf;
}

inline njson read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  njson j;
  try {
    in >> j;
  } catch (const njson::parse_error& e) {
    throw ConfigError("cannot parse '" + path + "': " + e.what());
  }
  return j;
}

inline void write_text(const std::string& path, const std::string& text) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << text;
}

inline void write_json_file(const std::string& path, const njson& j) {
  write_text(path, j.dump(2) + "\n");
}

inline std::string fmt_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// CSV with a config-hash comment line, a header, and %.17g rows.
inline void write_csv(const std::string& path, const std::string& hash,
                      const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
  std::ostringstream os;
  os << "# config " << hash << "\n";
  for (size_t i = 0; i < header.size(); ++i)
    os << header[i] << (i + 1 < header.size() ? "," : "\n");
  for (const auto& row : rows)
    for (size_t i = 0; i < row.size(); ++i)
      os << fmt_g17(row[i]) << (i + 1 < row.size() ? "," : "\n");
  write_text(path, os.str());
}

}  // namespace io
}  // namespace sthom
