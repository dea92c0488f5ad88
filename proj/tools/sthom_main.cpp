// Experiment runner: one binary, declarative JSON configs, reproducible
// artifacts. Every run writes manifest.json (the only file carrying
// timestamps) and, per subcommand, result.json plus CSV tables; rerunning
// with the same config and seeds reproduces those payloads byte for byte.

#include <CLI11.hpp>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "sthom/cell1d.hpp"
#include "sthom/corrector.hpp"
#include "sthom/effective.hpp"
#include "sthom/environment.hpp"
#include "sthom/errors.hpp"
#include "sthom/grid.hpp"
#include "sthom/io.hpp"
#include "sthom/sde.hpp"
#include "sthom/stats.hpp"
#include "sthom/version.hpp"

namespace {

using sthom::io::njson;

struct RunContext {
  std::string config_path;
  std::string out_dir = "out";
  int threads = 0;  // 0 = auto
  std::optional<std::uint64_t> seed_override;

  njson config;
  std::string hash;
  sthom::EnvironmentSpec spec;
  sthom::ScalingExponents scaling;

  std::string path(const std::string& name) const {
    return out_dir + "/" + name;
  }

  std::uint64_t seed_of(const njson& block, const char* where) const {
    if (seed_override) return *seed_override;
    return sthom::io::need_seed(block, where);
  }

  const njson& block(const char* name) const {
    return sthom::io::need(config, name, "config");
  }
};

RunContext load_context(const std::string& config_path,
                        const std::string& out_flag, int threads,
                        std::optional<std::uint64_t> seed_override) {
  RunContext ctx;
  ctx.config_path = config_path;
  ctx.threads = threads;
  ctx.seed_override = seed_override;
  ctx.config = sthom::io::read_json_file(config_path);
  ctx.hash = sthom::io::config_hash(ctx.config);

  if (ctx.config.contains("environment")) {
    ctx.spec = sthom::io::environment_from_json(ctx.config["environment"]);
  } else if (ctx.config.contains("environment_file")) {
    const std::string p = ctx.config["environment_file"].get<std::string>();
    ctx.spec = sthom::io::environment_from_json(sthom::io::read_json_file(p));
  } else {
    throw sthom::ConfigError(
        "config needs 'environment' (inline) or 'environment_file'");
  }
  ctx.scaling = sthom::io::scaling_from_json(
      sthom::io::need(ctx.config, "scaling", "config"));

  if (!out_flag.empty())
    ctx.out_dir = out_flag;
  else if (ctx.config.contains("output"))
    ctx.out_dir = ctx.config["output"].get<std::string>();
  return ctx;
}

void write_manifest(const RunContext& ctx, const std::string& command,
                    double wall_s) {
  char stamp[32] = "unknown";
  const std::time_t now = std::time(nullptr);
  if (std::tm tmv{}; gmtime_r(&now, &tmv) != nullptr)
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tmv);
  njson m{{"command", command},
          {"config_hash", ctx.hash},
          {"config_file", ctx.config_path},
          {"version", sthom::version},
          {"threads", ctx.threads},
          {"wall_time_s", wall_s},
          {"timestamp_utc", stamp}};
  if (ctx.seed_override) m["seed_override"] = *ctx.seed_override;
  sthom::io::write_json_file(ctx.path("manifest.json"), m);
}

void write_result(const RunContext& ctx, const std::string& command,
                  njson payload) {
  payload["config"] = ctx.hash;
  payload["command"] = command;
  sthom::io::write_json_file(ctx.path("result.json"), payload);
}

sthom::TorusGrid grid_from(const njson& block, int dim, int def_nt,
                           int def_nx) {
  sthom::TorusGrid g;
  g.dim = dim;
  if (auto it = block.find("grid"); it != block.end()) {
    g.nt = static_cast<int>(sthom::io::opt_int(*it, "nt", def_nt));
    g.nx0 = static_cast<int>(sthom::io::opt_int(*it, "nx", def_nx));
  } else {
    g.nt = def_nt;
    g.nx0 = def_nx;
  }
  g.nx1 = dim == 2 ? g.nx0 : 1;
  return g;
}

// ---- subcommands ----------------------------------------------------------

int run_validate(const RunContext& ctx) {
  const sthom::ValidationReport rep = sthom::validate_environment(ctx.spec);
  if (!rep.ok) {
    njson err{{"error", "ValidationError"},
              {"message", "environment validation failed"},
              {"report", sthom::io::report_to_json(rep)}};
    err["config"] = ctx.hash;
    sthom::io::write_json_file(ctx.path("error.json"), err);
    std::cerr << rep.summary() << "\n";
    return 1;
  }
  return 0;  // manifest only
}

int run_cell1d(const RunContext& ctx) {
  if (ctx.spec.dim != 1)
    throw sthom::ConfigError("cell1d needs a one-dimensional environment");
  const sthom::Environment env = sthom::build_environment(ctx.spec);
  const njson& blk = ctx.block("cell1d");
  sthom::CellOptions opts;
  opts.n_quad = static_cast<int>(sthom::io::opt_int(blk, "n_quad", 2048));
  const sthom::TorusGrid g = grid_from(blk, 1, 256, 256);
  opts.nt = g.nt;
  opts.nx = g.nx0;

  std::vector<sthom::Regime> regimes{sthom::Regime::Sub,
                                     sthom::Regime::Critical,
                                     sthom::Regime::Super};
  if (auto it = blk.find("regimes"); it != blk.end()) {
    regimes.clear();
    for (const auto& r : *it) {
      const std::string name = r.get<std::string>();
      if (name == "sub")
        regimes.push_back(sthom::Regime::Sub);
      else if (name == "critical")
        regimes.push_back(sthom::Regime::Critical);
      else if (name == "super")
        regimes.push_back(sthom::Regime::Super);
      else
        throw sthom::ConfigError("unknown regime '" + name + "'");
    }
  }

  auto coeff = [&](double t, double x) {
    return env.a_at(t, sthom::Point{x, 0.0})(0, 0);
  };
  njson results = njson::array();
  std::vector<std::vector<double>> field_rows;
  for (const sthom::Regime r : regimes) {
    const sthom::CellSolution sol =
        r == sthom::Regime::Sub    ? sthom::effective_subcritical(coeff, opts)
        : r == sthom::Regime::Super ? sthom::effective_supercritical(coeff, opts)
                                    : sthom::effective_critical(coeff, opts);
    results.push_back(sthom::io::cell_to_json(sol));
    if (r == sthom::Regime::Critical && !sol.corrector.empty() &&
        sthom::io::opt_int(blk, "emit_corrector", 0) != 0) {
      for (int k = 0; k < sol.nt; ++k)
        for (int i = 0; i < sol.nx; ++i)
          field_rows.push_back({static_cast<double>(k) / sol.nt,
                                static_cast<double>(i) / sol.nx,
                                sol.corrector[k * sol.nx + i]});
    }
  }
  if (!field_rows.empty())
    sthom::io::write_csv(ctx.path("corrector_field.csv"), ctx.hash,
                         {"t", "x", "v"}, field_rows);
  write_result(ctx, "cell1d", njson{{"results", results}});
  return 0;
}

sthom::CorrectorOptions corrector_options(const njson& blk) {
  sthom::CorrectorOptions opts;
  opts.tol = sthom::io::opt_num(blk, "tol", 1e-9);
  opts.max_iter = sthom::io::opt_int(blk, "max_iter", 50000);
  if (auto it = blk.find("lambda_schedule"); it != blk.end()) {
    for (const auto& v : *it) opts.schedule.push_back(v.get<double>());
    if (opts.schedule.empty())
      throw sthom::ConfigError("lambda_schedule must not be empty");
    for (size_t i = 1; i < opts.schedule.size(); ++i)
      if (opts.schedule[i] >= opts.schedule[i - 1] ||
          opts.schedule[i] <= 0.0)
        throw sthom::ConfigError(
            "lambda_schedule must be strictly decreasing and positive");
  }
  return opts;
}

int run_corrector(const RunContext& ctx) {
  const sthom::Environment env = sthom::build_environment(ctx.spec);
  const njson& blk = ctx.block("corrector");
  const sthom::TorusGrid g =
      grid_from(blk, ctx.spec.dim, ctx.spec.dim == 2 ? 16 : 64,
                ctx.spec.dim == 2 ? 64 : 256);
  const sthom::CorrectorWorkspace ws = sthom::assemble_operator(env, g);
  const std::string solver =
      blk.contains("solver") ? blk["solver"].get<std::string>() : "continuation";

  njson payload;
  std::vector<std::vector<double>> rows;
  auto field_rows = [&](const Eigen::VectorXd& u) {
    rows.clear();
    for (int k = 0; k < g.nt; ++k)
      for (int i = 0; i < g.nx0; ++i)
        for (int jj = 0; jj < g.nx1; ++jj) {
          std::vector<double> row{g.tcoord(k), g.xcoord(i, jj)[0]};
          if (ctx.spec.dim == 2) row.push_back(g.xcoord(i, jj)[1]);
          row.push_back(u(g.index(k, i, jj)));
          rows.push_back(std::move(row));
        }
  };

  if (solver == "continuation") {
    const sthom::ContinuationResult res =
        sthom::lambda_continuation(ws, ctx.scaling, corrector_options(blk));
    payload = sthom::io::continuation_to_json(res);
    field_rows(res.solutions.front().u);
  } else if (solver == "sub_direct") {
    const sthom::DirectResult res = sthom::sub_direct(ws);
    payload = sthom::io::effective_to_json(res.eff);
    payload["solver"] = "sub_direct";
    field_rows(res.u);
  } else if (solver == "super_direct") {
    const sthom::DirectResult res = sthom::super_direct(ws);
    payload = sthom::io::effective_to_json(res.eff);
    payload["solver"] = "super_direct";
    field_rows(res.u);
  } else {
    throw sthom::ConfigError("unknown corrector solver '" + solver + "'");
  }
  payload["grid"] = njson{{"nt", g.nt}, {"nx", g.nx0}};

  std::vector<std::string> header{"t", "x1"};
  if (ctx.spec.dim == 2) header.push_back("x2");
  header.push_back("u");
  sthom::io::write_csv(ctx.path("corrector_field.csv"), ctx.hash, header,
                       rows);
  write_result(ctx, "corrector", payload);
  return 0;
}

int run_simulate(const RunContext& ctx) {
  const sthom::Environment env = sthom::build_environment(ctx.spec);
  const njson& blk = ctx.block("simulate");
  const double eps = sthom::io::need_num(blk, "eps", "simulate");
  const double t = sthom::io::need_num(blk, "t", "simulate");
  const long n_paths = sthom::io::opt_int(blk, "n_paths", 1);
  sthom::SimOptions opts;
  opts.seed = ctx.seed_of(blk, "simulate");
  opts.c_step = sthom::io::opt_num(blk, "h_factor", 0.25);
  opts.threads = ctx.threads;
  const std::string mode =
      blk.contains("mode") ? blk["mode"].get<std::string>() : "path";
  sthom::Vec2 x0 = sthom::Vec2::Zero();
  if (auto it = blk.find("x0"); it != blk.end())
    for (int i = 0; i < ctx.spec.dim && i < static_cast<int>(it->size()); ++i)
      x0(i) = (*it)[i].get<double>();

  const long record =
      std::min<long>(n_paths, sthom::io::opt_int(blk, "record_paths", 1));
  std::vector<sthom::Vec2> terminal(n_paths);
  for (long p = 0; p < record; ++p) {
    sthom::SamplePath path;
    if (mode == "path")
      path = sthom::simulate_path(env, ctx.scaling, eps, x0, 0.0, t, opts,
                                  static_cast<std::uint64_t>(p));
    else if (mode == "rescaled")
      path = sthom::simulate_rescaled(env, ctx.scaling, eps, t, opts,
                                      static_cast<std::uint64_t>(p));
    else
      throw sthom::ConfigError("simulate mode must be 'path' or 'rescaled'");
    std::vector<std::vector<double>> rows;
    std::vector<std::string> header{"t", "X_1"};
    if (ctx.spec.dim == 2) header.push_back("X_2");
    header.push_back("Q");
    for (size_t k = 0; k < path.times.size(); ++k) {
      std::vector<double> row{path.times[k], path.states[k](0)};
      if (ctx.spec.dim == 2) row.push_back(path.states[k](1));
      row.push_back(path.Q[k]);
      rows.push_back(std::move(row));
    }
    sthom::io::write_csv(ctx.path("path_" + std::to_string(p) + ".csv"),
                         ctx.hash, header, rows);
  }

  njson payload{{"eps", eps}, {"t", t}, {"mode", mode},
                {"n_paths", n_paths}, {"seed", opts.seed}};
  if (n_paths >= 2) {
    const double eps_b = std::pow(eps, ctx.scaling.beta);
    const double h = sthom::detail::resolve_step(ctx.scaling, eps, opts);
    sthom::run_paths(n_paths, opts.threads, [&](long p) {
      sthom::Vec2 last = x0;
      if (mode == "path") {
        sthom::run_original(env, ctx.scaling, eps, x0, 0.0, t, h, opts.seed,
                            static_cast<std::uint64_t>(p),
                            [&](long, double, const sthom::Vec2& X, double) {
                              last = X;
                            });
      } else {
        sthom::run_rescaled(
            env, ctx.scaling, eps, t, h, opts.seed,
            static_cast<std::uint64_t>(p), 0.0, sthom::Point{0.0, 0.0},
            [&](long, double, double, const sthom::Vec2& X, double) {
              last = eps_b * X;
            });
      }
      terminal[p] = last;
    });
    const sthom::CovarianceEstimate cov =
        sthom::empirical_covariance(terminal, ctx.spec.dim);
    njson cj = njson::array(), sj = njson::array(), mj = njson::array();
    for (int i = 0; i < ctx.spec.dim; ++i) {
      mj.push_back(cov.mean(i));
      for (int k = 0; k < ctx.spec.dim; ++k) {
        cj.push_back(cov.cov(i, k));
        sj.push_back(cov.stderr_(i, k));
      }
    }
    payload["covariance"] = cj;
    payload["covariance_stderr"] = sj;
    payload["mean"] = mj;
    payload["h"] = h;
  }
  write_result(ctx, "simulate", payload);
  return 0;
}

int run_compare(const RunContext& ctx) {
  const sthom::Environment env = sthom::build_environment(ctx.spec);
  const njson& blk = ctx.block("compare");
  const njson& cblk = ctx.block("corrector");
  const sthom::TorusGrid g =
      grid_from(cblk, ctx.spec.dim, ctx.spec.dim == 2 ? 16 : 64,
                ctx.spec.dim == 2 ? 64 : 256);
  const sthom::CorrectorWorkspace ws = sthom::assemble_operator(env, g);
  const sthom::ContinuationResult cont =
      sthom::lambda_continuation(ws, ctx.scaling, corrector_options(cblk));

  const sthom::Payoff payoff = sthom::io::payoff_from_json(
      sthom::io::need(blk, "payoff", "compare"), ctx.spec.dim);
  const double t = sthom::io::need_num(blk, "t", "compare");
  std::vector<double> eps_list;
  for (const auto& e : sthom::io::need(blk, "eps_list", "compare"))
    eps_list.push_back(e.get<double>());
  sthom::Vec2 x0 = sthom::Vec2::Zero();
  if (auto it = blk.find("x"); it != blk.end())
    for (int i = 0; i < ctx.spec.dim && i < static_cast<int>(it->size()); ++i)
      x0(i) = (*it)[i].get<double>();
  sthom::SimOptions opts;
  opts.seed = ctx.seed_of(blk, "compare");
  opts.c_step = sthom::io::opt_num(blk, "h_factor", 0.25);
  opts.threads = ctx.threads;
  const long n_paths = sthom::io::opt_int(blk, "n_paths", 1000);

  const sthom::CompareResult res = sthom::compare_homogenization(
      env, ctx.scaling, cont.eff, payoff, x0, t, eps_list, n_paths, opts);

  std::vector<std::vector<double>> rows;
  for (const auto& r : res.rows)
    rows.push_back({r.eps, r.mc.mean, r.mc.stderr_, r.limit, r.abs_err});
  sthom::io::write_csv(ctx.path("compare.csv"), ctx.hash,
                       {"eps", "z_eps", "stderr", "z_bar", "gap"}, rows);
  write_result(ctx, "compare", sthom::io::compare_to_json(res));
  return 0;
}

int run_ergodic(const RunContext& ctx) {
  const sthom::Environment env = sthom::build_environment(ctx.spec);
  const njson& blk = ctx.block("ergodic");
  const sthom::Observable g = sthom::io::observable_from_json(
      sthom::io::need(blk, "observable", "ergodic"), ctx.spec.dim);
  const double t = sthom::io::need_num(blk, "t", "ergodic");
  const long n_paths = sthom::io::opt_int(blk, "n_paths", 1000);
  sthom::ErgodicOptions opts;
  opts.seed = ctx.seed_of(blk, "ergodic");
  opts.h = 0.0;
  opts.c_step = sthom::io::opt_num(blk, "h_factor", 0.25);
  opts.threads = ctx.threads;
  if (auto it = blk.find("redraw_phases"); it != blk.end())
    opts.redraw_phases = it->get<bool>();
  opts.quad_n = static_cast<int>(sthom::io::opt_int(blk, "quad_n", 64));

  std::vector<double> eps_list;
  if (auto it = blk.find("eps_list"); it != blk.end())
    for (const auto& e : *it) eps_list.push_back(e.get<double>());
  else
    eps_list.push_back(sthom::io::need_num(blk, "eps", "ergodic"));

  njson rows = njson::array();
  for (const double eps : eps_list)
    rows.push_back(sthom::io::ergodic_to_json(
        sthom::ergodic_average_check(env, ctx.scaling, eps, g, t, n_paths,
                                     opts)));
  write_result(ctx, "ergodic", njson{{"rows", rows}});
  return 0;
}

int run_modulus(const RunContext& ctx) {
  const sthom::Environment env = sthom::build_environment(ctx.spec);
  const njson& blk = ctx.block("modulus");
  const sthom::Observable g = sthom::io::observable_from_json(
      sthom::io::need(blk, "observable", "modulus"), ctx.spec.dim);
  const double T = sthom::io::need_num(blk, "T", "modulus");
  const long n_paths = sthom::io::opt_int(blk, "n_paths", 64);
  std::vector<double> deltas;
  for (const auto& d : sthom::io::need(blk, "deltas", "modulus"))
    deltas.push_back(d.get<double>());
  sthom::ModulusOptions opts;
  opts.seed = ctx.seed_of(blk, "modulus");
  opts.c_step = sthom::io::opt_num(blk, "h_factor", 0.25);
  opts.threads = ctx.threads;

  std::vector<double> eps_list;
  if (auto it = blk.find("eps_list"); it != blk.end())
    for (const auto& e : *it) eps_list.push_back(e.get<double>());
  else
    eps_list.push_back(sthom::io::need_num(blk, "eps", "modulus"));

  njson results = njson::array();
  std::vector<std::vector<double>> rows;
  for (const double eps : eps_list) {
    const sthom::ModulusResult res = sthom::modulus_diagnostic(
        env, ctx.scaling, eps, g, T, deltas, n_paths, opts);
    results.push_back(sthom::io::modulus_to_json(res));
    for (size_t i = 0; i < res.deltas.size(); ++i)
      rows.push_back({eps, res.deltas[i], res.modulus[i], res.envelope[i],
                      res.ratio[i]});
  }
  sthom::io::write_csv(ctx.path("modulus.csv"), ctx.hash,
                       {"eps", "delta", "modulus", "envelope", "ratio"}, rows);
  write_result(ctx, "modulus", njson{{"results", results}});
  return 0;
}

const char* error_type(const sthom::Error& e) {
  if (dynamic_cast<const sthom::ValidationError*>(&e)) return "ValidationError";
  if (dynamic_cast<const sthom::ConfigError*>(&e)) return "ConfigError";
  if (dynamic_cast<const sthom::StepTooLarge*>(&e)) return "StepTooLarge";
  if (dynamic_cast<const sthom::NonFinite*>(&e)) return "NonFinite";
  if (dynamic_cast<const sthom::GridMismatch*>(&e)) return "GridMismatch";
  if (dynamic_cast<const sthom::DegenerateSample*>(&e))
    return "DegenerateSample";
  if (dynamic_cast<const sthom::GridTooCoarse*>(&e)) return "GridTooCoarse";
  if (dynamic_cast<const sthom::SolverDivergence*>(&e))
    return "SolverDivergence";
  if (dynamic_cast<const sthom::SingularSystem*>(&e)) return "SingularSystem";
  if (dynamic_cast<const sthom::NoTrend*>(&e)) return "NoTrend";
  return "Error";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stochastic homogenization laboratory"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  int threads = 0;
  std::optional<std::uint64_t> seed_override;
  std::uint64_t seed_value = 0;
  bool have_seed = false;

  const std::vector<std::string> commands{"validate", "cell1d",  "corrector",
                                          "simulate", "compare", "ergodic",
                                          "modulus"};
  for (const auto& name : commands) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "experiment config (JSON)")
        ->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--threads", threads, "worker threads (0 = auto)");
    sub->add_option_function<std::uint64_t>(
        "--seed-override",
        [&](std::uint64_t v) {
          seed_value = v;
          have_seed = true;
        },
        "replace every configured seed");
  }

  CLI11_PARSE(app, argc, argv);
  if (have_seed) seed_override = seed_value;
  const std::string command = app.get_subcommands().front()->get_name();

  const auto t0 = std::chrono::steady_clock::now();
  int rc = 0;
  try {
    RunContext ctx = load_context(config_path, out_dir, threads, seed_override);
    if (command == "validate")
      rc = run_validate(ctx);
    else if (command == "cell1d")
      rc = run_cell1d(ctx);
    else if (command == "corrector")
      rc = run_corrector(ctx);
    else if (command == "simulate")
      rc = run_simulate(ctx);
    else if (command == "compare")
      rc = run_compare(ctx);
    else if (command == "ergodic")
      rc = run_ergodic(ctx);
    else if (command == "modulus")
      rc = run_modulus(ctx);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    write_manifest(ctx, command, wall);
  } catch (const sthom::Error& e) {
    njson err{{"error", error_type(e)}, {"message", e.what()}};
    if (const auto* ve = dynamic_cast<const sthom::ValidationError*>(&e))
      err["report"] = sthom::io::report_to_json(ve->report);
    try {
      sthom::io::write_text((out_dir.empty() ? std::string("out") : out_dir) +
                                "/error.json",
                            err.dump(2) + "\n");
    } catch (...) {
    }
    std::cerr << "error [" << error_type(e) << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return rc;
}
