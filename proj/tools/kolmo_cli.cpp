// Command-line front end: analyze | gramian | evaluate | solve | verify.
//
// Exit codes: 0 ok, 1 verify ran but a check failed, 2 config or
// hypothesis error, 3 numeric failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kolmo/config.hpp"
#include "kolmo/kolmo.hpp"

namespace {

using kolmo::config::Json;
using kolmo::config::RunConfig;

constexpr std::uint64_t kDefaultSeed = 1;
constexpr std::size_t kDefaultBudget = 10000;

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> out;
  std::optional<std::size_t> budget;
  std::string format = "csv";
};

struct Context {
  RunConfig cfg;
  Options opt;
  std::uint64_t seed = kDefaultSeed;
  std::optional<std::string> out;

  [[nodiscard]] std::size_t budget(std::optional<std::size_t> local = std::nullopt) const {
    if (opt.budget) return *opt.budget;
    if (local) return *local;
    return cfg.budget.value_or(kDefaultBudget);
  }
  [[nodiscard]] bool json() const { return opt.format == "json"; }
};

/// Writes @p name.csv / @p name.json under --out, or to stdout.
void emit(const Context& ctx, const std::string& name, const std::string& csv_text, const Json& json) {
  const std::string body = ctx.json() ? json.dump(2) + "\n" : csv_text;
  if (!ctx.out) {
    std::cout << body;
    return;
  }
  std::filesystem::create_directories(*ctx.out);
  const auto path = std::filesystem::path(*ctx.out) / (name + (ctx.json() ? ".json" : ".csv"));
  std::ofstream os(path, std::ios::binary);
  if (!os) {
    throw kolmo::ConfigError("cannot write " + path.string());
  }
  os << body;
}

std::vector<std::string> coord_headers(const std::string& prefix, std::size_t n) {
  std::vector<std::string> h;
  for (std::size_t i = 1; i <= n; ++i) {
    h.push_back(prefix + std::to_string(i));
  }
  return h;
}

Json nan_safe(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

int cmd_analyze(const Context& ctx) {
  const auto spec = kolmo::config::make_operator(ctx.cfg.op);
  const auto dec = kolmo::decompose(spec);
  Json j;
  j["k"] = dec.k();
  Json dims = Json::array();
  Json idx = Json::array();
  for (int h = 0; h <= dec.k(); ++h) {
    dims.push_back(dec.block(h).indices.size());
    Json ih = Json::array();
    for (auto i : dec.block(h).indices) ih.push_back(i + 1);
    idx.push_back(ih);
  }
  j["block_dims"] = dims;
  j["I"] = idx;
  j["metric"] = dec.metric_formula();
  j["seed"] = ctx.seed;

  std::ostringstream os;
  kolmo::csv::write_row(os, {"block", "dim", "indices", "exponent", "seed"});
  for (int h = 0; h <= dec.k(); ++h) {
    std::string ids;
    for (auto i : dec.block(h).indices) {
      ids += (ids.empty() ? "" : " ") + std::to_string(i + 1);
    }
    kolmo::csv::Row row;
    row << h << static_cast<std::uint64_t>(dec.block(h).indices.size()) << ids
        << ("1/" + std::to_string(2 * h + 1)) << ctx.seed;
    kolmo::csv::write_row(os, row);
  }
  std::cerr << "k=" << dec.k() << "\n" << dec.metric_formula() << "\n";
  emit(ctx, "analyze", os.str(), j);
  return 0;
}

int cmd_gramian(const Context& ctx) {
  const auto spec = kolmo::config::make_operator(ctx.cfg.op);
  const auto dec = kolmo::decompose(spec);
  const std::size_t n = spec.n();
  const std::vector<double> ts = ctx.cfg.gramian ? ctx.cfg.gramian->t : std::vector<double>{1.0};
  std::ostringstream os;
  std::vector<std::string> header = {"t"};
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t k = 1; k <= n; ++k) {
      header.push_back("q_" + std::to_string(i) + "_" + std::to_string(k));
    }
  }
  header.push_back("min_scaled_eigenvalue");
  header.push_back("seed");
  kolmo::csv::write_row(os, header);
  Json arr = Json::array();
  for (double t : ts) {
    const kolmo::Gramian g(spec, dec, t);
    g.require_nonsingular("gramian");
    kolmo::csv::Row row;
    row << t;
    Json q = Json::array();
    for (Eigen::Index i = 0; i < g.matrix().rows(); ++i) {
      Json r = Json::array();
      for (Eigen::Index k = 0; k < g.matrix().cols(); ++k) {
        row << g.matrix()(i, k);
        r.push_back(g.matrix()(i, k));
      }
      q.push_back(r);
    }
    row << g.scaled_eigenvalues()(0) << ctx.seed;
    kolmo::csv::write_row(os, row);
    arr.push_back({{"t", t}, {"Q", q}, {"min_scaled_eigenvalue", g.scaled_eigenvalues()(0)}, {"seed", ctx.seed}});
  }
  emit(ctx, "gramian", os.str(), arr);
  return 0;
}

int cmd_evaluate(const Context& ctx) {
  if (!ctx.cfg.evaluate) {
    throw kolmo::ConfigError("config has no 'evaluate' section");
  }
  const auto& c = *ctx.cfg.evaluate;
  const auto spec = kolmo::config::make_operator(ctx.cfg.op);
  const kolmo::Semigroup sg(spec);
  const auto f = kolmo::config::make_field(c.field, spec.n());
  const std::size_t budget = ctx.budget(c.budget);
  std::vector<kolmo::Method> methods;
  if (c.method != "girsanov") methods.push_back(kolmo::Method::direct);
  if (c.method != "direct") methods.push_back(kolmo::Method::girsanov);

  std::ostringstream os;
  std::vector<std::string> header = {"method", "t"};
  for (auto& h : coord_headers("x_", spec.n())) header.push_back(h);
  for (const char* h : {"mean", "stderr", "n_paths", "seed"}) header.emplace_back(h);
  kolmo::csv::write_row(os, header);
  Json arr = Json::array();
  for (auto m : methods) {
    for (double t : c.t) {
      for (const auto& p : c.points) {
        const auto e = sg.evaluate(f, t, kolmo::config::to_vector(p), budget, ctx.seed, m);
        kolmo::csv::Row row;
        row << kolmo::to_string(m) << t;
        for (double v : p) row << v;
        row << e.mean << e.std_error << static_cast<std::uint64_t>(e.n_paths) << e.seed;
        kolmo::csv::write_row(os, row);
        arr.push_back({{"method", kolmo::to_string(m)},
                       {"t", t},
                       {"x", p},
                       {"mean", e.mean},
                       {"stderr", e.std_error},
                       {"n_paths", e.n_paths},
                       {"seed", e.seed}});
      }
    }
  }
  emit(ctx, "evaluate", os.str(), arr);
  return 0;
}

int cmd_solve(const Context& ctx) {
  if (!ctx.cfg.solve) {
    throw kolmo::ConfigError("config has no 'solve' section");
  }
  const auto& c = *ctx.cfg.solve;
  const auto spec = kolmo::config::make_operator(ctx.cfg.op);
  const kolmo::Semigroup sg(spec);
  const std::size_t n = spec.n();
  const auto f = kolmo::config::make_field(c.field, n);
  const std::size_t paths = ctx.opt.budget.value_or(c.paths_per_node);

  std::ostringstream os;
  std::vector<std::string> header = {"kind", "lambda", "t"};
  for (auto& h : coord_headers("x_", n)) header.push_back(h);
  for (const char* h : {"mean", "stderr", "bias_bound", "n_paths", "seed"}) header.emplace_back(h);
  kolmo::csv::write_row(os, header);
  Json arr = Json::array();
  auto record = [&](double lambda, double t, const std::vector<double>& p, const kolmo::MCEstimate& e) {
    kolmo::csv::Row row;
    row << c.kind;
    if (c.kind == "elliptic") {
      row << lambda << "";
    } else {
      row << "" << t;
    }
    for (double v : p) row << v;
    row << e.mean << e.std_error << e.bias_bound << static_cast<std::uint64_t>(e.n_paths) << e.seed;
    kolmo::csv::write_row(os, row);
    Json j = {{"kind", c.kind}};
    if (c.kind == "elliptic") {
      j["lambda"] = lambda;
    } else {
      j["t"] = t;
    }
    j["x"] = p;
    j["mean"] = e.mean;
    j["stderr"] = e.std_error;
    j["bias_bound"] = e.bias_bound;
    j["n_paths"] = e.n_paths;
    j["seed"] = e.seed;
    arr.push_back(j);
  };
  if (c.kind == "elliptic") {
    const double sup_f = kolmo::sup_estimate(f, ctx.seed);
    const auto scheme = kolmo::QuadratureScheme::elliptic(c.lambda, sup_f, c.tol, paths);
    for (const auto& p : c.points) {
      record(c.lambda, 0.0, p, sg.solve_elliptic(f, c.lambda, kolmo::config::to_vector(p), scheme, ctx.seed));
    }
  } else {
    const auto g0 = c.initial ? kolmo::config::make_field(*c.initial, n) : kolmo::fields::constant(n, 0.0);
    const auto h = kolmo::fields::constant_in_time(f);
    for (double t : c.t) {
      const auto scheme = kolmo::QuadratureScheme::parabolic(t, paths);
      for (const auto& p : c.points) {
        record(0.0, t, p, sg.solve_parabolic(g0, h, t, kolmo::config::to_vector(p), scheme, ctx.seed));
      }
    }
  }
  emit(ctx, "solve", os.str(), arr);
  return 0;
}

int cmd_verify(const Context& ctx) {
  const auto spec = kolmo::config::make_operator(ctx.cfg.op);
  const kolmo::Semigroup sg(spec);
  const auto& dec = sg.decomposition();
  const kolmo::config::VerifyCommand v = ctx.cfg.verify.value_or(kolmo::config::VerifyCommand{
      {1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1}, {1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1}, {}, 4000, {}});
  std::vector<kolmo::CheckReport> reports = kolmo::check_gramian_scaling(spec, dec, v.t_grid);
  for (auto& r : reports) r.seed = ctx.seed;
  for (auto& r : kolmo::check_exponential_blocks(spec, dec, v.s_grid)) {
    r.seed = ctx.seed;
    reports.push_back(std::move(r));
  }
  const std::size_t paths = ctx.opt.budget.value_or(v.flow_paths);
  for (double q : v.flow_q) {
    for (auto& r : kolmo::check_flow_moments(spec, dec, q, v.t_grid, paths, ctx.seed)) {
      reports.push_back(std::move(r));
    }
  }
  if (v.schauder) {
    const auto& sc = *v.schauder;
    std::vector<kolmo::ScalarField> family;
    for (const auto& f : sc.family) family.push_back(kolmo::config::make_field(f, spec.n()));
    const kolmo::SchauderBudget b{sc.samples, sc.paths_per_node};
    for (auto& r : kolmo::check_schauder_ratio(sg, family, sc.theta, sc.lambda, b, ctx.seed)) {
      reports.push_back(std::move(r));
    }
    if (sc.parabolic_t) {
      for (auto& r : kolmo::check_schauder_ratio_parabolic(sg, family, sc.theta, *sc.parabolic_t, b, ctx.seed)) {
        reports.push_back(std::move(r));
      }
    }
  }
  std::ostringstream rep;
  kolmo::write_reports_csv(rep, reports);
  std::ostringstream pts;
  kolmo::write_points_csv(pts, reports);
  Json jr = Json::array();
  Json jp = Json::array();
  for (const auto& r : reports) {
    jr.push_back({{"name", r.name},
                  {"kind", kolmo::to_string(r.kind)},
                  {"expected", r.expected},
                  {"measured", nan_safe(r.measured)},
                  {"tolerance", r.tolerance},
                  {"r2", nan_safe(r.r2)},
                  {"pass", r.pass},
                  {"seed", r.seed},
                  {"budget", r.budget},
                  {"note", r.note}});
    for (const auto& [t, val] : r.points) {
      jp.push_back({{"name", r.name}, {"t", t}, {"value", val}, {"seed", r.seed}});
    }
  }
  emit(ctx, "verify_report", rep.str(), jr);
  if (ctx.out) {
    emit(ctx, "verify_points", pts.str(), jp);
  }
  std::size_t failed = 0;
  for (const auto& r : reports) {
    if (!r.pass) {
      ++failed;
      std::cerr << "FAIL " << r.name << " measured=" << r.measured << " expected=" << r.expected << "\n";
    }
  }
  std::cerr << reports.size() - failed << "/" << reports.size() << " checks passed\n";
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kolmogorov operator toolkit: Kalman structure, Gramians, Monte Carlo semigroups, checks"};
  app.require_subcommand(1);
  Options opt;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string out;
  std::size_t budget = 0;
  app.add_option("--config", opt.config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "master seed (overrides config)");
  auto* threads_opt = app.add_option("--threads", threads, "worker thread cap, 0 = all cores");
  auto* out_opt = app.add_option("--out", out, "output directory (default: stdout)");
  auto* budget_opt = app.add_option("--budget", budget, "Monte Carlo budget override")->check(CLI::PositiveNumber);
  app.add_option("--format", opt.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  app.fallthrough();

  auto* analyze = app.add_subcommand("analyze", "Kalman index, blocks and metric");
  auto* gramian = app.add_subcommand("gramian", "controllability Gramian Q_t");
  auto* evaluate = app.add_subcommand("evaluate", "Monte Carlo P_t f(x)");
  auto* solve = app.add_subcommand("solve", "resolvent or Cauchy problem at points");
  auto* verify = app.add_subcommand("verify", "scaling-law and Schauder checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (*seed_opt) opt.seed = seed;
  if (*threads_opt) opt.threads = threads;
  if (*out_opt) opt.out = out;
  if (*budget_opt) opt.budget = budget;

  try {
    Context ctx;
    ctx.cfg = kolmo::config::load(opt.config_path);
    ctx.opt = opt;
    ctx.seed = opt.seed.value_or(ctx.cfg.seed.value_or(kDefaultSeed));
    ctx.out = opt.out ? opt.out : ctx.cfg.output;
    kolmo::parallel::set_max_threads(opt.threads.value_or(ctx.cfg.threads.value_or(0)));
    if (analyze->parsed()) return cmd_analyze(ctx);
    if (gramian->parsed()) return cmd_gramian(ctx);
    if (evaluate->parsed()) return cmd_evaluate(ctx);
    if (solve->parsed()) return cmd_solve(ctx);
    if (verify->parsed()) return cmd_verify(ctx);
  } catch (const kolmo::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const kolmo::NotHypoelliptic& e) {
    std::cerr << "NotHypoelliptic: " << e.what() << "\n";
    return 2;
  } catch (const kolmo::InvalidArgument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return 2;
  } catch (const kolmo::Error& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
