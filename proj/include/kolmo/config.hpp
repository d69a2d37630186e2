/**
 * @file config.hpp
 * @brief JSON run configuration: strict parsing (unknown keys rejected),
 *        validation and serialization back to JSON.
 *
 * Matrices are row-major nested arrays. Drift terms use 1-based targets:
 *   {"target": 1, "amplitude": c, "a": [...], "offset": b}
 * adds c * tanh(<a, x> + b) to component `target`.
 */
#pragma once

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kolmo/drift.hpp"
#include "kolmo/error.hpp"
#include "kolmo/field.hpp"
#include "kolmo/linalg.hpp"
#include "kolmo/operator.hpp"

namespace kolmo::config {

using Json = nlohmann::ordered_json;

struct DriftTermConfig {
  std::size_t target = 1;
  double amplitude = 0.0;
  std::vector<double> a;
  double offset = 0.0;
};

struct OperatorConfig {
  std::size_t n = 0;
  std::size_t p_tilde = 0;
  Matrix q0;
  Matrix a;
  std::vector<DriftTermConfig> drift;
};

struct FieldConfig {
  std::string type = "constant";
  double value = 1.0;            // constant
  std::vector<double> w;         // trig
  double amplitude = 1.0;        // trig, tanh_ridge
  double phase = 0.0;            // trig
  std::size_t coord = 1;         // abs_power (1-based)
  double theta = 0.5;            // abs_power
  std::vector<double> a;         // tanh_ridge
  double offset = 0.0;           // tanh_ridge
};

struct GramianCommand {
  std::vector<double> t;
};

struct EvaluateCommand {
  FieldConfig field;
  std::vector<double> t;
  std::vector<std::vector<double>> points;
  std::string method = "direct";  // direct | girsanov | both
  std::optional<std::size_t> budget;
};

struct SolveCommand {
  std::string kind = "elliptic";  // elliptic | parabolic
  FieldConfig field;              // f, or H (constant in time)
  std::optional<FieldConfig> initial;  // g for parabolic, default 0
  double lambda = 1.0;
  std::vector<double> t;               // parabolic times
  std::vector<std::vector<double>> points;
  std::size_t paths_per_node = 1000;
  double tol = 1e-4;
};

struct SchauderCommand {
  double theta = 0.5;
  double lambda = 1.0;
  std::size_t samples = 1024;
  std::size_t paths_per_node = 0;
  std::vector<FieldConfig> family;
  std::optional<double> parabolic_t;
};

struct VerifyCommand {
  std::vector<double> t_grid;
  std::vector<double> s_grid;
  std::vector<double> flow_q;
  std::size_t flow_paths = 4000;
  std::optional<SchauderCommand> schauder;
};

struct RunConfig {
  OperatorConfig op;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::size_t> budget;
  std::optional<std::string> output;
  std::optional<GramianCommand> gramian;
  std::optional<EvaluateCommand> evaluate;
  std::optional<SolveCommand> solve;
  std::optional<VerifyCommand> verify;
};

namespace detail {

inline void require_keys(const Json& j, const std::string& where,
                         std::initializer_list<const char*> allowed,
                         std::initializer_list<const char*> required = {}) {
  if (!j.is_object()) {
    throw ConfigError(where + ": expected an object");
  }
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items()) {
    if (ok.count(k) == 0) {
      throw ConfigError(where + ": unknown key '" + k + "'");
    }
  }
  for (const char* r : required) {
    if (!j.contains(r)) {
      throw ConfigError(where + ": missing key '" + std::string(r) + "'");
    }
  }
}

inline double number(const Json& j, const std::string& where) {
  if (!j.is_number()) {
    throw ConfigError(where + ": expected a number");
  }
  return j.get<double>();
}

inline std::uint64_t unsigned_int(const Json& j, const std::string& where) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0)) {
    throw ConfigError(where + ": expected a non-negative integer");
  }
  return j.get<std::uint64_t>();
}

inline std::string string(const Json& j, const std::string& where) {
  if (!j.is_string()) {
    throw ConfigError(where + ": expected a string");
  }
  return j.get<std::string>();
}

inline std::vector<double> numbers(const Json& j, const std::string& where) {
  if (!j.is_array()) {
    throw ConfigError(where + ": expected an array of numbers");
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(number(j[i], where + "[" + std::to_string(i) + "]"));
  }
  return out;
}

inline std::vector<std::vector<double>> rows(const Json& j, const std::string& where) {
  if (!j.is_array()) {
    throw ConfigError(where + ": expected an array of arrays");
  }
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(numbers(j[i], where + "[" + std::to_string(i) + "]"));
  }
  return out;
}

inline Matrix matrix(const Json& j, std::size_t r, std::size_t c, const std::string& where) {
  const auto rs = rows(j, where);
  if (rs.size() != r) {
    throw ConfigError(where + ": expected " + std::to_string(r) + " rows");
  }
  Matrix m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  for (std::size_t i = 0; i < r; ++i) {
    if (rs[i].size() != c) {
      throw ConfigError(where + ": expected " + std::to_string(c) + " columns");
    }
    for (std::size_t k = 0; k < c; ++k) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rs[i][k];
    }
  }
  return m;
}

inline Json matrix_json(const Matrix& m) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) {
      row.push_back(m(i, k));
    }
    out.push_back(row);
  }
  return out;
}

inline void require_dim(const std::vector<double>& v, std::size_t n, const std::string& where) {
  if (v.size() != n) {
    throw ConfigError(where + ": expected length " + std::to_string(n));
  }
}

inline void require_positive_times(const std::vector<double>& ts, const std::string& where) {
  for (double t : ts) {
    if (!(t > 0.0) || !std::isfinite(t)) {
      throw ConfigError(where + ": times must be positive");
    }
  }
}

}  // namespace detail

[[nodiscard]] inline FieldConfig parse_field(const Json& j, std::size_t n, const std::string& where) {
  using namespace detail;
  require_keys(j, where, {"type", "value", "w", "amplitude", "phase", "coord", "theta", "a", "offset"},
               {"type"});
  FieldConfig f;
  f.type = string(j["type"], where + ".type");
  if (f.type == "constant") {
    require_keys(j, where, {"type", "value"});
    if (j.contains("value")) f.value = number(j["value"], where + ".value");
  } else if (f.type == "trig") {
    require_keys(j, where, {"type", "w", "amplitude", "phase"}, {"w"});
    f.w = numbers(j["w"], where + ".w");
    require_dim(f.w, n, where + ".w");
    if (j.contains("amplitude")) f.amplitude = number(j["amplitude"], where + ".amplitude");
    if (j.contains("phase")) f.phase = number(j["phase"], where + ".phase");
  } else if (f.type == "abs_power") {
    require_keys(j, where, {"type", "coord", "theta"}, {"coord", "theta"});
    f.coord = unsigned_int(j["coord"], where + ".coord");
    if (f.coord < 1 || f.coord > n) {
      throw ConfigError(where + ".coord: out of range (1-based)");
    }
    f.theta = number(j["theta"], where + ".theta");
    if (!(f.theta > 0.0 && f.theta <= 1.0)) {
      throw ConfigError(where + ".theta: must lie in (0, 1]");
    }
  } else if (f.type == "tanh_ridge") {
    require_keys(j, where, {"type", "a", "amplitude", "offset"}, {"a"});
    f.a = numbers(j["a"], where + ".a");
    require_dim(f.a, n, where + ".a");
    if (j.contains("amplitude")) f.amplitude = number(j["amplitude"], where + ".amplitude");
    if (j.contains("offset")) f.offset = number(j["offset"], where + ".offset");
  } else {
    throw ConfigError(where + ".type: unknown field type '" + f.type + "'");
  }
  return f;
}

[[nodiscard]] inline Json field_json(const FieldConfig& f) {
  Json j;
  j["type"] = f.type;
  if (f.type == "constant") {
    j["value"] = f.value;
  } else if (f.type == "trig") {
    j["w"] = f.w;
    j["amplitude"] = f.amplitude;
    j["phase"] = f.phase;
  } else if (f.type == "abs_power") {
    j["coord"] = f.coord;
    j["theta"] = f.theta;
  } else {
    j["a"] = f.a;
    j["amplitude"] = f.amplitude;
    j["offset"] = f.offset;
  }
  return j;
}

[[nodiscard]] inline Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

[[nodiscard]] inline ScalarField make_field(const FieldConfig& f, std::size_t n) {
  if (f.type == "constant") return fields::constant(n, f.value);
  if (f.type == "trig") return fields::trig(to_vector(f.w), f.amplitude, f.phase);
  if (f.type == "abs_power") return fields::abs_power(n, f.coord - 1, f.theta);
  if (f.type == "tanh_ridge") return fields::tanh_ridge(to_vector(f.a), f.amplitude, f.offset);
  throw ConfigError("unknown field type '" + f.type + "'");
}

[[nodiscard]] inline OperatorSpec make_operator(const OperatorConfig& c) {
  std::vector<DriftTerm> terms;
  for (const auto& t : c.drift) {
    terms.push_back({t.target - 1, t.amplitude, to_vector(t.a), t.offset});
  }
  return OperatorSpec(c.q0, c.a, DriftField(c.n, std::move(terms)));
}

[[nodiscard]] inline OperatorConfig parse_operator(const Json& j) {
  using namespace detail;
  require_keys(j, "operator", {"n", "p_tilde", "Q0", "A", "drift"}, {"n", "p_tilde", "Q0", "A"});
  OperatorConfig c;
  c.n = unsigned_int(j["n"], "operator.n");
  c.p_tilde = unsigned_int(j["p_tilde"], "operator.p_tilde");
  if (c.n < 1 || c.p_tilde < 1 || c.p_tilde > c.n) {
    throw ConfigError("operator: need 1 <= p_tilde <= n");
  }
  c.q0 = matrix(j["Q0"], c.p_tilde, c.p_tilde, "operator.Q0");
  c.a = matrix(j["A"], c.n, c.n, "operator.A");
  if (j.contains("drift")) {
    if (!j["drift"].is_array()) {
      throw ConfigError("operator.drift: expected an array");
    }
    for (std::size_t i = 0; i < j["drift"].size(); ++i) {
      const std::string where = "operator.drift[" + std::to_string(i) + "]";
      const Json& d = j["drift"][i];
      require_keys(d, where, {"target", "amplitude", "a", "offset"}, {"target", "amplitude", "a"});
      DriftTermConfig t;
      t.target = unsigned_int(d["target"], where + ".target");
      if (t.target < 1 || t.target > c.p_tilde) {
        throw ConfigError(where + ".target: must lie in 1..p_tilde");
      }
      t.amplitude = number(d["amplitude"], where + ".amplitude");
      t.a = numbers(d["a"], where + ".a");
      require_dim(t.a, c.n, where + ".a");
      if (d.contains("offset")) t.offset = number(d["offset"], where + ".offset");
      c.drift.push_back(std::move(t));
    }
  }
  return c;
}

[[nodiscard]] inline RunConfig parse(const Json& j) {
  using namespace detail;
  require_keys(j, "config",
               {"operator", "seed", "threads", "budget", "output", "gramian", "evaluate", "solve", "verify"},
               {"operator"});
  RunConfig rc;
  rc.op = parse_operator(j["operator"]);
  const std::size_t n = rc.op.n;
  if (j.contains("seed")) rc.seed = unsigned_int(j["seed"], "seed");
  if (j.contains("threads")) rc.threads = static_cast<unsigned>(unsigned_int(j["threads"], "threads"));
  if (j.contains("budget")) rc.budget = unsigned_int(j["budget"], "budget");
  if (j.contains("output")) rc.output = string(j["output"], "output");
  if (j.contains("gramian")) {
    const Json& g = j["gramian"];
    require_keys(g, "gramian", {"t"}, {"t"});
    rc.gramian = GramianCommand{numbers(g["t"], "gramian.t")};
    require_positive_times(rc.gramian->t, "gramian.t");
  }
  if (j.contains("evaluate")) {
    const Json& e = j["evaluate"];
    require_keys(e, "evaluate", {"field", "t", "points", "method", "budget"}, {"field", "t", "points"});
    EvaluateCommand c;
    c.field = parse_field(e["field"], n, "evaluate.field");
    c.t = numbers(e["t"], "evaluate.t");
    require_positive_times(c.t, "evaluate.t");
    c.points = rows(e["points"], "evaluate.points");
    for (const auto& p : c.points) require_dim(p, n, "evaluate.points");
    if (e.contains("method")) c.method = string(e["method"], "evaluate.method");
    if (c.method != "direct" && c.method != "girsanov" && c.method != "both") {
      throw ConfigError("evaluate.method: expected direct, girsanov or both");
    }
    if (e.contains("budget")) c.budget = unsigned_int(e["budget"], "evaluate.budget");
    rc.evaluate = std::move(c);
  }
  if (j.contains("solve")) {
    const Json& s = j["solve"];
    require_keys(s, "solve", {"kind", "field", "initial", "lambda", "t", "points", "paths_per_node", "tol"},
                 {"field", "points"});
    SolveCommand c;
    if (s.contains("kind")) c.kind = string(s["kind"], "solve.kind");
    if (c.kind != "elliptic" && c.kind != "parabolic") {
      throw ConfigError("solve.kind: expected elliptic or parabolic");
    }
    c.field = parse_field(s["field"], n, "solve.field");
    if (s.contains("initial")) c.initial = parse_field(s["initial"], n, "solve.initial");
    if (s.contains("lambda")) c.lambda = number(s["lambda"], "solve.lambda");
    if (!(c.lambda > 0.0)) throw ConfigError("solve.lambda: must be positive");
    if (s.contains("t")) c.t = numbers(s["t"], "solve.t");
    require_positive_times(c.t, "solve.t");
    if (c.kind == "parabolic" && c.t.empty()) throw ConfigError("solve.t: required for parabolic");
    c.points = rows(s["points"], "solve.points");
    for (const auto& p : c.points) require_dim(p, n, "solve.points");
    if (s.contains("paths_per_node")) c.paths_per_node = unsigned_int(s["paths_per_node"], "solve.paths_per_node");
    if (c.paths_per_node < 2) throw ConfigError("solve.paths_per_node: must be >= 2");
    if (s.contains("tol")) c.tol = number(s["tol"], "solve.tol");
    if (!(c.tol > 0.0)) throw ConfigError("solve.tol: must be positive");
    rc.solve = std::move(c);
  }
  if (j.contains("verify")) {
    const Json& v = j["verify"];
    require_keys(v, "verify", {"t_grid", "s_grid", "flow_q", "flow_paths", "schauder"});
    VerifyCommand c;
    c.t_grid = v.contains("t_grid") ? numbers(v["t_grid"], "verify.t_grid")
                                    : std::vector<double>{1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1};
    c.s_grid = v.contains("s_grid") ? numbers(v["s_grid"], "verify.s_grid") : c.t_grid;
    require_positive_times(c.t_grid, "verify.t_grid");
    require_positive_times(c.s_grid, "verify.s_grid");
    if (v.contains("flow_q")) c.flow_q = numbers(v["flow_q"], "verify.flow_q");
    if (v.contains("flow_paths")) c.flow_paths = unsigned_int(v["flow_paths"], "verify.flow_paths");
    if (v.contains("schauder")) {
      const Json& s = v["schauder"];
      require_keys(s, "verify.schauder", {"theta", "lambda", "samples", "paths_per_node", "family", "parabolic_t"},
                   {"family"});
      SchauderCommand sc;
      if (s.contains("theta")) sc.theta = number(s["theta"], "verify.schauder.theta");
      if (s.contains("lambda")) sc.lambda = number(s["lambda"], "verify.schauder.lambda");
      if (s.contains("samples")) sc.samples = unsigned_int(s["samples"], "verify.schauder.samples");
      if (s.contains("paths_per_node")) {
        sc.paths_per_node = unsigned_int(s["paths_per_node"], "verify.schauder.paths_per_node");
      }
      if (s.contains("parabolic_t")) sc.parabolic_t = number(s["parabolic_t"], "verify.schauder.parabolic_t");
      if (!s["family"].is_array() || s["family"].empty()) {
        throw ConfigError("verify.schauder.family: expected a non-empty array");
      }
      for (std::size_t i = 0; i < s["family"].size(); ++i) {
        sc.family.push_back(parse_field(s["family"][i], n, "verify.schauder.family[" + std::to_string(i) + "]"));
      }
      c.schauder = std::move(sc);
    }
    rc.verify = std::move(c);
  }
  return rc;
}

[[nodiscard]] inline Json to_json(const RunConfig& rc) {
  Json j;
  Json op;
  op["n"] = rc.op.n;
  op["p_tilde"] = rc.op.p_tilde;
  op["Q0"] = detail::matrix_json(rc.op.q0);
  op["A"] = detail::matrix_json(rc.op.a);
  if (!rc.op.drift.empty()) {
    Json d = Json::array();
    for (const auto& t : rc.op.drift) {
      d.push_back({{"target", t.target}, {"amplitude", t.amplitude}, {"a", t.a}, {"offset", t.offset}});
    }
    op["drift"] = d;
  }
  j["operator"] = op;
  if (rc.seed) j["seed"] = *rc.seed;
  if (rc.threads) j["threads"] = *rc.threads;
  if (rc.budget) j["budget"] = *rc.budget;
  if (rc.output) j["output"] = *rc.output;
  if (rc.gramian) j["gramian"] = {{"t", rc.gramian->t}};
  if (rc.evaluate) {
    Json e;
    e["field"] = field_json(rc.evaluate->field);
    e["t"] = rc.evaluate->t;
    e["points"] = rc.evaluate->points;
    e["method"] = rc.evaluate->method;
    if (rc.evaluate->budget) e["budget"] = *rc.evaluate->budget;
    j["evaluate"] = e;
  }
  if (rc.solve) {
    Json s;
    s["kind"] = rc.solve->kind;
    s["field"] = field_json(rc.solve->field);
    if (rc.solve->initial) s["initial"] = field_json(*rc.solve->initial);
    s["lambda"] = rc.solve->lambda;
    s["t"] = rc.solve->t;
    s["points"] = rc.solve->points;
    s["paths_per_node"] = rc.solve->paths_per_node;
    s["tol"] = rc.solve->tol;
    j["solve"] = s;
  }
  if (rc.verify) {
    Json v;
    v["t_grid"] = rc.verify->t_grid;
    v["s_grid"] = rc.verify->s_grid;
    v["flow_q"] = rc.verify->flow_q;
    v["flow_paths"] = rc.verify->flow_paths;
    if (rc.verify->schauder) {
      const auto& sc = *rc.verify->schauder;
      Json s;
      s["theta"] = sc.theta;
      s["lambda"] = sc.lambda;
      s["samples"] = sc.samples;
      s["paths_per_node"] = sc.paths_per_node;
      Json fam = Json::array();
      for (const auto& f : sc.family) fam.push_back(field_json(f));
      s["family"] = fam;
      if (sc.parabolic_t) s["parabolic_t"] = *sc.parabolic_t;
      v["schauder"] = s;
    }
    j["verify"] = v;
  }
  return j;
}

[[nodiscard]] inline RunConfig parse_text(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse(j);
}

[[nodiscard]] inline RunConfig load(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config '" + path + "'");
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str());
}

}  // namespace kolmo::config
