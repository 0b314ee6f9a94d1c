#pragma once

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gvf/analysis.hpp"
#include "gvf/errors.hpp"
#include "gvf/field.hpp"
#include "gvf/path.hpp"
#include "gvf/sim.hpp"
#include "gvf/surface.hpp"

namespace gvf {

using json = nlohmann::json;

enum class ModelKind { single_integrator, single_integrator_normalized, extended, unicycle };

inline const char* to_string(ModelKind m) {
  switch (m) {
    case ModelKind::single_integrator: return "single_integrator";
    case ModelKind::single_integrator_normalized: return "single_integrator_normalized";
    case ModelKind::extended: return "extended";
    case ModelKind::unicycle: return "unicycle";
  }
  return "unknown";
}

struct SweepSpec {
  int count = 0;
  Vec lo;  // sampling box for initial generalized positions
  Vec hi;
};

struct ScenarioDoc {
  // path section
  std::string path_type;
  PathParams path_params;
  AffinePose pose;
  double beta = 1.0;
  double L = 1.0;
  bool implicit = false;

  // field section
  Vec k;
  double orientation = 1.0;
  double k_theta = 1.0;

  ModelKind model = ModelKind::single_integrator;

  // initial state
  Vec position;
  double theta = 0.0;
  bool has_theta = false;
  double w0 = 0.0;

  double speed = 1.0;
  IntegrationSettings sim;
  DisturbanceSpec wind;
  bool out_csv = true;
  bool out_svg = false;
  std::uint64_t seed = 0;

  std::optional<Box> scan_box;
  int scan_grid = 32;
  std::optional<SweepSpec> sweep;

  json raw;
};

namespace detail {

[[noreturn]] inline void fail(const std::string& where, const std::string& what) {
  throw validation_error("scenario error at " + where + ": " + what);
}

inline void expect_object(const json& j, const std::string& where) {
  if (!j.is_object()) fail(where, "expected an object");
}

inline void reject_unknown_keys(const json& obj, const std::string& where,
                                std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* key : allowed)
      if (it.key() == key) ok = true;
    if (!ok) fail(where.empty() ? it.key() : where + "." + it.key(), "unknown key");
  }
}

inline double number_at(const json& obj, const std::string& where, const char* key,
                        std::optional<double> fallback = std::nullopt) {
  if (!obj.contains(key)) {
    if (fallback) return *fallback;
    fail(where + "." + key, "missing required number");
  }
  if (!obj[key].is_number()) fail(where + "." + key, "expected a number");
  return obj[key].get<double>();
}

inline Vec vector_at(const json& obj, const std::string& where, const char* key) {
  if (!obj.contains(key) || !obj[key].is_array())
    fail(where + "." + key, "expected an array of numbers");
  const auto& arr = obj[key];
  Vec v(static_cast<int>(arr.size()));
  for (int i = 0; i < v.size(); ++i) {
    if (!arr[i].is_number()) fail(where + "." + key, "expected an array of numbers");
    v[i] = arr[i].get<double>();
  }
  return v;
}

}  // namespace detail

inline bool is_implicit_path_type(const std::string& type) {
  return type == "circle-implicit" || type == "figure8-implicit";
}

// Parse and validate a scenario document. Unknown keys are rejected;
// messages name the offending field (e.g. "sim.dt").
inline ScenarioDoc parse_scenario(const json& root) {
  using detail::fail;
  detail::expect_object(root, "scenario");
  detail::reject_unknown_keys(root, "", {"path", "field", "model", "initial", "speed", "sim",
                                         "wind", "outputs", "seed", "scan", "sweep"});
  ScenarioDoc doc;
  doc.raw = root;

  // --- path ---
  if (!root.contains("path")) fail("path", "missing section");
  const json& path = root["path"];
  detail::expect_object(path, "path");
  detail::reject_unknown_keys(path, "path", {"type", "params", "affine", "beta", "L"});
  if (!path.contains("type") || !path["type"].is_string()) fail("path.type", "missing path type");
  doc.path_type = path["type"].get<std::string>();
  doc.implicit = is_implicit_path_type(doc.path_type);
  if (doc.implicit) {
    for (const char* key : {"params", "affine", "beta", "L"})
      if (path.contains(key))
        fail(std::string("path.") + key, "not applicable to implicit path types");
  } else {
    if (path.contains("params")) {
      detail::expect_object(path["params"], "path.params");
      for (auto it = path["params"].begin(); it != path["params"].end(); ++it) {
        std::vector<double> values;
        if (it.value().is_number()) {
          values.push_back(it.value().get<double>());
        } else if (it.value().is_array()) {
          for (const auto& entry : it.value()) {
            if (!entry.is_number()) fail("path.params." + it.key(), "expected numbers");
            values.push_back(entry.get<double>());
          }
        } else {
          fail("path.params." + it.key(), "expected a number or array");
        }
        doc.path_params[it.key()] = values;
      }
    }
    if (path.contains("affine")) {
      const json& aff = path["affine"];
      detail::expect_object(aff, "path.affine");
      detail::reject_unknown_keys(aff, "path.affine", {"alpha", "offset"});
      doc.pose.alpha = detail::number_at(aff, "path.affine", "alpha", 0.0);
      if (aff.contains("offset")) {
        const Vec off = detail::vector_at(aff, "path.affine", "offset");
        if (off.size() != 3) fail("path.affine.offset", "expected 3 entries");
        doc.pose.offset = off;
      }
    }
    doc.beta = detail::number_at(path, "path", "beta", 1.0);
    if (!(doc.beta > 0.0)) fail("path.beta", "must be positive");
    doc.L = detail::number_at(path, "path", "L", 1.0);
    if (!(doc.L > 0.0) || doc.L > 1.0) fail("path.L", "must lie in (0, 1]");
  }

  // --- field ---
  if (!root.contains("field")) fail("field", "missing section");
  const json& field = root["field"];
  detail::expect_object(field, "field");
  detail::reject_unknown_keys(field, "field", {"k", "orientation", "k_theta"});
  doc.k = detail::vector_at(field, "field", "k");
  for (int i = 0; i < doc.k.size(); ++i)
    if (!(doc.k[i] > 0.0)) fail("field.k", "gains must be positive");
  doc.orientation = detail::number_at(field, "field", "orientation", 1.0);
  if (doc.orientation != 1.0 && doc.orientation != -1.0)
    fail("field.orientation", "must be +1 or -1");
  doc.k_theta = detail::number_at(field, "field", "k_theta", 1.0);
  if (!(doc.k_theta > 0.0)) fail("field.k_theta", "must be positive");

  // --- model ---
  if (!root.contains("model") || !root["model"].is_string()) fail("model", "missing model name");
  const std::string model = root["model"].get<std::string>();
  if (model == "single_integrator") doc.model = ModelKind::single_integrator;
  else if (model == "single_integrator_normalized")
    doc.model = ModelKind::single_integrator_normalized;
  else if (model == "extended") doc.model = ModelKind::extended;
  else if (model == "unicycle") doc.model = ModelKind::unicycle;
  else fail("model", "unknown model '" + model + "'");
  if (doc.model == ModelKind::unicycle && doc.implicit)
    fail("model", "the unicycle model needs a parametric 3D path");

  // --- initial ---
  if (!root.contains("initial")) fail("initial", "missing section");
  const json& initial = root["initial"];
  detail::expect_object(initial, "initial");
  detail::reject_unknown_keys(initial, "initial", {"position", "theta", "w"});
  doc.position = detail::vector_at(initial, "initial", "position");
  doc.has_theta = initial.contains("theta");
  if (doc.model == ModelKind::unicycle && !doc.has_theta)
    fail("initial.theta", "required for the unicycle model");
  if (doc.has_theta) {
    if (doc.model != ModelKind::unicycle)
      fail("initial.theta", "only meaningful for the unicycle model");
    doc.theta = detail::number_at(initial, "initial", "theta");
  }
  if (initial.contains("w")) {
    if (doc.implicit) fail("initial.w", "implicit planar fields have no virtual coordinate");
    doc.w0 = detail::number_at(initial, "initial", "w");
  }

  doc.speed = detail::number_at(root, "scenario", "speed", 1.0);
  if (!(doc.speed > 0.0)) fail("speed", "must be positive");

  // --- sim ---
  if (!root.contains("sim")) fail("sim", "missing section");
  const json& sim = root["sim"];
  detail::expect_object(sim, "sim");
  detail::reject_unknown_keys(sim, "sim", {"dt", "T", "method"});
  doc.sim.dt = detail::number_at(sim, "sim", "dt", 0.02);
  if (!(doc.sim.dt > 0.0)) fail("sim.dt", "must be positive");
  doc.sim.T = detail::number_at(sim, "sim", "T", 600.0);
  if (!(doc.sim.T >= doc.sim.dt)) fail("sim.T", "must be at least sim.dt");
  if (sim.contains("method")) {
    if (!sim["method"].is_string()) fail("sim.method", "expected 'euler' or 'rk4'");
    const std::string method = sim["method"].get<std::string>();
    if (method == "euler") doc.sim.method = Method::euler;
    else if (method == "rk4") doc.sim.method = Method::rk4;
    else fail("sim.method", "expected 'euler' or 'rk4'");
  }

  // --- wind ---
  if (root.contains("wind")) {
    const json& wind = root["wind"];
    detail::expect_object(wind, "wind");
    detail::reject_unknown_keys(wind, "wind", {"kind", "vector", "lambda"});
    if (!wind.contains("kind") || !wind["kind"].is_string())
      fail("wind.kind", "expected 'none', 'constant', 'decaying' or 'noise'");
    const std::string kind = wind["kind"].get<std::string>();
    if (kind == "none") doc.wind.kind = DisturbanceKind::none;
    else if (kind == "constant") doc.wind.kind = DisturbanceKind::constant;
    else if (kind == "decaying") doc.wind.kind = DisturbanceKind::decaying;
    else if (kind == "noise") doc.wind.kind = DisturbanceKind::noise;
    else fail("wind.kind", "unknown kind '" + kind + "'");
    if (doc.wind.kind != DisturbanceKind::none) {
      if (doc.model != ModelKind::unicycle)
        fail("wind.kind", "wind applies to the unicycle model only");
      const Vec v = detail::vector_at(wind, "wind", "vector");
      if (v.size() != 3) fail("wind.vector", "expected 3 entries");
      doc.wind.vector = v;
      if (doc.wind.kind == DisturbanceKind::decaying)
        doc.wind.lambda = detail::number_at(wind, "wind", "lambda");
    }
  }

  // --- outputs ---
  if (root.contains("outputs")) {
    const json& outputs = root["outputs"];
    detail::expect_object(outputs, "outputs");
    detail::reject_unknown_keys(outputs, "outputs", {"csv", "svg"});
    if (outputs.contains("csv")) {
      if (!outputs["csv"].is_boolean()) fail("outputs.csv", "expected a boolean");
      doc.out_csv = outputs["csv"].get<bool>();
    }
    if (outputs.contains("svg")) {
      if (!outputs["svg"].is_boolean()) fail("outputs.svg", "expected a boolean");
      doc.out_svg = outputs["svg"].get<bool>();
    }
  }

  if (root.contains("seed")) {
    if (!root["seed"].is_number_unsigned() && !root["seed"].is_number_integer())
      fail("seed", "expected an integer");
    doc.seed = root["seed"].get<std::uint64_t>();
    doc.wind.seed = doc.seed;
  }

  // --- scan ---
  if (root.contains("scan")) {
    const json& scan = root["scan"];
    detail::expect_object(scan, "scan");
    detail::reject_unknown_keys(scan, "scan", {"box", "grid"});
    if (!scan.contains("box") || !scan["box"].is_array())
      fail("scan.box", "expected an array of [lo, hi] pairs");
    Box box;
    const auto& arr = scan["box"];
    box.lo = Vec(static_cast<int>(arr.size()));
    box.hi = Vec(static_cast<int>(arr.size()));
    for (int i = 0; i < box.lo.size(); ++i) {
      if (!arr[i].is_array() || arr[i].size() != 2 || !arr[i][0].is_number() ||
          !arr[i][1].is_number())
        fail("scan.box", "expected an array of [lo, hi] pairs");
      box.lo[i] = arr[i][0].get<double>();
      box.hi[i] = arr[i][1].get<double>();
      if (!(box.lo[i] < box.hi[i])) fail("scan.box", "degenerate axis range");
    }
    doc.scan_box = box;
    doc.scan_grid = static_cast<int>(detail::number_at(scan, "scan", "grid", 32.0));
    if (doc.scan_grid < 8) fail("scan.grid", "must be at least 8 per axis");
  }

  // --- sweep ---
  if (root.contains("sweep")) {
    const json& sweep = root["sweep"];
    detail::expect_object(sweep, "sweep");
    detail::reject_unknown_keys(sweep, "sweep", {"count", "lo", "hi"});
    SweepSpec spec;
    spec.count = static_cast<int>(detail::number_at(sweep, "sweep", "count"));
    if (spec.count < 1) fail("sweep.count", "must be positive");
    spec.lo = detail::vector_at(sweep, "sweep", "lo");
    spec.hi = detail::vector_at(sweep, "sweep", "hi");
    if (spec.lo.size() != spec.hi.size()) fail("sweep.hi", "lo/hi size mismatch");
    for (int i = 0; i < spec.lo.size(); ++i)
      if (!(spec.lo[i] < spec.hi[i])) fail("sweep.lo", "degenerate axis range");
    doc.sweep = spec;
  }

  return doc;
}

// ---------------------------------------------------------------------------
// Runtime objects derived from a validated document
// ---------------------------------------------------------------------------
struct ScenarioRuntime {
  ScenarioDoc doc;
  int n_physical = 0;
  std::optional<ParametricPath> physical_path;  // placed, before re-parameterization
  std::optional<ParametricPath> folded_path;    // with g(w) = beta w folded in
  std::optional<SurfaceStack> stack;            // implicit case
  FieldEval field;
  Dynamics dynamics;
  Vec x0;
  double period_hint = 2.0 * kPi;  // parameter span covering the trace, folded units
};

inline ScenarioRuntime build_runtime(const ScenarioDoc& doc) {
  ScenarioRuntime rt;
  rt.doc = doc;

  GvfParams params;
  params.k = doc.k;
  params.orientation = doc.orientation;
  params.k_theta = doc.k_theta;

  if (doc.implicit) {
    rt.stack = (doc.path_type == "circle-implicit") ? circle_implicit_stack()
                                                    : figure8_implicit_stack();
    if (doc.k.size() != rt.stack->count)
      detail::fail("field.k", "expected " + std::to_string(rt.stack->count) + " gains");
    rt.n_physical = rt.stack->m;
    rt.field = make_field(*rt.stack, params);
    if (doc.position.size() != rt.stack->m)
      detail::fail("initial.position", "expected " + std::to_string(rt.stack->m) + " entries");
    rt.x0 = doc.position;
  } else {
    ParametricPath path = catalog_make(doc.path_type, doc.path_params);
    if (doc.model == ModelKind::unicycle && path.n == 2) path = lift_to_3d(path);
    path = apply_affine(path, doc.pose);
    rt.physical_path = path;
    const Reparameterization rep{doc.beta};
    rt.folded_path = reparameterize(path, rep);
    rt.n_physical = path.n;
    if (doc.k.size() != path.n)
      detail::fail("field.k", "expected " + std::to_string(path.n) + " gains");
    rt.field = make_field(path, doc.L, rep, params);
    if (doc.position.size() != path.n)
      detail::fail("initial.position", "expected " + std::to_string(path.n) + " entries");

    double omega_min = 1.0;
    if (doc.path_type == "trefoil") {
      const double w1 = doc.path_params.count("omega1") ? doc.path_params.at("omega1")[0] : 0.02;
      const double w2 = doc.path_params.count("omega2") ? doc.path_params.at("omega2")[0] : 0.03;
      omega_min = std::min(w1, w2);
    } else if (doc.path_type == "lissajous3d") {
      const auto om = doc.path_params.count("omega") ? doc.path_params.at("omega")
                                                     : std::vector<double>{1.0, 2.0, 2.0};
      omega_min = std::min({om[0], om[1], om[2]});
    }
    rt.period_hint = 3.0 * 2.0 * kPi / (omega_min * doc.beta);

    Vec xi0(path.n + 1);
    xi0.head(path.n) = doc.position;
    xi0[path.n] = doc.w0;
    rt.x0 = xi0;
  }

  switch (doc.model) {
    case ModelKind::single_integrator:
      rt.dynamics = single_integrator(rt.field);
      break;
    case ModelKind::single_integrator_normalized:
      rt.dynamics = single_integrator(rt.field, doc.speed, true);
      break;
    case ModelKind::extended: {
      const ProjectionOperator op = ProjectionOperator::drop_last(rt.field.m);
      rt.dynamics = extended_dynamics(rt.field, op);
      rt.x0 = extended_initial(op, rt.x0);
      break;
    }
    case ModelKind::unicycle: {
      rt.dynamics = unicycle(rt.field, doc.speed, doc.k_theta, doc.wind);
      Vec state0(5);
      state0 << doc.position[0], doc.position[1], doc.position[2], wrap_angle(doc.theta), doc.w0;
      rt.x0 = state0;
      break;
    }
  }
  return rt;
}

// ---------------------------------------------------------------------------
// Built-in reproduction scenarios with the flight parameters
// ---------------------------------------------------------------------------
inline json builtin_scenario(const std::string& name) {
  if (name == "trefoil") {
    return json{
        {"path",
         {{"type", "trefoil"},
          {"params", {{"a", 80.0}, {"b", 160.0}, {"omega1", 0.02}, {"omega2", 0.03}}},
          {"affine", {{"alpha", 0.0}, {"offset", {79.0, -68.10, 50.0}}}},
          {"beta", 0.45},
          {"L", 0.1}}},
        {"field", {{"k", {0.002, 0.002, 0.002}}, {"orientation", 1}, {"k_theta", 1.0}}},
        {"model", "unicycle"},
        {"initial", {{"position", {0.0, 0.0, 60.0}}, {"theta", 0.0}, {"w", 0.0}}},
        {"speed", 12.0},
        {"sim", {{"dt", 0.02}, {"T", 600.0}, {"method", "rk4"}}},
        {"wind", {{"kind", "none"}}},
        {"outputs", {{"csv", true}, {"svg", true}}},
        {"seed", 0}};
  }
  if (name == "lissajous3d") {
    return json{
        {"path",
         {{"type", "lissajous3d"},
          {"params",
           {{"c", {225.0, 225.0, -20.0}}, {"omega", {1.0, 2.0, 2.0}}, {"delta", {0.0, kPi / 2.0, 0.0}}}},
          {"affine", {{"alpha", 0.66}, {"offset", {79.0, -68.10, 50.0}}}},
          {"beta", 0.01},
          {"L", 0.1}}},
        {"field", {{"k", {0.002, 0.002, 0.0025}}, {"orientation", 1}, {"k_theta", 1.0}}},
        {"model", "unicycle"},
        {"initial", {{"position", {0.0, 0.0, 60.0}}, {"theta", 0.0}, {"w", 0.0}}},
        {"speed", 12.0},
        {"sim", {{"dt", 0.02}, {"T", 600.0}, {"method", "rk4"}}},
        {"wind", {{"kind", "none"}}},
        {"outputs", {{"csv", true}, {"svg", true}}},
        {"seed", 0}};
  }
  if (name == "circle-impossibility") {
    return json{{"path", {{"type", "circle-implicit"}}},
                {"field", {{"k", {1.0}}, {"orientation", -1}}},
                {"model", "single_integrator"},
                {"initial", {{"position", {0.0, 0.0}}}},
                {"sim", {{"dt", 0.02}, {"T", 30.0}, {"method", "rk4"}}},
                {"outputs", {{"csv", true}, {"svg", false}}},
                {"seed", 0},
                {"sweep", {{"count", 100}, {"lo", {-2.0, -2.0}}, {"hi", {2.0, 2.0}}}}};
  }
  if (name == "figure8-scan") {
    return json{{"path", {{"type", "figure8-implicit"}}},
                {"field", {{"k", {1.0}}, {"orientation", -1}}},
                {"model", "single_integrator"},
                {"initial", {{"position", {0.5, 0.5}}}},
                {"sim", {{"dt", 0.02}, {"T", 1.0}, {"method", "rk4"}}},
                {"outputs", {{"csv", false}, {"svg", false}}},
                {"scan", {{"box", {{-2.0, 2.0}, {-2.0, 2.0}}}, {"grid", 64}}}};
  }
  throw parameter_error("builtin_scenario: unknown name '" + name + "'");
}

}  // namespace gvf
