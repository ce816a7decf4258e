// Copyright 2026 The coefid Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "coefid/experiment.hpp"

#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "coefid/csv.hpp"
#include <nlohmann/json.hpp>

#ifndef COEFID_VERSION
#define COEFID_VERSION "unknown"
#endif

namespace coefid {

namespace {

const std::vector<std::string> kMethods = {
    "first_order", "crank_nicolson", "hybrid_implicit", "transform",
    "nonlinear_implicit"};

std::optional<double> parse_number(const std::string& text) {
  double v = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

// Smooth positive bump centred inside the reference trapezoid.
double bump(const Point& x) {
  const double dx = x.x - 0.75, dy = x.y - 0.4;
  return std::exp(-20.0 * (dx * dx + dy * dy));
}

const std::map<std::string, SpatialFunction>& spatial_registry() {
  static const std::map<std::string, SpatialFunction> registry = {
      {"x", [](const Point& p) { return p.x; }},
      {"y", [](const Point& p) { return p.y; }},
      {"ramp_x", [](const Point& p) { return 1.0 + p.x; }},
      {"bump", bump},
  };
  return registry;
}

const std::map<std::string, SpaceTimeFunction>& space_time_registry() {
  static const std::map<std::string, SpaceTimeFunction> registry = {
      {"decaying_bump",
       [](const Point& p, double t) { return std::exp(-10.0 * t) * bump(p); }},
  };
  return registry;
}

SpatialFunction resolve_spatial(const std::string& text,
                                const std::string& path) {
  if (auto v = parse_number(text)) {
    return [c = *v](const Point&) { return c; };
  }
  const auto& reg = spatial_registry();
  if (auto it = reg.find(text); it != reg.end()) return it->second;
  throw ConfigError(path, "unknown expression '" + text + "'");
}

SpaceTimeFunction resolve_space_time(const std::string& text,
                                     const std::string& path) {
  if (auto v = parse_number(text)) {
    return [c = *v](const Point&, double) { return c; };
  }
  if (auto it = space_time_registry().find(text);
      it != space_time_registry().end()) {
    return it->second;
  }
  if (spatial_registry().contains(text)) {
    auto f = spatial_registry().at(text);
    return [f](const Point& p, double) { return f(p); };
  }
  throw ConfigError(path, "unknown expression '" + text + "'");
}

std::optional<CoefficientFunction> exact_coefficient(
    const ExperimentConfig& c) {
  if (c.coefficient == "unknown") return std::nullopt;
  if (c.coefficient == "switched_ramp") {
    return CoefficientFunction::switched_ramp(c.final_time);
  }
  if (c.coefficient == "smooth_rational") {
    return CoefficientFunction::smooth_rational();
  }
  if (c.coefficient == "zero") return CoefficientFunction::zero();
  if (c.coefficient == "table") {
    std::vector<double> ts, vs;
    for (const auto& [t, v] : c.coefficient_table) {
      ts.push_back(t);
      vs.push_back(v);
    }
    try {
      return CoefficientFunction::table(std::move(ts), std::move(vs));
    } catch (const InvalidInput& e) {
      throw ConfigError("coefficient.table", e.what());
    }
  }
  throw ConfigError("coefficient.kind",
                    "unknown coefficient '" + c.coefficient + "'");
}

// --- YAML helpers -----------------------------------------------------------

void check_keys(const YAML::Node& node, const std::string& path,
                const std::set<std::string>& allowed) {
  if (!node.IsMap()) throw ConfigError(path, "expected a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.contains(key)) {
      throw ConfigError(path.empty() ? key : path + "." + key, "unknown key");
    }
  }
}

template <typename T>
T read(const YAML::Node& node, const std::string& path) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(path, "has the wrong type");
  }
}

std::string join(const std::string& a, const std::string& b) {
  return a.empty() ? b : a + "." + b;
}

template <typename T>
void maybe(const YAML::Node& parent, const std::string& key,
           const std::string& path, T& out) {
  if (const auto node = parent[key]) out = read<T>(node, join(path, key));
}

Window read_window(const YAML::Node& node, const std::string& path) {
  const auto v = read<std::vector<double>>(node, path);
  if (v.size() != 2) throw ConfigError(path, "expected [lo, hi]");
  return {v[0], v[1]};
}

Point read_point(const YAML::Node& node, const std::string& path) {
  const auto v = read<std::vector<double>>(node, path);
  if (v.size() != 2) throw ConfigError(path, "expected [x, y]");
  return {v[0], v[1]};
}

std::string format_window(const Window& w) {
  return "[" + csv::format(w[0]) + ", " + csv::format(w[1]) + "]";
}

}  // namespace

ExperimentConfig parse_config(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError("<config>", std::string("YAML parse error: ") + e.what());
  }
  ExperimentConfig c;
  if (!root || root.IsNull()) return c;
  check_keys(root, "",
             {"name", "domain", "problem", "coefficient", "time", "methods",
              "initial_coefficient", "observation", "noise", "analysis",
              "outputs"});
  maybe(root, "name", "", c.name);

  if (const auto d = root["domain"]) {
    check_keys(d, "domain", {"polygon", "edge_length", "seed"});
    if (const auto poly = d["polygon"]) {
      if (!poly.IsSequence()) {
        throw ConfigError("domain.polygon", "expected a list of [x, y]");
      }
      c.polygon.clear();
      for (std::size_t i = 0; i < poly.size(); ++i) {
        c.polygon.push_back(
            read_point(poly[i], "domain.polygon[" + std::to_string(i) + "]"));
      }
    }
    maybe(d, "edge_length", "domain", c.edge_length);
    maybe(d, "seed", "domain", c.mesh_seed);
  }

  if (const auto p = root["problem"]) {
    check_keys(p, "problem", {"diffusion", "boundary_coeff", "source", "initial"});
    maybe(p, "diffusion", "problem", c.diffusion);
    maybe(p, "boundary_coeff", "problem", c.boundary_coeff);
    maybe(p, "source", "problem", c.source);
    maybe(p, "initial", "problem", c.initial);
  }

  if (const auto k = root["coefficient"]) {
    check_keys(k, "coefficient", {"kind", "table"});
    maybe(k, "kind", "coefficient", c.coefficient);
    if (const auto table = k["table"]) {
      if (!table.IsSequence()) {
        throw ConfigError("coefficient.table", "expected a list of [t, p]");
      }
      for (std::size_t i = 0; i < table.size(); ++i) {
        const auto pt = read_point(
            table[i], "coefficient.table[" + std::to_string(i) + "]");
        c.coefficient_table.push_back({pt.x, pt.y});
      }
    }
  }

  if (const auto t = root["time"]) {
    check_keys(t, "time",
               {"final_time", "data_steps", "data_scheme", "data_mode",
                "inverse_steps", "observations_file"});
    maybe(t, "final_time", "time", c.final_time);
    maybe(t, "data_steps", "time", c.data_steps);
    if (const auto s = t["data_scheme"]) {
      try {
        c.data_scheme = parse_direct_scheme(read<std::string>(s, "time.data_scheme"));
      } catch (const ConfigError&) {
        throw;
      } catch (const InvalidInput& e) {
        throw ConfigError("time.data_scheme", e.what());
      }
    }
    if (const auto m = t["data_mode"]) {
      const auto mode = read<std::string>(m, "time.data_mode");
      if (mode == "fine") {
        c.data_mode = DataMode::kFine;
      } else if (mode == "matched") {
        c.data_mode = DataMode::kMatched;
      } else {
        throw ConfigError("time.data_mode",
                          "expected 'fine' or 'matched', got '" + mode + "'");
      }
    }
    maybe(t, "inverse_steps", "time", c.inverse_steps);
    if (const auto f = t["observations_file"]) {
      c.observations_file = read<std::string>(f, "time.observations_file");
    }
  }

  maybe(root, "methods", "", c.methods);
  maybe(root, "initial_coefficient", "", c.initial_coefficient);

  if (const auto o = root["observation"]) {
    check_keys(o, "observation", {"kind", "point", "weight"});
    if (const auto kind = o["kind"]) {
      const auto k = read<std::string>(kind, "observation.kind");
      if (k == "point") {
        c.point_observation = true;
      } else if (k == "integral") {
        c.point_observation = false;
      } else {
        throw ConfigError("observation.kind",
                          "expected 'point' or 'integral', got '" + k + "'");
      }
    }
    if (const auto pt = o["point"]) {
      c.observation_point = read_point(pt, "observation.point");
    }
    maybe(o, "weight", "observation", c.observation_weight);
  }

  if (const auto n = root["noise"]) {
    check_keys(n, "noise", {"level", "seed"});
    maybe(n, "level", "noise", c.noise_level);
    maybe(n, "seed", "noise", c.noise_seed);
  }

  if (const auto a = root["analysis"]) {
    check_keys(a, "analysis", {"error_windows", "sign_change_window"});
    if (const auto w = a["error_windows"]) {
      if (!w.IsSequence()) {
        throw ConfigError("analysis.error_windows", "expected a list");
      }
      c.error_windows.clear();
      for (std::size_t i = 0; i < w.size(); ++i) {
        c.error_windows.push_back(read_window(
            w[i], "analysis.error_windows[" + std::to_string(i) + "]"));
      }
    }
    if (const auto s = a["sign_change_window"]) {
      c.sign_change_window = read_window(s, "analysis.sign_change_window");
    }
  }

  if (const auto out = root["outputs"]) {
    check_keys(out, "outputs", {"direct_series", "field"});
    maybe(out, "direct_series", "outputs", c.direct_series_steps);
    maybe(out, "field", "outputs", c.write_field);
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<config>", "cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string to_yaml(const ExperimentConfig& c) {
  std::ostringstream out;
  auto seq = [](const auto& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) s += ", ";
      if constexpr (std::is_floating_point_v<
                        std::decay_t<decltype(v[0])>>) {
        s += csv::format(v[i]);
      } else {
        s += std::to_string(v[i]);
      }
    }
    return s + "]";
  };
  auto quoted = [](const std::string& s) { return "\"" + s + "\""; };

  out << "name: " << quoted(c.name) << "\n";
  out << "domain:\n  polygon: [";
  for (std::size_t i = 0; i < c.polygon.size(); ++i) {
    if (i) out << ", ";
    out << "[" << csv::format(c.polygon[i].x) << ", "
        << csv::format(c.polygon[i].y) << "]";
  }
  out << "]\n";
  out << "  edge_length: " << csv::format(c.edge_length) << "\n";
  out << "  seed: " << c.mesh_seed << "\n";
  out << "problem:\n";
  out << "  diffusion: " << quoted(c.diffusion) << "\n";
  out << "  boundary_coeff: " << quoted(c.boundary_coeff) << "\n";
  out << "  source: " << quoted(c.source) << "\n";
  out << "  initial: " << quoted(c.initial) << "\n";
  out << "coefficient:\n  kind: " << c.coefficient << "\n";
  if (!c.coefficient_table.empty()) {
    out << "  table: [";
    for (std::size_t i = 0; i < c.coefficient_table.size(); ++i) {
      if (i) out << ", ";
      out << format_window(c.coefficient_table[i]);
    }
    out << "]\n";
  }
  out << "time:\n";
  out << "  final_time: " << csv::format(c.final_time) << "\n";
  out << "  data_steps: " << c.data_steps << "\n";
  out << "  data_scheme: " << to_string(c.data_scheme) << "\n";
  out << "  data_mode: "
      << (c.data_mode == DataMode::kFine ? "fine" : "matched") << "\n";
  out << "  inverse_steps: " << seq(c.inverse_steps) << "\n";
  if (c.observations_file) {
    out << "  observations_file: " << quoted(*c.observations_file) << "\n";
  }
  out << "methods: [";
  for (std::size_t i = 0; i < c.methods.size(); ++i) {
    out << (i ? ", " : "") << c.methods[i];
  }
  out << "]\n";
  out << "initial_coefficient: " << quoted(c.initial_coefficient) << "\n";
  out << "observation:\n  kind: "
      << (c.point_observation ? "point" : "integral") << "\n";
  if (c.observation_point) {
    out << "  point: [" << csv::format(c.observation_point->x) << ", "
        << csv::format(c.observation_point->y) << "]\n";
  }
  out << "  weight: " << quoted(c.observation_weight) << "\n";
  out << "noise:\n  level: " << csv::format(c.noise_level)
      << "\n  seed: " << c.noise_seed << "\n";
  out << "analysis:\n  error_windows: [";
  for (std::size_t i = 0; i < c.error_windows.size(); ++i) {
    out << (i ? ", " : "") << format_window(c.error_windows[i]);
  }
  out << "]\n";
  if (c.sign_change_window) {
    out << "  sign_change_window: " << format_window(*c.sign_change_window)
        << "\n";
  }
  out << "outputs:\n  direct_series: " << seq(c.direct_series_steps)
      << "\n  field: " << (c.write_field ? "true" : "false") << "\n";
  return out.str();
}

void validate(const ExperimentConfig& c) {
  std::optional<PolygonSpec> polygon;
  try {
    polygon.emplace(c.polygon);
  } catch (const InvalidInput& e) {
    throw ConfigError("domain.polygon", e.what());
  }
  if (!(c.edge_length > 0.0) || !std::isfinite(c.edge_length)) {
    throw ConfigError("domain.edge_length", "must be positive");
  }
  resolve_spatial(c.diffusion, "problem.diffusion");
  resolve_spatial(c.boundary_coeff, "problem.boundary_coeff");
  resolve_space_time(c.source, "problem.source");
  resolve_spatial(c.initial, "problem.initial");
  if (c.coefficient == "table" && c.coefficient_table.empty()) {
    throw ConfigError("coefficient.table", "required for kind 'table'");
  }
  const bool known = exact_coefficient(c).has_value();
  if (!known && !c.observations_file) {
    throw ConfigError("coefficient.kind",
                      "'unknown' requires time.observations_file");
  }
  if (c.observations_file && c.data_mode == DataMode::kMatched) {
    throw ConfigError("time.data_mode",
                      "must be 'fine' when an observations file is given");
  }

  if (!(c.final_time > 0.0) || !std::isfinite(c.final_time)) {
    throw ConfigError("time.final_time", "must be positive");
  }
  if (c.data_steps < 1) throw ConfigError("time.data_steps", "must be >= 1");
  for (std::size_t i = 0; i < c.inverse_steps.size(); ++i) {
    const std::string path = "time.inverse_steps[" + std::to_string(i) + "]";
    const std::size_t n = c.inverse_steps[i];
    if (n < 1) throw ConfigError(path, "must be >= 1");
    if (c.data_mode == DataMode::kFine && !c.observations_file &&
        c.data_steps % n != 0) {
      throw ConfigError(path, std::to_string(n) + " does not divide data_steps " +
                                  std::to_string(c.data_steps));
    }
  }
  for (std::size_t i = 0; i < c.methods.size(); ++i) {
    if (std::find(kMethods.begin(), kMethods.end(), c.methods[i]) ==
        kMethods.end()) {
      throw ConfigError("methods[" + std::to_string(i) + "]",
                        "unknown method '" + c.methods[i] + "'");
    }
  }
  const auto& init = c.initial_coefficient;
  if (init != "derivative" && init != "first_order_step" && init != "exact" &&
      !parse_number(init)) {
    throw ConfigError("initial_coefficient",
                      "expected derivative, first_order_step, exact or a "
                      "number, got '" + init + "'");
  }
  if (init == "exact" && !known) {
    throw ConfigError("initial_coefficient",
                      "'exact' needs a known coefficient");
  }
  if (c.observation_point &&
      !polygon->contains(*c.observation_point, -1e-12 * polygon->diameter())) {
    throw ConfigError("observation.point", "must lie strictly inside the domain");
  }
  if (!c.point_observation && c.observation_weight != "mean") {
    resolve_spatial(c.observation_weight, "observation.weight");
  }
  if (!(c.noise_level >= 0.0) || !std::isfinite(c.noise_level)) {
    throw ConfigError("noise.level", "must be nonnegative");
  }
  for (std::size_t i = 0; i < c.error_windows.size(); ++i) {
    const auto& w = c.error_windows[i];
    if (!(w[0] >= 0.0 && w[0] < w[1] && w[1] <= 1.0)) {
      throw ConfigError("analysis.error_windows[" + std::to_string(i) + "]",
                        "need 0 <= lo < hi <= 1");
    }
  }
  if (c.sign_change_window) {
    const auto& w = *c.sign_change_window;
    if (!(w[0] >= 0.0 && w[0] < w[1] && w[1] <= 1.0)) {
      throw ConfigError("analysis.sign_change_window", "need 0 <= lo < hi <= 1");
    }
  }
  for (std::size_t i = 0; i < c.direct_series_steps.size(); ++i) {
    if (c.direct_series_steps[i] < 1) {
      throw ConfigError("outputs.direct_series[" + std::to_string(i) + "]",
                        "must be >= 1");
    }
  }
}

std::vector<std::string> preset_names() {
  return {"fig2", "fig4", "fig5", "fig6", "fig7", "convergence_table"};
}

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  c.name = name;
  if (name == "fig2") {
    c.coefficient = "switched_ramp";
    c.inverse_steps.clear();
    c.methods.clear();
    c.direct_series_steps = {20, 50, 100, 1000};
    return c;
  }
  if (name == "fig4" || name == "fig5") {
    c.coefficient = "switched_ramp";
    c.data_steps = 1000;
    c.data_scheme = DirectScheme::kImplicit;
    c.inverse_steps = {100, 250, 500};
    c.methods = {name == "fig4" ? "first_order" : "crank_nicolson"};
    c.error_windows = {{0.05, 0.45}, {0.55, 1.0}};
    c.sign_change_window = Window{0.45, 0.6};
    return c;
  }
  if (name == "fig6" || name == "fig7") {
    // Second-order data keeps the data error below the scheme error.
    c.coefficient = "smooth_rational";
    c.data_steps = 2000;
    c.data_scheme = DirectScheme::kCrankNicolson;
    c.inverse_steps = {125, 250, 500};
    c.methods = {name == "fig6" ? "first_order" : "crank_nicolson"};
    c.error_windows = {{0.2, 1.0}};
    return c;
  }
  if (name == "convergence_table") {
    c.coefficient = "smooth_rational";
    c.data_mode = DataMode::kMatched;
    c.inverse_steps = {125, 250, 500, 1000};
    c.methods = {"first_order", "crank_nicolson", "hybrid_implicit"};
    c.initial_coefficient = "exact";
    c.error_windows = {{0.2, 1.0}};
    return c;
  }
  throw InvalidInput("unknown preset '" + name +
                     "' (expected fig2, fig4, fig5, fig6, fig7 or "
                     "convergence_table)");
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(),
                 nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    hex.push_back(kHex[digest[i] >> 4]);
    hex.push_back(kHex[digest[i] & 0xf]);
  }
  return hex;
}

namespace {

struct Job {
  std::string method;
  std::size_t steps;
};

struct JobResult {
  std::optional<IdentificationResult> result;
  std::exception_ptr error;
};

void require_finite(std::span<const double> values, const std::string& what) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw NumericalError("non-finite value produced in " + what);
    }
  }
}

DirectScheme matching_direct_scheme(const std::string& method) {
  return method == "crank_nicolson" ? DirectScheme::kCrankNicolson
                                    : DirectScheme::kImplicit;
}

std::string series_csv(const TimeGrid& grid, std::span<const double> series) {
  std::ostringstream out;
  write_observations_csv(out, grid, series);
  return out.str();
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config,
                                const std::string& out_dir, unsigned threads) {
  validate(config);
  const PolygonSpec polygon(config.polygon);
  TriangulateOptions mesh_options;
  mesh_options.seed = config.mesh_seed;
  Mesh mesh = triangulate(polygon, config.edge_length, mesh_options);

  ProblemSpec spec{resolve_spatial(config.diffusion, "problem.diffusion"),
                   resolve_spatial(config.boundary_coeff,
                                   "problem.boundary_coeff"),
                   resolve_space_time(config.source, "problem.source"),
                   resolve_spatial(config.initial, "problem.initial")};
  const Discretization disc =
      Discretization::build(std::move(mesh), std::move(spec));

  ObservationKind kind;
  if (config.point_observation) {
    kind = PointEval{config.observation_point.value_or(polygon.centroid())};
  } else if (config.observation_weight == "mean") {
    kind = WeightedIntegral{
        [inv = 1.0 / polygon.area()](const Point&) { return inv; }};
  } else {
    kind = WeightedIntegral{
        resolve_spatial(config.observation_weight, "observation.weight")};
  }
  const ObservationFunctional obs = build_observation(disc.mesh, kind);
  const auto exact = exact_coefficient(config);
  // Direct runs need some coefficient; with measured data none is used.
  const CoefficientFunction forward = exact.value_or(CoefficientFunction::zero());

  // name -> contents, in write order
  std::vector<std::pair<std::string, std::string>> outputs;

  for (std::size_t n : config.direct_series_steps) {
    const TimeGrid grid(config.final_time, n);
    const auto traj = run_direct(disc, forward, grid, config.data_scheme);
    const auto series = record_observations(traj, obs);
    require_finite(series, "direct series N=" + std::to_string(n));
    outputs.emplace_back("obs_N" + std::to_string(n) + ".csv",
                         series_csv(grid, series));
    if (config.write_field) {
      std::ostringstream field;
      write_field_csv(field, traj);
      outputs.emplace_back("field_N" + std::to_string(n) + ".csv",
                           field.str());
    }
  }

  std::vector<double> fine_data;
  double final_time = config.final_time;
  // Without methods the run is a plain data generation unless it only asks
  // for direct series.
  const bool wants_data = config.methods.empty()
                              ? config.direct_series_steps.empty()
                              : !config.inverse_steps.empty();
  if (config.observations_file) {
    std::ifstream in(*config.observations_file);
    if (!in) {
      throw ConfigError("time.observations_file",
                        "cannot open " + *config.observations_file);
    }
    auto [grid, series] = read_observations_csv(in);
    final_time = grid.final_time();
    for (std::size_t i = 0; i < config.inverse_steps.size(); ++i) {
      if (grid.steps() % config.inverse_steps[i] != 0) {
        throw ConfigError(
            "time.inverse_steps[" + std::to_string(i) + "]",
            std::to_string(config.inverse_steps[i]) +
                " does not divide the file's " + std::to_string(grid.steps()) +
                " steps");
      }
    }
    fine_data = std::move(series);
  } else if (wants_data && config.data_mode == DataMode::kFine) {
    const TimeGrid grid(config.final_time, config.data_steps);
    const auto traj = run_direct(disc, forward, grid, config.data_scheme);
    fine_data = record_observations(traj, obs, config.noise_level,
                                    config.noise_seed);
    require_finite(fine_data, "observation data");
    outputs.emplace_back("observations.csv", series_csv(grid, fine_data));
    if (config.write_field) {
      std::ostringstream field;
      write_field_csv(field, traj);
      outputs.emplace_back("field.csv", field.str());
    }
  }

  std::vector<Job> jobs;
  for (const auto& method : config.methods) {
    for (std::size_t n : config.inverse_steps) jobs.push_back({method, n});
  }

  auto run_job = [&](const Job& job) {
    const TimeGrid grid(final_time, job.steps);
    std::vector<double> phi;
    if (config.data_mode == DataMode::kFine) {
      phi = subsample(fine_data, job.steps);
    } else {
      const auto traj =
          run_direct(disc, forward, grid, matching_direct_scheme(job.method));
      phi = record_observations(traj, obs, config.noise_level,
                                config.noise_seed);
    }
    if (job.method == "transform") {
      return solve_via_transform(disc, grid, obs, phi).second;
    }
    if (job.method == "nonlinear_implicit") {
      return solve_nonlinear_implicit(disc, grid, obs, phi);
    }
    IdentifyOptions options;
    const auto& init = config.initial_coefficient;
    if (init == "derivative") {
      options.initial = InitialCoefficient::kObservationDerivative;
    } else if (init == "first_order_step") {
      options.initial = InitialCoefficient::kFirstOrderStep;
    } else {
      options.initial = InitialCoefficient::kGiven;
      options.p0 = init == "exact" ? (*exact)(0.0) : *parse_number(init);
    }
    return identify(disc, grid, parse_scheme(job.method), obs, phi, options);
  };

  std::vector<JobResult> results(jobs.size());
  {
    const unsigned workers = std::max(
        1u, std::min<unsigned>(threads == 0 ? std::thread::hardware_concurrency()
                                            : threads,
                               static_cast<unsigned>(jobs.size())));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next++; i < jobs.size(); i = next++) {
        try {
          results[i].result = run_job(jobs[i]);
        } catch (...) {
          results[i].error = std::current_exception();
        }
      }
    };
    std::vector<std::jthread> pool;
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
  }
  for (const auto& r : results) {
    if (r.error) std::rethrow_exception(r.error);
  }

  ExperimentReport report;
  const bool single_method = config.methods.size() == 1;
  std::map<std::string, std::pair<std::size_t, double>> previous;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& job = jobs[i];
    const auto& res = *results[i].result;
    const std::string tag = job.method + " N=" + std::to_string(job.steps);
    require_finite(res.p_series, tag);
    for (const auto& d : res.diagnostics) {
      require_finite(std::array{d.w_functional, d.residual}, tag);
    }

    const TimeGrid& grid = res.trajectory.grid;
    SummaryRow row;
    row.method = job.method;
    row.steps = job.steps;
    row.tau = grid.tau();
    if (exact) {
      const double e =
          max_error(res.p_series, grid, *exact, config.error_windows);
      row.max_error = e;
      if (auto it = previous.find(job.method); it != previous.end()) {
        row.observed_order = observed_order(
            it->second.second, e,
            static_cast<double>(job.steps) /
                static_cast<double>(it->second.first));
      }
      previous[job.method] = {job.steps, e};
      if (config.sign_change_window) {
        row.sign_changes = count_sign_changes(res.p_series, grid, *exact,
                                              *config.sign_change_window);
      }
    }
    if (job.method != "transform" && !res.diagnostics.empty()) {
      double m = std::abs(res.diagnostics[0].w_functional);
      for (const auto& d : res.diagnostics) {
        m = std::min(m, std::abs(d.w_functional));
      }
      row.min_abs_w_functional = m;
    }
    report.rows.push_back(row);

    std::ostringstream csv_out;
    write_identification_csv(csv_out, res, exact ? &*exact : nullptr);
    const std::string file =
        single_method ? "p_recovered_N" + std::to_string(job.steps) + ".csv"
                      : "p_recovered_" + job.method + "_N" +
                            std::to_string(job.steps) + ".csv";
    outputs.emplace_back(file, csv_out.str());
  }

  if (!report.rows.empty()) {
    std::ostringstream summary;
    summary << "method,steps,tau,max_error,observed_order,sign_changes,"
               "min_abs_w_functional\n";
    for (const auto& r : report.rows) {
      summary << r.method << ',' << r.steps << ',' << csv::format(r.tau) << ','
              << (r.max_error ? csv::format(*r.max_error) : "") << ','
              << (r.observed_order ? csv::format(*r.observed_order) : "")
              << ','
              << (r.sign_changes ? std::to_string(*r.sign_changes) : "")
              << ','
              << (r.min_abs_w_functional
                      ? csv::format(*r.min_abs_w_functional)
                      : "")
              << '\n';
    }
    outputs.emplace_back("summary.csv", summary.str());
  }

  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  nlohmann::ordered_json manifest;
  manifest["tool"] = "coefid";
  manifest["version"] = COEFID_VERSION;
  manifest["experiment"] = config.name;
  const std::string config_yaml = to_yaml(config);
  manifest["config"] = config_yaml;
  manifest["config_sha256"] = sha256_hex(config_yaml);
  manifest["mesh"] = {{"nodes", disc.mesh.num_nodes()},
                      {"triangles", disc.mesh.num_triangles()},
                      {"min_angle_degrees", disc.mesh.min_angle_degrees()}};
  manifest["outputs"] = nlohmann::ordered_json::array();
  for (const auto& [name, contents] : outputs) {
    const fs::path path = fs::path(out_dir) / name;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InvalidInput("cannot write " + path.string());
    f << contents;
    manifest["outputs"].push_back({{"file", name},
                                   {"bytes", contents.size()},
                                   {"sha256", sha256_hex(contents)}});
    report.files.push_back(name);
  }
  {
    std::ofstream f(fs::path(out_dir) / "manifest.json", std::ios::binary);
    f << manifest.dump(2) << '\n';
  }
  report.files.push_back("manifest.json");
  return report;
}

}  // namespace coefid
