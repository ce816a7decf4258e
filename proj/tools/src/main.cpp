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

// coefid command line. Exit status: 0 success, 1 invalid input or config,
// 2 numerical failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "coefid/experiment.hpp"

namespace {

constexpr int kExitInvalid = 1;
constexpr int kExitNumerical = 2;

struct Globals {
  std::string out;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
};

// Flags shared by the subcommands that build a problem.
struct ProblemFlags {
  std::optional<double> edge_length;
  std::vector<double> point;
  std::optional<std::string> coefficient;
  std::optional<double> final_time;
  std::optional<double> noise;
};

void add_problem_flags(CLI::App* cmd, ProblemFlags& f) {
  cmd->add_option("--edge-length", f.edge_length, "Target mesh edge length");
  cmd->add_option("--point", f.point, "Observation point x y")
      ->expected(2);
  cmd->add_option("--coefficient", f.coefficient,
                  "switched_ramp | smooth_rational | zero | unknown");
  cmd->add_option("--final-time", f.final_time, "Final time T");
  cmd->add_option("--noise", f.noise, "Relative observation noise level");
}

void apply(const ProblemFlags& f, const Globals& g,
           coefid::ExperimentConfig& c) {
  if (f.edge_length) c.edge_length = *f.edge_length;
  if (f.point.size() == 2) c.observation_point = coefid::Point{f.point[0], f.point[1]};
  if (f.coefficient) c.coefficient = *f.coefficient;
  if (f.final_time) c.final_time = *f.final_time;
  if (f.noise) c.noise_level = *f.noise;
  if (g.seed) c.noise_seed = *g.seed;
}

void print_report(const coefid::ExperimentReport& report,
                  const std::string& out) {
  for (const auto& r : report.rows) {
    std::cout << r.method << " N=" << r.steps;
    if (r.max_error) std::cout << " max_error=" << *r.max_error;
    if (r.observed_order) std::cout << " order=" << *r.observed_order;
    if (r.sign_changes) std::cout << " sign_changes=" << *r.sign_changes;
    std::cout << '\n';
  }
  std::cout << "wrote " << report.files.size() << " files to " << out << '\n';
}

std::string out_dir(const Globals& g, const std::string& name) {
  return g.out.empty() ? (std::filesystem::path("out") / name).string()
                       : g.out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Identification of a time-dependent reaction coefficient"};
  app.require_subcommand(1);
  Globals globals;
  app.add_option("--out", globals.out, "Output directory");
  app.add_option("--seed", globals.seed, "Noise seed");
  app.add_option("--threads", globals.threads,
                 "Worker threads (0 = hardware concurrency)");

  // mesh
  auto* mesh_cmd = app.add_subcommand("mesh", "Triangulate the domain");
  double mesh_h = 0.034;
  std::uint64_t mesh_seed = 1;
  mesh_cmd->add_option("--edge-length", mesh_h, "Target edge length");
  mesh_cmd->add_option("--mesh-seed", mesh_seed, "Lattice jitter seed");

  // direct
  auto* direct_cmd =
      app.add_subcommand("direct", "Simulate the forward problem and record "
                                   "the observation");
  ProblemFlags direct_flags;
  std::size_t direct_steps = 1000;
  std::string direct_scheme = "implicit";
  add_problem_flags(direct_cmd, direct_flags);
  direct_cmd->add_option("--steps", direct_steps, "Time steps");
  direct_cmd->add_option("--scheme", direct_scheme,
                         "implicit | crank_nicolson");

  // identify
  auto* identify_cmd =
      app.add_subcommand("identify", "Recover p(t) from an observation CSV");
  ProblemFlags identify_flags;
  std::string data_file;
  std::vector<std::size_t> identify_steps;
  std::vector<std::string> identify_methods{"first_order"};
  std::string identify_init = "derivative";
  add_problem_flags(identify_cmd, identify_flags);
  identify_cmd->add_option("--data", data_file, "Observation CSV (t,value)")
      ->required();
  identify_cmd->add_option("--steps", identify_steps,
                           "Inverse grids (default: the data grid)");
  identify_cmd->add_option("--method", identify_methods,
                           "first_order | crank_nicolson | hybrid_implicit | "
                           "transform | nonlinear_implicit");
  identify_cmd->add_option("--initial", identify_init,
                           "derivative | first_order_step | exact | <number>");

  // run
  auto* run_cmd = app.add_subcommand("run", "Run a named experiment preset");
  std::string preset_name;
  std::optional<std::string> run_coefficient;
  run_cmd->add_option("preset", preset_name, "Preset name")->required();
  run_cmd->add_option("--coefficient", run_coefficient,
                      "Override the coefficient kind");

  // run-config
  auto* config_cmd =
      app.add_subcommand("run-config", "Run an experiment from a YAML file");
  std::string config_path;
  config_cmd->add_option("path", config_path, "Config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  try {
    if (mesh_cmd->parsed()) {
      coefid::TriangulateOptions options;
      options.seed = mesh_seed;
      const auto mesh = coefid::triangulate(coefid::PolygonSpec::trapezoid(),
                                            mesh_h, options);
      const std::string dir = out_dir(globals, "mesh");
      std::filesystem::create_directories(dir);
      const auto path = (std::filesystem::path(dir) / "mesh.txt").string();
      coefid::save_mesh(path, mesh);
      std::cout << "nodes=" << mesh.num_nodes()
                << " triangles=" << mesh.num_triangles()
                << " min_angle=" << mesh.min_angle_degrees() << "\nwrote "
                << path << '\n';
      return 0;
    }

    coefid::ExperimentConfig config;
    std::string name;
    if (direct_cmd->parsed()) {
      config.name = name = "direct";
      apply(direct_flags, globals, config);
      config.data_steps = direct_steps;
      config.data_scheme = coefid::parse_direct_scheme(direct_scheme);
      config.inverse_steps.clear();
      config.methods.clear();
    } else if (identify_cmd->parsed()) {
      config.name = name = "identify";
      apply(identify_flags, globals, config);
      config.observations_file = data_file;
      config.methods = identify_methods;
      config.initial_coefficient = identify_init;
      if (!identify_flags.coefficient) config.coefficient = "unknown";
      if (identify_steps.empty()) {
        std::ifstream in(data_file);
        if (!in) throw coefid::InvalidInput("cannot open " + data_file);
        identify_steps = {coefid::read_observations_csv(in).first.steps()};
      }
      config.inverse_steps = identify_steps;
    } else if (run_cmd->parsed()) {
      config = coefid::preset(preset_name);
      name = preset_name;
      if (run_coefficient) config.coefficient = *run_coefficient;
      if (globals.seed) config.noise_seed = *globals.seed;
    } else {
      config = coefid::load_config(config_path);
      name = config.name;
      if (globals.seed) config.noise_seed = *globals.seed;
    }
    const std::string dir = out_dir(globals, name);
    const auto report = coefid::run_experiment(config, dir, globals.threads);
    print_report(report, dir);
    return 0;
  } catch (const coefid::InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
}
