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

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "coefid/analysis.hpp"
#include "coefid/direct_solver.hpp"
#include "coefid/errors.hpp"
#include "coefid/inverse_solver.hpp"
#include "coefid/mesh.hpp"

namespace coefid {

/// Config validation failure; the message starts with the offending field
/// path (e.g. "time.inverse_steps[0]").
class ConfigError : public InvalidInput {
 public:
  ConfigError(const std::string& path, const std::string& what)
      : InvalidInput(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

/// Where the inverse runs get their observation series.
enum class DataMode {
  /// One direct run on the data grid, subsampled to each inverse grid.
  kFine,
  /// A direct run on each inverse grid with the method's matching scheme.
  kMatched,
};

struct ExperimentConfig {
  std::string name = "custom";

  std::vector<Point> polygon = PolygonSpec::trapezoid().vertices();
  double edge_length = 0.034;
  std::uint64_t mesh_seed = 1;

  // Numbers or names from the expression registry.
  std::string diffusion = "1";
  std::string boundary_coeff = "10";
  std::string source = "0";
  std::string initial = "1";

  /// switched_ramp | smooth_rational | zero | table | unknown. "unknown" is
  /// only meaningful with an observations file and disables error columns.
  std::string coefficient = "switched_ramp";
  std::vector<std::array<double, 2>> coefficient_table;

  double final_time = 0.1;
  std::size_t data_steps = 1000;
  DirectScheme data_scheme = DirectScheme::kImplicit;
  DataMode data_mode = DataMode::kFine;
  std::vector<std::size_t> inverse_steps = {100, 250, 500};
  /// Measured `t,value` series to invert instead of simulated data. The
  /// final time and data steps are then taken from the file.
  std::optional<std::string> observations_file;

  /// Scheme names plus "transform" and "nonlinear_implicit".
  std::vector<std::string> methods = {"first_order"};
  /// derivative | first_order_step | exact | <number>
  std::string initial_coefficient = "derivative";

  bool point_observation = true;
  std::optional<Point> observation_point;  // default: polygon centroid
  std::string observation_weight = "mean";

  double noise_level = 0.0;
  std::uint64_t noise_seed = 42;

  std::vector<Window> error_windows = {{0.0, 1.0}};
  std::optional<Window> sign_change_window;

  std::vector<std::size_t> direct_series_steps;
  bool write_field = false;
};

/// Parses the YAML config format documented in docs/config.md. Unknown keys
/// are rejected. Throws ConfigError.
ExperimentConfig parse_config(const std::string& yaml_text);
ExperimentConfig load_config(const std::string& path);
/// Round-trippable YAML rendering.
std::string to_yaml(const ExperimentConfig& config);

/// Throws ConfigError naming the first invalid field.
void validate(const ExperimentConfig& config);

/// fig2 | fig4 | fig5 | fig6 | fig7 | convergence_table
ExperimentConfig preset(const std::string& name);
std::vector<std::string> preset_names();

struct SummaryRow {
  std::string method;
  std::size_t steps = 0;
  double tau = 0.0;
  /// Absent when the exact coefficient is unknown.
  std::optional<double> max_error;
  std::optional<double> observed_order;
  std::optional<std::size_t> sign_changes;
  /// Smallest |r.w| met along the run; absent for the transform route.
  std::optional<double> min_abs_w_functional;
};

struct ExperimentReport {
  std::vector<SummaryRow> rows;
  /// Written files relative to the output directory, manifest last.
  std::vector<std::string> files;
};

/// Runs every (method, inverse grid) pair, using up to `threads` workers,
/// and writes CSV outputs plus manifest.json into `out_dir`. Outputs are
/// written only after every run has succeeded.
ExperimentReport run_experiment(const ExperimentConfig& config,
                                const std::string& out_dir,
                                unsigned threads = 1);

std::string sha256_hex(const std::string& bytes);

}  // namespace coefid
