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


#include <gtest/gtest.h>
#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "coefid/csv.hpp"
#include "coefid/experiment.hpp"
#include <nlohmann/json.hpp>

namespace coefid {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() /
                   ("coefid_experiment_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  return dir;
}

std::string config_error_path(const std::string& yaml) {
  try {
    validate(parse_config(yaml));
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "<none>";
}

// Small and fast: coarse mesh, short series.
ExperimentConfig small_config() {
  ExperimentConfig c;
  c.edge_length = 0.15;
  c.data_steps = 120;
  c.inverse_steps = {20, 40};
  c.methods = {"first_order", "crank_nicolson"};
  return c;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) rows.push_back(csv::split(line));
  return rows;
}

TEST(Config, EmptyDocumentGivesDefaults) {
  const auto c = parse_config("");
  EXPECT_EQ(c.coefficient, "switched_ramp");
  EXPECT_DOUBLE_EQ(c.final_time, 0.1);
  EXPECT_EQ(c.data_steps, 1000u);
  EXPECT_NO_THROW(validate(c));
}

TEST(Config, RoundTripThroughYaml) {
  for (const auto& name : preset_names()) {
    auto c = preset(name);
    c.observation_point = Point{0.7, 0.4};
    c.coefficient_table = {{0.0, 1.0}, {0.1, 2.0}};
    const auto back = parse_config(to_yaml(c));
    EXPECT_EQ(to_yaml(back), to_yaml(c)) << name;
    EXPECT_EQ(back.inverse_steps, c.inverse_steps);
    EXPECT_EQ(back.methods, c.methods);
    EXPECT_EQ(back.error_windows, c.error_windows);
  }
}

TEST(Config, FieldPathsInErrors) {
  EXPECT_EQ(config_error_path("domain:\n  bogus: 1\n"), "domain.bogus");
  EXPECT_EQ(config_error_path("extra: 1\n"), "extra");
  EXPECT_EQ(config_error_path("time:\n  data_steps: many\n"), "time.data_steps");
  EXPECT_EQ(config_error_path("time:\n  data_steps: 999\n  inverse_steps: [100]\n"),
            "time.inverse_steps[0]");
  EXPECT_EQ(config_error_path("time:\n  final_time: 0\n"), "time.final_time");
  EXPECT_EQ(config_error_path("problem:\n  diffusion: banana\n"),
            "problem.diffusion");
  EXPECT_EQ(config_error_path("coefficient:\n  kind: eq99\n"), "coefficient.kind");
  EXPECT_EQ(config_error_path("coefficient:\n  kind: table\n"), "coefficient.table");
  EXPECT_EQ(config_error_path("methods: [first_order, magic]\n"), "methods[1]");
  EXPECT_EQ(config_error_path("initial_coefficient: guess\n"), "initial_coefficient");
  EXPECT_EQ(config_error_path("observation:\n  point: [5, 5]\n"), "observation.point");
  EXPECT_EQ(config_error_path("observation:\n  kind: line\n"), "observation.kind");
  EXPECT_EQ(config_error_path("noise:\n  level: -1\n"), "noise.level");
  EXPECT_EQ(config_error_path("analysis:\n  error_windows: [[0.5, 0.2]]\n"),
            "analysis.error_windows[0]");
  EXPECT_EQ(config_error_path("domain:\n  polygon: [[0,0],[1,0],[2,0]]\n"),
            "domain.polygon");
  EXPECT_EQ(config_error_path("domain:\n  edge_length: -0.1\n"), "domain.edge_length");
  EXPECT_EQ(config_error_path("coefficient:\n  kind: unknown\n"), "coefficient.kind");
  EXPECT_EQ(config_error_path("time: [1, 2\n"), "<config>");
}

TEST(Config, NamedExpressionsResolve) {
  const auto c = parse_config(
      "problem:\n  diffusion: ramp_x\n  boundary_coeff: 2.5\n  source: decaying_bump\n"
      "  initial: bump\nobservation:\n  kind: integral\n  weight: x\n");
  EXPECT_NO_THROW(validate(c));
}

TEST(Presets, AllValidate) {
  for (const auto& name : preset_names()) EXPECT_NO_THROW(validate(preset(name)));
  EXPECT_THROW(preset("fig3"), InvalidInput);
  const auto fig4 = preset("fig4");
  EXPECT_EQ(fig4.inverse_steps, (std::vector<std::size_t>{100, 250, 500}));
  EXPECT_EQ(fig4.data_steps, 1000u);
  EXPECT_EQ(fig4.data_scheme, DirectScheme::kImplicit);
  EXPECT_EQ(preset("fig5").methods, std::vector<std::string>{"crank_nicolson"});
}

TEST(Sha256, KnownVector) {
  EXPECT_EQ(sha256_hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(RunExperiment, WritesOutputsAndManifest) {
  const auto dir = scratch("outputs");
  const auto report = run_experiment(small_config(), dir.string(), 2);
  ASSERT_EQ(report.rows.size(), 4u);
  EXPECT_EQ(report.files.back(), "manifest.json");
  for (const auto& f : {"observations.csv", "summary.csv",
                        "p_recovered_first_order_N20.csv",
                        "p_recovered_crank_nicolson_N40.csv"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  ASSERT_EQ(manifest["outputs"].size(), report.files.size() - 1);
  for (const auto& entry : manifest["outputs"]) {
    const auto contents = slurp(dir / entry["file"].get<std::string>());
    EXPECT_EQ(entry["sha256"], sha256_hex(contents));
    EXPECT_EQ(entry["bytes"], contents.size());
  }
  EXPECT_EQ(manifest["config_sha256"], sha256_hex(manifest["config"]));

  const auto rows = read_csv(dir / "summary.csv");
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{
                         "method", "steps", "tau", "max_error", "observed_order",
                         "sign_changes", "min_abs_w_functional"}));
  EXPECT_EQ(rows[1][0], "first_order");
  EXPECT_EQ(rows[1][4], "");  // no coarser grid to compare against
  EXPECT_NE(rows[2][4], "");
}

TEST(RunExperiment, DeterministicAcrossRunsAndThreadCounts) {
  auto c = small_config();
  c.noise_level = 0.01;
  c.noise_seed = 9;
  const auto a = scratch("det_a"), b = scratch("det_b");
  run_experiment(c, a.string(), 1);
  run_experiment(c, b.string(), 4);
  for (const auto& entry : fs::directory_iterator(a)) {
    EXPECT_EQ(slurp(entry.path()), slurp(b / entry.path().filename()))
        << entry.path().filename();
  }
}

TEST(RunExperiment, FailureWritesNothing) {
  auto c = small_config();
  c.initial = "0";
  c.coefficient = "zero";
  const auto dir = scratch("failure");
  EXPECT_THROW(run_experiment(c, dir.string()), DegenerateObservation);
  EXPECT_FALSE(fs::exists(dir));
}

TEST(RunExperiment, MatchedZeroCoefficientIsExact) {
  auto c = small_config();
  c.coefficient = "zero";
  c.data_mode = DataMode::kMatched;
  c.methods = {"first_order", "crank_nicolson", "hybrid_implicit", "transform",
               "nonlinear_implicit"};
  c.initial_coefficient = "exact";
  const auto report = run_experiment(c, scratch("zero").string(), 2);
  for (const auto& r : report.rows) {
    ASSERT_TRUE(r.max_error.has_value());
    EXPECT_LE(*r.max_error, 1e-6 / r.tau) << r.method << " " << r.steps;
    if (r.observed_order) EXPECT_TRUE(std::isfinite(*r.observed_order));
  }
}

TEST(RunExperiment, MeasuredDataWithUnknownCoefficient) {
  auto gen = small_config();
  gen.methods.clear();
  gen.inverse_steps.clear();
  const auto data_dir = scratch("measured_data");
  run_experiment(gen, data_dir.string());

  ExperimentConfig c = small_config();
  c.coefficient = "unknown";
  c.observations_file = (data_dir / "observations.csv").string();
  c.methods = {"first_order"};
  const auto dir = scratch("measured");
  const auto report = run_experiment(c, dir.string());
  ASSERT_EQ(report.rows.size(), 2u);
  EXPECT_FALSE(report.rows[0].max_error.has_value());
  const auto rows = read_csv(dir / "p_recovered_N20.csv");
  EXPECT_EQ(rows[0].size(), 4u);  // no p_exact column
  EXPECT_EQ(rows.size(), 21u);

  c.inverse_steps = {7};
  EXPECT_THROW(run_experiment(c, scratch("measured_bad").string()), ConfigError);
}

TEST(RunExperiment, DirectSeriesOnly) {
  auto c = small_config();
  c.methods.clear();
  c.inverse_steps.clear();
  c.direct_series_steps = {10, 30};
  c.write_field = true;
  const auto dir = scratch("series");
  const auto report = run_experiment(c, dir.string());
  EXPECT_TRUE(report.rows.empty());
  EXPECT_TRUE(fs::exists(dir / "obs_N10.csv"));
  EXPECT_TRUE(fs::exists(dir / "field_N30.csv"));
  EXPECT_FALSE(fs::exists(dir / "observations.csv"));
  EXPECT_FALSE(fs::exists(dir / "summary.csv"));
}

TEST(RunExperiment, IntegralObservationAndOracleMethods) {
  auto c = small_config();
  c.coefficient = "smooth_rational";
  c.point_observation = false;
  c.methods = {"transform", "nonlinear_implicit", "hybrid_implicit"};
  const auto report = run_experiment(c, scratch("integral").string(), 3);
  ASSERT_EQ(report.rows.size(), 6u);
  for (std::size_t i = 0; i < report.rows.size(); i += 2) {
    EXPECT_LT(*report.rows[i + 1].max_error, *report.rows[i].max_error)
        << report.rows[i].method;
  }
  EXPECT_FALSE(report.rows[0].min_abs_w_functional.has_value());
  EXPECT_TRUE(report.rows[2].min_abs_w_functional.has_value());
}

TEST(RunExperiment, PresetAndConfigAreEquivalent) {
  const auto from_preset = scratch("fig4_preset"), from_yaml = scratch("fig4_yaml");
  run_experiment(preset("fig4"), from_preset.string(), 3);
  run_experiment(parse_config(to_yaml(preset("fig4"))), from_yaml.string(), 3);
  EXPECT_EQ(slurp(from_preset / "summary.csv"), slurp(from_yaml / "summary.csv"));
  const auto rows = read_csv(from_preset / "summary.csv");
  ASSERT_EQ(rows.size(), 4u);
  const double e100 = std::stod(rows[1][3]), e250 = std::stod(rows[2][3]),
               e500 = std::stod(rows[3][3]);
  EXPECT_GT(e100, e250);
  EXPECT_GT(e250, e500);
}

TEST(RunExperiment, Fig2SeriesDecay) {
  const auto dir = scratch("fig2");
  run_experiment(preset("fig2"), dir.string());
  for (const auto& n : {"20", "50", "100", "1000"}) {
    const auto rows = read_csv(dir / (std::string("obs_N") + n + ".csv"));
    ASSERT_GE(rows.size(), 3u);
    EXPECT_NEAR(std::stod(rows[1][1]), 1.0, 1e-8);
    for (std::size_t i = 2; i < rows.size(); ++i) {
      EXPECT_LT(std::stod(rows[i][1]), std::stod(rows[i - 1][1]) + 1e-12);
    }
  }
}

}  // namespace
}  // namespace coefid
