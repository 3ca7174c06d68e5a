#pragma once

// Plain JSON document mirroring the simulator, test, Monte Carlo and window
// settings. Every key is optional; unknown keys are rejected.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "betaconst/constancy_test.hpp"
#include "betaconst/io.hpp"
#include "betaconst/mc.hpp"
#include "betaconst/sim.hpp"

namespace betaconst::cli {

struct CirSettings {
  double kappa = 0.03;
  double theta = 1.0;
  double xi = 0.18;
};

struct SimSettings {
  int days = 5;
  int steps_per_day = 38;
  int substeps = 10;
  CirSettings vol_x{};
  CirSettings vol_y{};
  std::string beta = "constant";  // constant | cir | step
  double beta_value = 1.0;
  CirSettings beta_cir{};
  std::optional<double> beta_initial;
  double step_before = 1.0;
  double step_after = 2.0;
  double step_time = 0.5;
  std::string jumps = "levy";  // levy | prose | none | custom
  double jump_intensity_x = 1.6;
  double jump_intensity_y = 1.6;
  double laplace_rate = 2.0;
  std::optional<double> v0;
  std::optional<double> vtilde0;
  double drift_x = 0.0;
  double drift_y = 0.0;
  std::string format = "prices";  // prices | returns
  std::string start_date = "2000-01-03";
};

struct TestSettings {
  int k_n = 19;
  std::string beta = "estimated";  // estimated | known
  double beta_value = 1.0;
  std::string truncation = "adaptive";  // adaptive | fixed | none
  double truncation_c = 4.0;
  double alpha_x = 0.5;
  double alpha_y = 0.5;
  double varpi = 0.49;
  std::vector<double> levels{0.10, 0.05, 0.01};
  double guard_floor = 1e-12;
  std::string guard_policy = "skip";  // skip | error
  double max_skip_fraction = 0.10;
  double ci_level = 0.95;
};

struct McSettings {
  int replications = 500;
  std::vector<int> window_lengths{5, 22, 66};
  std::string hypothesis = "both";  // null | alternative | both
};

struct WindowSettings {
  std::string scheme = "weekly";  // weekly | monthly | quarterly | fixed
  int days = 5;
  bool calendar = false;
};

struct CliConfig {
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  SimSettings sim{};
  TestSettings test{};
  McSettings mc{};
  WindowSettings window{};
};

/// Overlays the keys present in `doc` onto `base`. Throws ConfigError on
/// unknown keys or wrongly typed values.
void merge_json(CliConfig& base, const nlohmann::json& doc);

CliConfig load_config_file(const std::string& path);

nlohmann::json to_json(const CliConfig& cfg);

SimConfig make_sim_config(const SimSettings& s, std::uint64_t seed);
TestConfig make_test_config(const TestSettings& t);
McDesign make_mc_design(const CliConfig& cfg, Hypothesis h, std::uint64_t seed);
WindowPlan make_window_plan(const WindowSettings& w);

}  // namespace betaconst::cli
