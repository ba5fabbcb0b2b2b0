#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "cgpdf/triad.hpp"

namespace cgpdf::app {

using json = nlohmann::json;

// Every accepted key with its default. A null default accepts a number or
// null (null keeps the preset value).
json default_config();

// Overlays `user` on the defaults. Unknown keys and type mismatches throw
// ConfigError naming the dotted path.
json merge_config(const json& user);

// Reads and merges a JSON file; an empty path yields the defaults.
json load_config(const std::string& path);

// "a.b.c=VALUE": VALUE is parsed as JSON when possible, else taken as a
// string. The key must exist.
void apply_override(json& cfg, std::string_view assignment);

struct ModelConfig {
  std::string preset;
  std::string regime;
  TriadParams params;
  Vec uI0, uII0;
};

struct SimulationConfig {
  Index L = 500;
  double dt = 1e-3;
  double t_end = 20.0;
  Index store_stride = 100;
  double blowup_cap = 1e8;
  Index export_samples = 10;
};

struct FilterConfig {
  std::string prior = "ensemble";  // or "gaussian"
  Vec prior_mean;
  Mat prior_cov;
  double delta = 1e-6;
  double eig_floor = 1e-10;
  bool floor_psd = true;
};

struct DensityConfig {
  std::vector<double> t_eval;
  std::string bandwidth = "scaling";  // or "silverman"
  double kappa = 1.0;
  Index grid_points = 100;
  Index hidden_points = 200;
  double half_width = 5.0;
  std::vector<std::string> estimators;
  std::vector<std::pair<std::string, std::string>> panels;
};

struct ReferenceConfig {
  Index L = 1000000;
  double dt = 1e-3;  // null in the config: simulation.dt
  double kappa = 1.0;
  std::uint64_t seed = 0;
};

struct CompareConfig {
  std::vector<Index> Ls;
  double t_eval = 1.0;
  Index repeats = 20;
  Index grid_points = 40;
  Index hidden_points = 200;
  double half_width = 5.0;
  bool direct = true;
  bool hidden = true;
};

struct DiagnoseConfig {
  std::vector<double> checkpoints;
  double v = 1.0;
  int m = 1;
  double R0 = 1e-2;
  double R0_prime = 1.0;
  double horizon = 10.0;
  Index record_stride = 100;
  Index energy_points = 1000;
  Index dissipativity_points = 2000;
  double radius = 50.0;
};

struct RunConfig {
  json resolved;
  ModelConfig model;
  SimulationConfig simulation;
  FilterConfig filter;
  DensityConfig density;
  ReferenceConfig reference;
  CompareConfig compare;
  DiagnoseConfig diagnose;
  std::uint64_t seed = 1;
  int threads = 0;
  std::string out_dir = "out";
};

// Validates a merged config and converts it to typed form.
RunConfig parse_config(const json& merged);

// Names of the joint coordinates in [u_I; u_II] order.
std::vector<std::string> joint_labels(const ModelConfig& m);

}  // namespace cgpdf::app
