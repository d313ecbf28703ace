#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "transrr/estimator.hpp"
#include "transrr/loss.hpp"
#include "transrr/risk.hpp"
#include "transrr/simulation.hpp"

namespace transrr {

/// Run descriptions parsed from a single JSON document with a "command"
/// discriminator. Unknown keys are rejected; serialization emits every field
/// so parse -> serialize -> parse is the identity.

struct CvConfig {
  bool enabled = false;
  int folds = 5;
  std::vector<double> grid;  // empty: default_tau_grid()
};

struct FitConfig {
  std::string method = "single-rr";  // single-rr | trans-rr | pooled-rr
  std::string target_csv;
  std::string source_csv;  // trans-rr / pooled-rr
  LossModel loss;
  double tau = 1.0;
  double tau1 = 1.0;
  double grad_tol = 0.0;
  int max_iter = 500;
  CvConfig cv;
  std::uint64_t seed = 0;
  std::string out = "out";
};

struct PopulationConfig {
  double kappa = 1.0;
  double tau = 1.0;
  double discrepancy = 0.0;
  LossModel loss;
  std::string case_name;  // "I"|"II"|"III"; empty when components are explicit
  std::string role = "target";
  std::vector<MixtureComponent> components;
  bool allow_unbounded_psi = false;
  bool multi_start = false;

  PopulationSpec to_spec() const;
};

struct RiskConfig {
  PopulationConfig population;
  std::uint64_t seed = 0;
  std::string out = "out";
};

struct CurveConfig {
  PopulationConfig population;
  std::vector<double> tau_list;
  std::vector<double> d_grid;
  std::uint64_t seed = 0;
  std::string out = "out";
};

struct SimulateConfig {
  std::string mode = "validation";  // validation | crossover
  std::string case_name = "I";
  int n = 100;
  int p = 100;
  int n1 = 200;
  int reps = 200;
  std::uint64_t seed = 1;
  LossModel loss;
  double tau = 1.0;
  double tau1 = 1.0;
  std::vector<double> c_d_grid = {-2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0};
  std::vector<double> cv_grid;  // empty: default_tau_grid()
  int folds = 5;
  bool with_theory = true;
  int threads = 0;  // 0: hardware concurrency
  std::string out = "out";
};

struct BenchConfig {
  int n = 400;
  int p = 200;
  std::uint64_t seed = 1;
  std::string out;  // empty: stdout only
};

struct RunConfig {
  std::string command;
  std::variant<FitConfig, RiskConfig, CurveConfig, SimulateConfig, BenchConfig> payload;
};

RunConfig parse_config_text(const std::string& json_text);
RunConfig load_config(const std::string& path);
std::string serialize_config(const RunConfig& config);

}  // namespace transrr
