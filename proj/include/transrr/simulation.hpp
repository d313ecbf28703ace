#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "transrr/dataset.hpp"
#include "transrr/estimator.hpp"
#include "transrr/risk.hpp"

namespace transrr {

/// Synthetic design family. Case I: lambda = 1, gaussian errors (sigma 1
/// target / 2 source). Case II: lambda ~ Unif(0, sqrt(3)), Cauchy errors
/// (scale 1 / 2). Case III: half the rows from each (extra row to the
/// Case-I block when the count is odd).
struct CaseSpec {
  std::string case_name = "I";  // "I" | "II" | "III"
  int n = 0;
  int p = 0;
  int n1 = 0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct CoefficientDesign {
  enum class Mode { diffuse_table1, crossover } mode = Mode::diffuse_table1;
  double c_d = 0.0;  // crossover only: ||delta0|| = exp(c_d)
  Eigen::VectorXd beta0;
  Eigen::VectorXd w0;
};

/// diffuse_table1: beta0 = beta*/sqrt(n), w0 = w*/sqrt(n), entries of
/// beta*, w* iid Unif(0,1) drawn from the design seed.
CoefficientDesign make_diffuse_design(const CaseSpec& spec);

/// crossover: beta0 = beta*/||beta*||, delta0 = exp(c_d) 1_p / sqrt(p),
/// w0 = beta0 - delta0 (same beta* for every c_d).
CoefficientDesign make_crossover_design(const CaseSpec& spec, double c_d);

/// Fresh (source, target) draw for one replicate; pure in (spec, design, rep).
void generate_case(const CaseSpec& spec, const CoefficientDesign& design, std::uint64_t rep,
                   Dataset& source, Dataset& target);

struct ReplicateResult {
  int rep_index = 0;
  double sq_error = 0.0;        // ||beta_hat - beta0||^2
  double rel_error = 0.0;       // sq_error / ||beta0||^2
  double realized_discrepancy = 0.0;  // ||beta0 - w_hat||
  double theory_r2 = 0.0;       // conditional r_rho^2 at the realized discrepancy
  bool ok = false;
  std::string error;
};

struct ValidationRun {
  std::vector<ReplicateResult> replicates;  // indexed by rep
  double mean_sq = 0.0;
  double sd_sq = 0.0;
  double theory_r2 = 0.0;  // mean of per-replicate conditional theory values
  int failures = 0;
};

struct ValidationOptions {
  double tau = 1.0;
  double tau1 = 1.0;
  LossModel loss;
  int reps = 200;
  int threads = 1;
  bool with_theory = true;
};

/// Table-1 protocol: coefficients frozen from the design seed, fresh samples
/// per replicate, Trans-RR with (tau1, tau), theory solved per replicate at
/// the realized discrepancy. Throws if more than 5% of replicates fail.
ValidationRun run_validation(const CaseSpec& spec, const ValidationOptions& opt);

struct CrossoverCell {
  double c_d = 0.0;
  double h = 0.0;  // exp(c_d)
  std::string method;
  double median_rel = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double tau = 0.0;   // CV-selected ridge weight (stage-2 tau for trans-rr)
  double tau1 = 0.0;  // CV-selected stage-1 tau (trans-rr only)
};

struct CrossoverRun {
  std::vector<ReplicateResult> replicates;  // one row per (c_d, method, rep)
  std::vector<std::string> replicate_method;
  std::vector<double> replicate_cd;
  std::vector<CrossoverCell> summary;
  int failures = 0;
};

struct CrossoverOptions {
  LossModel loss;
  std::vector<double> c_d_grid = {-2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0};
  std::vector<double> tau_grid;  // empty: default_tau_grid()
  int folds = 5;
  int reps = 100;
  int threads = 1;
};

/// Discrepancy sweep comparing single-rr / trans-rr / pooled-rr with
/// CV-selected ridge weights (selected once per (c_d, method) on a dedicated
/// tuning replicate, then frozen across the evaluation replicates).
CrossoverRun run_crossover(const CaseSpec& spec, const CrossoverOptions& opt);

struct CurveRow {
  std::string case_name;
  double tau = 0.0;
  double discrepancy = 0.0;
  RiskSolution solution;
  bool ok = false;
  std::string error;
};

/// Long-format theoretical curves: one risk_curve per tau value.
std::vector<CurveRow> run_curves(const std::string& case_name, StudyRole role, double kappa,
                                 const LossModel& loss, const std::vector<double>& tau_list,
                                 const std::vector<double>& d_grid);

/// Population spec matching a simulation case at the given aspect ratio.
PopulationSpec case_population(const std::string& case_name, StudyRole role, double kappa,
                               double tau, double discrepancy, const LossModel& loss);

}  // namespace transrr
