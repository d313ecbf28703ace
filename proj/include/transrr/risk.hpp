#pragma once

#include <string>
#include <vector>

#include "transrr/loss.hpp"

namespace transrr {

/// Scalar law for an error or design-scale variable.
struct ScalarDist {
  enum class Kind { point_mass, gaussian, cauchy, uniform } kind = Kind::point_mass;
  double a = 0.0;  // value | sigma | scale | lo
  double b = 0.0;  // unused | unused | unused | hi

  static ScalarDist point_mass(double value) { return {Kind::point_mass, value, 0.0}; }
  static ScalarDist gaussian(double sigma);
  static ScalarDist cauchy(double scale);
  static ScalarDist uniform(double lo, double hi);

  void validate() const;
  std::string name() const;

  /// second moment; throws ModelError for cauchy
  double second_moment() const;
  /// scale proxy used to seed the risk iteration (sigma / scale / (hi-lo)/sqrt(12) / |value|)
  double spread_proxy() const;
};

struct MixtureComponent {
  double weight = 1.0;
  ScalarDist eps;  // error law
  ScalarDist lam;  // design-scale law (lambda)
};

/// Asymptotic problem description for the fixed-point risk system:
/// aspect ratio kappa = lim p/n, ridge weight tau, discrepancy norm D
/// (||beta0 - w_hat|| in the target stage, ||w0|| in the source stage),
/// and a finite mixture of (error, scale) distribution pairs.
struct PopulationSpec {
  double kappa = 1.0;
  double tau = 1.0;
  double discrepancy = 0.0;
  std::vector<MixtureComponent> components;
  LossModel loss;
  bool allow_unbounded_psi = false;  // test override for quadratic_test
  bool multi_start = false;          // 5-start agreement diagnostic

  void validate() const;
};

struct RiskSolution {
  double r = 0.0;         // limit of ||beta_hat - beta0||
  double c = 0.0;         // companion constant, in [0, kappa/tau]
  double residual1 = 0.0; // E1(c,r) - (1 - kappa + tau c)
  double residual2 = 0.0; // kappa E2(c,r) + tau^2 D^2 c^2 - kappa^2 r^2
  int iterations = 0;
};

/// Node-count knobs; defaults follow the production configuration. node_scale
/// multiplies every count (used by the doubling-stability checks).
struct QuadratureConfig {
  int hermite_nodes = 61;        // adaptive ladder 61 -> 121 -> 241 -> ... -> hermite_max
  int hermite_max = 961;
  int cauchy_nodes = 201;        // tan-substitution Gauss-Legendre
  int uniform_nodes = 32;
  int band_nodes = 24;           // Gauss-Legendre on each smoothed-huber blend band
  double node_scale = 1.0;
};

/// E1(c, r) = sum_k w_k E[ (prox(c lam^2 rho))'(eps + r lam Z) ], in [0, 1].
double expectation_E1(const PopulationSpec& spec, double c, double r,
                      const QuadratureConfig& quad = {});

/// E2(c, r) = sum_k w_k E[ c^2 lam^2 psi^2(prox(c lam^2 rho)(eps + r lam Z)) ].
/// This is the rewrite of E[(W - prox)^2 / lam^2] that stays finite at lam = 0.
double expectation_E2(const PopulationSpec& spec, double c, double r,
                      const QuadratureConfig& quad = {});

/// E[(W - prox)^2 / lam^2] evaluated through the difference (not through psi);
/// requires every lam law bounded away from 0. Check-only companion to E2.
double expectation_E2_direct(const PopulationSpec& spec, double c, double r,
                             const QuadratureConfig& quad = {});

/// Solves E1(c,r) = 1 - kappa + tau c  and  kappa E2(c,r) + tau^2 D^2 c^2 = kappa^2 r^2
/// for (r, c). Damped fixed-point iteration on r with the inner c-equation
/// solved by safeguarded bisection/Newton on [0, kappa/tau]; switches to a 2-D
/// damped Newton with finite-difference Jacobian on stall.
RiskSolution solve_risk_system(const PopulationSpec& spec, const QuadratureConfig& quad = {});

/// Source-stage system: identical solver with (kappa1, tau1, D = ||w0||)
/// playing the corresponding roles.
RiskSolution source_risk(const PopulationSpec& spec, const QuadratureConfig& quad = {});

struct CurvePoint {
  double discrepancy = 0.0;
  RiskSolution solution;
  bool ok = false;
  std::string error;
};

/// One solve per grid point, warm-started from the previous point. Per-point
/// failures are recorded and the remaining points still attempted.
std::vector<CurvePoint> risk_curve(const PopulationSpec& spec, const std::vector<double>& d_grid,
                                   const QuadratureConfig& quad = {});

/// Warm-started solve used by the per-replicate theory path.
RiskSolution solve_risk_system_from(const PopulationSpec& spec, double r0, double c0,
                                    const QuadratureConfig& quad = {});

enum class StudyRole { target, source };

/// Mixtures matching the simulation designs: Case I is Gaussian errors with
/// unit scales (sigma 1 target / 2 source); Case II is Cauchy errors
/// (scale 1 / 2) with lambda ~ Unif(0, sqrt(3)); Case III mixes them 50/50.
std::vector<MixtureComponent> case_mixture(const std::string& case_name, StudyRole role);

}  // namespace transrr
