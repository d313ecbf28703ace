#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "transrr/dataset.hpp"
#include "transrr/loss.hpp"

namespace transrr {

struct EstimatorConfig {
  double tau = 1.0;
  double grad_tol = 0.0;  // <= 0: scale-aware default 1e-8 * max(1, ||grad at 0||)
  int max_iter = 500;
};

struct FitResult {
  Eigen::VectorXd coef;
  double grad_norm = 0.0;
  int iterations = 0;
  double objective = 0.0;
};

/// Minimizes (1/n) sum_i rho(y_i - x_i'(offset + b)) + (tau/2) ||b||^2 over b.
/// Damped Newton with exact Hessian and backtracking line search; falls back
/// to Barzilai–Borwein gradient steps if the Hessian factorization fails.
/// Throws ConvergenceError (message carries the final gradient norm) when
/// max_iter is exhausted; use fit_robust_ridge_noexcept to keep the iterate.
FitResult fit_robust_ridge(const Dataset& data, const LossModel& loss,
                           const EstimatorConfig& cfg,
                           const Eigen::VectorXd* offset = nullptr);

/// Same, but reports non-convergence through the flag instead of throwing.
std::pair<FitResult, bool> fit_robust_ridge_noexcept(const Dataset& data,
                                                     const LossModel& loss,
                                                     const EstimatorConfig& cfg,
                                                     const Eigen::VectorXd* offset = nullptr);

struct TransFit {
  FitResult combined;  // coef = stage1.coef + stage2.coef, exactly
  FitResult stage1;    // source fit (w-hat)
  FitResult stage2;    // target correction (delta-hat)
};

/// Two-stage transfer estimator: fit w on the source with ridge tau1, fit the
/// discrepancy on the target with offset w and ridge tau, return the sum.
TransFit trans_rr(const Dataset& source, const Dataset& target,
                  const LossModel& loss_source, const LossModel& loss_target,
                  double tau1, double tau, const EstimatorConfig& cfg);

FitResult single_rr(const Dataset& target, const LossModel& loss, double tau,
                    const EstimatorConfig& cfg);

/// Fit on the row-concatenation of source and target.
FitResult pooled_rr(const Dataset& source, const Dataset& target, const LossModel& loss,
                    double tau, const EstimatorConfig& cfg);

struct CvResult {
  double tau = 0.0;
  std::vector<std::pair<double, double>> table;  // (tau, mean validation MAE)
};

/// K-fold cross-validation of the ridge weight by validation MAE.
/// Folds: seeded permutation cut into contiguous blocks; the remainder is
/// spread one-per-fold starting from the first fold. Ties go to the largest tau.
CvResult cross_validate_tau(const Dataset& data, const LossModel& loss,
                            const std::vector<double>& grid, int folds,
                            std::uint64_t seed, const EstimatorConfig& base,
                            int threads = 1);

/// The default cross-validation grid 10^-4, 10^-3.5, ..., 10^1.
std::vector<double> default_tau_grid();

}  // namespace transrr
