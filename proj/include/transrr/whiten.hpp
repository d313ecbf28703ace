#pragma once

#include <vector>

#include <Eigen/Dense>

#include "transrr/dataset.hpp"

namespace transrr {

/// Whitening learned on one training sample and carried unchanged to any
/// number of other datasets: X -> (X - mu) Sigma^{-1/2}, y -> y - y_mean.
struct WhitenTransform {
  Eigen::VectorXd x_mean;
  Eigen::MatrixXd inv_sqrt_cov;
  double y_mean = 0.0;

  Dataset apply(const Dataset& data) const;
};

/// Estimates the transform from `train` (covariance with 1/n normalization,
/// eigenvalue floor 1e-10 * max eigenvalue against near-singularity).
WhitenTransform fit_whitener(const Dataset& train);

struct WhitenResult {
  WhitenTransform transform;
  Dataset train;
  std::vector<Dataset> applied;
};

WhitenResult whiten(const Dataset& train, const std::vector<Dataset>& apply_to);

/// Keeps columns offset, offset+stride, offset+2*stride, ... (spectra thinning).
Dataset subsample_columns(const Dataset& data, int stride, int offset = 0);

}  // namespace transrr
