#pragma once

#include <Eigen/Dense>

namespace transrr {

/// One study: design matrix X (n x p) and response y (length n).
struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index p() const { return X.cols(); }

  /// Throws InputError on shape mismatch, empty data, or non-finite entries.
  void validate() const;
};

/// Row-concatenation of two studies with equal p.
Dataset stack(const Dataset& a, const Dataset& b);

}  // namespace transrr
