#pragma once

#include <Eigen/Dense>

namespace transrr {

/// Nodes/weights of a Gaussian quadrature rule. Weights are stored so that
/// sum_i w_i f(x_i) approximates the target integral directly:
///  - gauss_hermite: E[f(Z)] for Z ~ N(0,1) (probabilists' convention, sum w = 1)
///  - gauss_legendre: integral of f over [a, b] (sum w = b - a)
struct QuadRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

/// Rules are computed by Golub–Welsch and cached; thread-safe.
const QuadRule& gauss_hermite(int n);
const QuadRule& gauss_legendre_01(int n);  // reference rule on [0, 1]
QuadRule gauss_legendre(int n, double a, double b);

double normal_cdf(double z);
double normal_pdf(double z);

}  // namespace transrr
