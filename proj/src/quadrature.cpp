#include "transrr/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include <Eigen/Eigenvalues>

#include "transrr/errors.hpp"

namespace transrr {

namespace {

// Golub–Welsch: nodes are eigenvalues of the Jacobi matrix of the orthogonal
// polynomial recurrence, weights are mu0 * (first eigenvector component)^2.
QuadRule golub_welsch(const Eigen::VectorXd& offdiag, double mu0) {
  const int n = static_cast<int>(offdiag.size()) + 1;
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k + 1 < n; ++k) {
    jacobi(k, k + 1) = offdiag[k];
    jacobi(k + 1, k) = offdiag[k];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  if (es.info() != Eigen::Success) throw AccuracyError("quadrature: eigensolve failed");
  QuadRule rule;
  rule.nodes = es.eigenvalues();
  rule.weights.resize(n);
  for (int k = 0; k < n; ++k) {
    const double q0 = es.eigenvectors()(0, k);
    rule.weights[k] = mu0 * q0 * q0;
  }
  return rule;
}

std::mutex cache_mutex;

const QuadRule& cached(std::map<int, QuadRule>& cache, int n, QuadRule (*make)(int)) {
  std::lock_guard<std::mutex> lock(cache_mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, make(n)).first;
  return it->second;
}

QuadRule make_hermite(int n) {
  // probabilists' weight exp(-x^2/2): recurrence offdiag sqrt(k), mu0 = sqrt(2*pi);
  // normalize so the rule computes an expectation against N(0,1)
  Eigen::VectorXd off(n - 1);
  for (int k = 1; k < n; ++k) off[k - 1] = std::sqrt(static_cast<double>(k));
  QuadRule rule = golub_welsch(off, 1.0);
  rule.weights /= rule.weights.sum();
  return rule;
}

QuadRule make_legendre01(int n) {
  Eigen::VectorXd off(n - 1);
  for (int k = 1; k < n; ++k)
    off[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
  QuadRule rule = golub_welsch(off, 2.0);
  rule.nodes = (rule.nodes.array() + 1.0) * 0.5;
  rule.weights *= 0.5;
  return rule;
}

}  // namespace

const QuadRule& gauss_hermite(int n) {
  if (n < 1) throw InputError("gauss_hermite: n >= 1 required");
  static std::map<int, QuadRule> cache;
  return cached(cache, n, &make_hermite);
}

const QuadRule& gauss_legendre_01(int n) {
  if (n < 1) throw InputError("gauss_legendre: n >= 1 required");
  static std::map<int, QuadRule> cache;
  return cached(cache, n, &make_legendre01);
}

QuadRule gauss_legendre(int n, double a, double b) {
  const QuadRule& ref = gauss_legendre_01(n);
  QuadRule rule;
  rule.nodes = a + (b - a) * ref.nodes.array();
  rule.weights = (b - a) * ref.weights;
  return rule;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z * M_SQRT1_2); }

double normal_pdf(double z) {
  static const double inv_sqrt_2pi = 0.3989422804014326779;
  return inv_sqrt_2pi * std::exp(-0.5 * z * z);
}

}  // namespace transrr
