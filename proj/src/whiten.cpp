#include "transrr/whiten.hpp"

#include <Eigen/Eigenvalues>

#include "transrr/errors.hpp"

namespace transrr {

Dataset WhitenTransform::apply(const Dataset& data) const {
  if (data.p() != x_mean.size())
    throw InputError("whiten: dataset has p = " + std::to_string(data.p()) +
                     ", transform expects " + std::to_string(x_mean.size()));
  Dataset out;
  out.X = (data.X.rowwise() - x_mean.transpose()) * inv_sqrt_cov;
  out.y = data.y.array() - y_mean;
  return out;
}

WhitenTransform fit_whitener(const Dataset& train) {
  train.validate();
  WhitenTransform t;
  t.x_mean = train.X.colwise().mean();
  t.y_mean = train.y.mean();
  const Eigen::MatrixXd centered = train.X.rowwise() - t.x_mean.transpose();
  const Eigen::MatrixXd cov =
      centered.transpose() * centered / static_cast<double>(train.n());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  if (es.info() != Eigen::Success) throw AccuracyError("whiten: eigensolve failed");
  const double floor = 1e-10 * es.eigenvalues().maxCoeff();
  if (!(floor > 0.0))
    throw AccuracyError("whiten: training covariance is identically zero");
  Eigen::VectorXd inv_sqrt = es.eigenvalues();
  for (Eigen::Index k = 0; k < inv_sqrt.size(); ++k)
    inv_sqrt[k] = 1.0 / std::sqrt(std::max(inv_sqrt[k], floor));
  t.inv_sqrt_cov = es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().transpose();
  return t;
}

WhitenResult whiten(const Dataset& train, const std::vector<Dataset>& apply_to) {
  WhitenResult res;
  res.transform = fit_whitener(train);
  res.train = res.transform.apply(train);
  res.applied.reserve(apply_to.size());
  for (const auto& d : apply_to) res.applied.push_back(res.transform.apply(d));
  return res;
}

Dataset subsample_columns(const Dataset& data, int stride, int offset) {
  if (stride < 1) throw InputError("subsample_columns: stride must be >= 1");
  if (offset < 0 || offset >= data.p())
    throw InputError("subsample_columns: offset out of range");
  std::vector<Eigen::Index> keep;
  for (Eigen::Index j = offset; j < data.p(); j += stride) keep.push_back(j);
  Dataset out;
  out.X.resize(data.n(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) out.X.col(k) = data.X.col(keep[k]);
  out.y = data.y;
  return out;
}

}  // namespace transrr
