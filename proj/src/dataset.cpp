#include "transrr/dataset.hpp"

#include "transrr/errors.hpp"

namespace transrr {

void Dataset::validate() const {
  if (X.rows() < 1 || X.cols() < 1)
    throw InputError("dataset: need n >= 1 and p >= 1");
  if (X.rows() != y.size())
    throw InputError("dataset: X has " + std::to_string(X.rows()) + " rows but y has " +
                     std::to_string(y.size()) + " entries");
  if (!X.allFinite() || !y.allFinite())
    throw InputError("dataset: non-finite entries");
}

Dataset stack(const Dataset& a, const Dataset& b) {
  if (a.n() == 0) return b;
  if (b.n() == 0) return a;
  if (a.p() != b.p())
    throw InputError("stack: column counts differ (" + std::to_string(a.p()) + " vs " +
                     std::to_string(b.p()) + ")");
  Dataset out;
  out.X.resize(a.n() + b.n(), a.p());
  out.X << a.X, b.X;
  out.y.resize(a.n() + b.n());
  out.y << a.y, b.y;
  return out;
}

}  // namespace transrr
