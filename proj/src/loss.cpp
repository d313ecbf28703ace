#include "transrr/loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "transrr/errors.hpp"

namespace transrr {

LossModel LossModel::smoothed_huber(double delta, double eta) {
  LossModel m{LossKind::smoothed_huber, delta, eta};
  m.validate();
  return m;
}

LossModel LossModel::pseudo_huber(double delta) {
  LossModel m{LossKind::pseudo_huber, delta, 0.0};
  m.validate();
  return m;
}

LossModel LossModel::quadratic_test() { return LossModel{LossKind::quadratic_test, 1.0, 0.0}; }

void LossModel::validate() const {
  if (kind == LossKind::quadratic_test) return;
  if (!(delta > 0.0) || !std::isfinite(delta))
    throw InputError("loss: delta must be positive, got " + std::to_string(delta));
  if (kind == LossKind::smoothed_huber && (!(eta > 0.0) || !(eta < delta)))
    throw InputError("loss: smoothed_huber requires 0 < eta < delta, got eta=" +
                     std::to_string(eta) + " delta=" + std::to_string(delta));
}

std::string LossModel::kind_name() const {
  switch (kind) {
    case LossKind::smoothed_huber: return "smoothed_huber";
    case LossKind::pseudo_huber: return "pseudo_huber";
    case LossKind::quadratic_test: return "quadratic_test";
  }
  return "?";
}

LossKind loss_kind_from_name(const std::string& name) {
  if (name == "smoothed_huber") return LossKind::smoothed_huber;
  if (name == "pseudo_huber") return LossKind::pseudo_huber;
  if (name == "quadratic_test") return LossKind::quadratic_test;
  throw InputError("loss: unknown kind '" + name + "'");
}

double LossModel::rho(double x) const {
  const double ax = std::abs(x);
  switch (kind) {
    case LossKind::quadratic_test:
      return 0.5 * x * x;
    case LossKind::pseudo_huber:
      return delta * delta * (std::sqrt(1.0 + (x / delta) * (x / delta)) - 1.0);
    case LossKind::smoothed_huber: {
      if (ax <= delta - eta) return 0.5 * x * x;
      const double c_rho = -eta * eta / 6.0 + eta * delta / 2.0 - delta * delta / 2.0;
      if (ax < delta) {
        const double d = delta - ax;
        return (delta - 0.5 * eta) * ax + d * d * d / (6.0 * eta) + c_rho;
      }
      return (delta - 0.5 * eta) * ax + c_rho;
    }
  }
  return 0.0;
}

double LossModel::psi(double x) const {
  const double ax = std::abs(x);
  const double sg = x < 0.0 ? -1.0 : (x > 0.0 ? 1.0 : 0.0);
  switch (kind) {
    case LossKind::quadratic_test:
      return x;
    case LossKind::pseudo_huber:
      return x / std::sqrt(1.0 + (x / delta) * (x / delta));
    case LossKind::smoothed_huber: {
      if (ax <= delta - eta) return x;
      if (ax < delta) {
        const double d = delta - ax;
        return sg * (delta - 0.5 * eta - d * d / (2.0 * eta));
      }
      return sg * (delta - 0.5 * eta);
    }
  }
  return 0.0;
}

double LossModel::psi_prime(double x) const {
  const double ax = std::abs(x);
  switch (kind) {
    case LossKind::quadratic_test:
      return 1.0;
    case LossKind::pseudo_huber: {
      const double u = 1.0 + (x / delta) * (x / delta);
      return 1.0 / (u * std::sqrt(u));
    }
    case LossKind::smoothed_huber: {
      // one-sided at |x| in {delta-eta, delta}: take the inner branch
      if (ax <= delta - eta) return 1.0;
      if (ax < delta) return (delta - ax) / eta;
      return 0.0;
    }
  }
  return 0.0;
}

double LossModel::psi_max() const {
  switch (kind) {
    case LossKind::quadratic_test: return std::numeric_limits<double>::infinity();
    case LossKind::pseudo_huber: return delta;
    case LossKind::smoothed_huber: return delta - 0.5 * eta;
  }
  return 0.0;
}

namespace {

// Safeguarded Newton on g(y) = y + c psi(y) - x over a bracket where g is
// strictly increasing; bisection step whenever Newton leaves the bracket.
double prox_root(const LossModel& loss, double c, double x, double lo, double hi) {
  const double tol = 1e-14 * std::max(1.0, std::abs(x));
  double y = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double g = y + c * loss.psi(y) - x;
    if (std::abs(g) <= tol) return y;
    if (g > 0.0) hi = y; else lo = y;
    const double dg = 1.0 + c * loss.psi_prime(y);
    double ynext = y - g / dg;
    if (!(ynext > lo) || !(ynext < hi)) ynext = 0.5 * (lo + hi);
    if (ynext == y) return y;
    y = ynext;
  }
  return y;
}

}  // namespace

double prox(const LossModel& loss, double c, double x) {
  loss.validate();
  if (!std::isfinite(c) || !std::isfinite(x) || c < 0.0)
    throw InputError("prox: requires finite x and finite c >= 0");
  if (c == 0.0 || x == 0.0) return x;

  switch (loss.kind) {
    case LossKind::quadratic_test:
      return x / (1.0 + c);
    case LossKind::smoothed_huber: {
      const double delta = loss.delta, eta = loss.eta;
      const double ax = std::abs(x), sg = x < 0.0 ? -1.0 : 1.0;
      const double knee_lo = (1.0 + c) * (delta - eta);         // |x| at which prox = delta-eta
      const double knee_hi = delta + c * (delta - 0.5 * eta);   // |x| at which prox = delta
      if (ax <= knee_lo) return x / (1.0 + c);
      if (ax >= knee_hi) return x - sg * c * (delta - 0.5 * eta);
      // blend: with t = delta - |y|, (c/2eta) t^2 + t - (knee_hi - |x|) = 0
      const double gap = knee_hi - ax;
      const double t = 2.0 * gap / (1.0 + std::sqrt(1.0 + 2.0 * (c / eta) * gap));
      return sg * (delta - t);
    }
    case LossKind::pseudo_huber: {
      // bracket from |psi| <= delta; g strictly increasing so root is interior
      const double lo = std::min(x - c * loss.delta, x);
      const double hi = std::max(x + c * loss.delta, x);
      return prox_root(loss, c, x, lo, hi);
    }
  }
  return x;
}

double prox_deriv_x(const LossModel& loss, double c, double x) {
  const double y = prox(loss, c, x);
  return 1.0 / (1.0 + c * loss.psi_prime(y));
}

double prox_deriv_c(const LossModel& loss, double c, double x) {
  const double y = prox(loss, c, x);
  return -loss.psi(y) / (1.0 + c * loss.psi_prime(y));
}

}  // namespace transrr
