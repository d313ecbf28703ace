#include "transrr/risk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "transrr/errors.hpp"
#include "transrr/quadrature.hpp"

namespace transrr {

ScalarDist ScalarDist::gaussian(double sigma) { return {Kind::gaussian, sigma, 0.0}; }
ScalarDist ScalarDist::cauchy(double scale) { return {Kind::cauchy, scale, 0.0}; }
ScalarDist ScalarDist::uniform(double lo, double hi) { return {Kind::uniform, lo, hi}; }

void ScalarDist::validate() const {
  switch (kind) {
    case Kind::point_mass:
      if (!std::isfinite(a)) throw InputError("point_mass: non-finite value");
      return;
    case Kind::gaussian:
      if (!(a > 0.0)) throw InputError("gaussian: sigma must be > 0");
      return;
    case Kind::cauchy:
      if (!(a > 0.0)) throw InputError("cauchy: scale must be > 0");
      return;
    case Kind::uniform:
      if (!(a < b)) throw InputError("uniform: need lo < hi");
      return;
  }
}

std::string ScalarDist::name() const {
  switch (kind) {
    case Kind::point_mass: return "point_mass";
    case Kind::gaussian: return "gaussian";
    case Kind::cauchy: return "cauchy";
    case Kind::uniform: return "uniform";
  }
  return "?";
}

double ScalarDist::second_moment() const {
  switch (kind) {
    case Kind::point_mass: return a * a;
    case Kind::gaussian: return a * a;
    case Kind::uniform: return (a * a + a * b + b * b) / 3.0;
    case Kind::cauchy: throw ModelError("cauchy has no second moment");
  }
  return 0.0;
}

double ScalarDist::spread_proxy() const {
  switch (kind) {
    case Kind::point_mass: return 0.0;
    case Kind::gaussian: return a;
    case Kind::cauchy: return a;
    case Kind::uniform: return (b - a) / std::sqrt(12.0);
  }
  return 0.0;
}

void PopulationSpec::validate() const {
  if (!(kappa > 0.0)) throw InputError("population: kappa must be > 0");
  if (!(tau > 0.0)) throw InputError("population: tau must be > 0");
  if (!(discrepancy >= 0.0)) throw InputError("population: discrepancy must be >= 0");
  if (components.empty()) throw InputError("population: no mixture components");
  double total = 0.0;
  for (const auto& comp : components) {
    if (!(comp.weight > 0.0) || comp.weight > 1.0)
      throw InputError("population: component weights must lie in (0, 1]");
    comp.eps.validate();
    comp.lam.validate();
    total += comp.weight;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw InputError("population: component weights sum to " + std::to_string(total));
  loss.validate();
}

namespace {

constexpr double kZClip = 40.0;     // N(0,1) carries no double-precision mass beyond
constexpr double kPi = 3.14159265358979323846;

struct EvalMode {
  bool g2 = true;
  bool g2d = false;
};

struct GVals {
  double g1 = 0.0, g2 = 0.0, g2d = 0.0;
};

int scaled(int n, double scale) { return std::max(3, static_cast<int>(std::lround(n * scale))); }

// pointwise integrand values at w for the scaled loss s*rho:
// g1 = prox', g2 = psi(prox)^2, g2d = (w - prox)^2
GVals point_vals(const LossModel& loss, double s, double w, EvalMode m) {
  GVals v;
  const double y = prox(loss, s, w);
  v.g1 = 1.0 / (1.0 + s * loss.psi_prime(y));
  if (m.g2) {
    const double ps = loss.psi(y);
    v.g2 = ps * ps;
  }
  if (m.g2d) {
    const double d = w - y;
    v.g2d = d * d;
  }
  return v;
}

// ---- E_Z[g(eps0 + a Z)] for Z ~ N(0,1) ---------------------------------

// smoothed huber: prox is affine outside |w| in [(1+s)(delta-eta), delta+s(delta-eta/2)],
// so the Z-integral is Phi/phi algebra plus Gauss-Legendre on the two blend bands.
GVals sh_gauss_inner(const LossModel& loss, const QuadratureConfig& q, EvalMode m,
                     double eps0, double a, double s) {
  const double delta = loss.delta, eta = loss.eta;
  const double edge_lo = (1.0 + s) * (delta - eta);
  const double edge_hi = delta + s * (delta - 0.5 * eta);
  const double psim = delta - 0.5 * eta;
  if (a <= 1e-12 * (1.0 + std::abs(eps0) + edge_hi)) return point_vals(loss, s, eps0, m);

  const double inv_a = 1.0 / a;
  const double zAm = (-edge_lo - eps0) * inv_a, zAp = (edge_lo - eps0) * inv_a;
  const double zBm = (-edge_hi - eps0) * inv_a, zBp = (edge_hi - eps0) * inv_a;
  const double PhiAm = normal_cdf(zAm), PhiAp = normal_cdf(zAp);
  const double PhiBm = normal_cdf(zBm), PhiBp = normal_cdf(zBp);
  const double phiAm = normal_pdf(zAm), phiAp = normal_pdf(zAp);
  const double pmid = PhiAp - PhiAm;
  const double ptail = PhiBm + (1.0 - PhiBp);
  const double shrink = 1.0 / (1.0 + s);

  GVals v;
  v.g1 = pmid * shrink + ptail;
  if (m.g2 || m.g2d) {
    // E[(eps0 + a Z)^2 ; zAm <= Z <= zAp]
    const double zmom = pmid - (zAp * phiAp - zAm * phiAm);
    const double trunc2 = eps0 * eps0 * pmid + 2.0 * eps0 * a * (phiAm - phiAp) + a * a * zmom;
    if (m.g2) v.g2 = trunc2 * shrink * shrink + psim * psim * ptail;
    if (m.g2d) v.g2d = trunc2 * (s * shrink) * (s * shrink) + (s * psim) * (s * psim) * ptail;
  }

  // blend bands; segmented so phi(z) is always resolved even when a is small
  auto band = [&](double z0, double z1) {
    z0 = std::max(z0, -kZClip);
    z1 = std::min(z1, kZClip);
    if (!(z0 < z1)) return;
    const int nseg = std::max(1, static_cast<int>(std::ceil((z1 - z0) / 4.0)));
    const int nodes = scaled(q.band_nodes, q.node_scale);
    const QuadRule& ref = gauss_legendre_01(nodes);
    for (int seg = 0; seg < nseg; ++seg) {
      const double lo = z0 + (z1 - z0) * seg / nseg;
      const double hi = z0 + (z1 - z0) * (seg + 1) / nseg;
      for (int k = 0; k < nodes; ++k) {
        const double z = lo + (hi - lo) * ref.nodes[k];
        const double wt = (hi - lo) * ref.weights[k] * normal_pdf(z);
        const GVals pv = point_vals(loss, s, eps0 + a * z, m);
        v.g1 += wt * pv.g1;
        if (m.g2) v.g2 += wt * pv.g2;
        if (m.g2d) v.g2d += wt * pv.g2d;
      }
    }
  };
  band(zAp, zBp);
  band(zBm, zAm);
  return v;
}

// pseudo huber: analytic integrand, adaptive Gauss-Hermite ladder n -> 2n-1 -> ...
// (the analyticity strip shrinks like 1/a, so wide gaussians need deep rungs)
GVals ph_gauss_inner(const LossModel& loss, const QuadratureConfig& q, EvalMode m,
                     double eps0, double a, double s) {
  if (a <= 1e-12 * (1.0 + std::abs(eps0))) return point_vals(loss, s, eps0, m);
  const int n_max = scaled(q.hermite_max, q.node_scale);
  GVals prev;
  bool have_prev = false;
  for (int n = scaled(q.hermite_nodes, q.node_scale); n <= n_max; n = 2 * n - 1) {
    const QuadRule& rule = gauss_hermite(n);
    GVals cur;
    for (int k = 0; k < rule.nodes.size(); ++k) {
      const GVals pv = point_vals(loss, s, eps0 + a * rule.nodes[k], m);
      cur.g1 += rule.weights[k] * pv.g1;
      if (m.g2) cur.g2 += rule.weights[k] * pv.g2;
      if (m.g2d) cur.g2d += rule.weights[k] * pv.g2d;
    }
    if (have_prev) {
      const double tol1 = 1e-10 * std::max(1.0, std::abs(cur.g1));
      const double tol2 = 1e-10 * std::max(1.0, std::abs(cur.g2));
      const double told = 1e-10 * std::max(1.0, std::abs(cur.g2d));
      if (std::abs(cur.g1 - prev.g1) < tol1 && std::abs(cur.g2 - prev.g2) < tol2 &&
          std::abs(cur.g2d - prev.g2d) < told)
        return cur;
    }
    prev = cur;
    have_prev = true;
  }
  throw AccuracyError("risk: Gauss-Hermite ladder did not stabilize below 1e-10");
}

GVals quad_gauss_inner(EvalMode m, double eps0, double a, double s) {
  GVals v;
  const double shrink = 1.0 / (1.0 + s);
  v.g1 = shrink;
  const double ew2 = eps0 * eps0 + a * a;
  if (m.g2) v.g2 = ew2 * shrink * shrink;
  if (m.g2d) v.g2d = ew2 * (s * shrink) * (s * shrink);
  return v;
}

GVals gauss_inner(const LossModel& loss, const QuadratureConfig& q, EvalMode m, double eps0,
                  double a, double s) {
  switch (loss.kind) {
    case LossKind::smoothed_huber: return sh_gauss_inner(loss, q, m, eps0, a, s);
    case LossKind::pseudo_huber: return ph_gauss_inner(loss, q, m, eps0, a, s);
    case LossKind::quadratic_test: return quad_gauss_inner(m, eps0, a, s);
  }
  return {};
}

// ---- outer integral over eps ------------------------------------------

// kink positions of the pointwise integrands in w (smoothed huber only)
void append_kinks(const LossModel& loss, double s, double shift, std::vector<double>& out) {
  if (loss.kind != LossKind::smoothed_huber) return;
  const double edge_lo = (1.0 + s) * (loss.delta - loss.eta);
  const double edge_hi = loss.delta + s * (loss.delta - 0.5 * loss.eta);
  out.push_back(-edge_hi - shift);
  out.push_back(-edge_lo - shift);
  out.push_back(edge_lo - shift);
  out.push_back(edge_hi - shift);
}

// E_eps[g(eps + shift)] for cauchy eps via eps = s0 tan(u), split at kinks
GVals cauchy_point_integral(const LossModel& loss, EvalMode m, double s0, double shift,
                            double s, int seg_nodes) {
  std::vector<double> cuts{-0.5 * kPi, 0.5 * kPi};
  std::vector<double> kinks;
  append_kinks(loss, s, shift, kinks);
  for (double w : kinks) cuts.push_back(std::atan(w / s0));
  std::sort(cuts.begin(), cuts.end());
  const QuadRule& ref = gauss_legendre_01(seg_nodes);
  GVals v;
  for (std::size_t j = 0; j + 1 < cuts.size(); ++j) {
    const double lo = cuts[j], hi = cuts[j + 1];
    if (!(hi > lo)) continue;
    for (int k = 0; k < seg_nodes; ++k) {
      const double u = lo + (hi - lo) * ref.nodes[k];
      const double wt = (hi - lo) * ref.weights[k] / kPi;
      const GVals pv = point_vals(loss, s, s0 * std::tan(u) + shift, m);
      v.g1 += wt * pv.g1;
      if (m.g2) v.g2 += wt * pv.g2;
      if (m.g2d) v.g2d += wt * pv.g2d;
    }
  }
  return v;
}

// E_eps[g(eps + shift)] for uniform eps, split at kinks
GVals uniform_point_integral(const LossModel& loss, EvalMode m, double lo_e, double hi_e,
                             double shift, double s, int seg_nodes) {
  std::vector<double> cuts{lo_e, hi_e};
  std::vector<double> kinks;
  append_kinks(loss, s, shift, kinks);
  for (double w : kinks)
    if (w > lo_e && w < hi_e) cuts.push_back(w);
  std::sort(cuts.begin(), cuts.end());
  const QuadRule& ref = gauss_legendre_01(seg_nodes);
  const double inv_len = 1.0 / (hi_e - lo_e);
  GVals v;
  for (std::size_t j = 0; j + 1 < cuts.size(); ++j) {
    const double lo = cuts[j], hi = cuts[j + 1];
    if (!(hi > lo)) continue;
    for (int k = 0; k < seg_nodes; ++k) {
      const double x = lo + (hi - lo) * ref.nodes[k];
      const double wt = (hi - lo) * ref.weights[k] * inv_len;
      const GVals pv = point_vals(loss, s, x + shift, m);
      v.g1 += wt * pv.g1;
      if (m.g2) v.g2 += wt * pv.g2;
      if (m.g2d) v.g2d += wt * pv.g2d;
    }
  }
  return v;
}

void accumulate(GVals& acc, const GVals& v, double wt, EvalMode m) {
  acc.g1 += wt * v.g1;
  if (m.g2) acc.g2 += wt * v.g2;
  if (m.g2d) acc.g2d += wt * v.g2d;
}

// E over (eps, Z) of the pointwise integrands with W = eps + a Z
GVals eps_expect(const LossModel& loss, const QuadratureConfig& q, EvalMode m,
                 const ScalarDist& eps, double a, double s) {
  switch (eps.kind) {
    case ScalarDist::Kind::point_mass:
      return gauss_inner(loss, q, m, eps.a, a, s);
    case ScalarDist::Kind::gaussian:
      // eps + a Z is again a centered gaussian; fold it into the Z integral
      return gauss_inner(loss, q, m, 0.0, std::hypot(eps.a, a), s);
    case ScalarDist::Kind::cauchy: {
      const double s0 = eps.a;
      if (loss.kind == LossKind::quadratic_test && (m.g2 || m.g2d))
        throw ModelError("risk: cauchy errors have no second moment under quadratic_test");
      if (a < 0.35 * std::max(1.0, s0)) {
        // small gaussian width: integrate eps exactly (kink-split), Z outside,
        // where the z-integrand is a cauchy convolution and hence smooth
        const int seg_nodes = scaled(48, q.node_scale);
        if (a <= 1e-14) return cauchy_point_integral(loss, m, s0, 0.0, s, seg_nodes);
        const QuadRule& hz = gauss_hermite(scaled(q.hermite_nodes, q.node_scale));
        GVals v;
        for (int k = 0; k < hz.nodes.size(); ++k)
          accumulate(v, cauchy_point_integral(loss, m, s0, a * hz.nodes[k], s, seg_nodes),
                     hz.weights[k], m);
        return v;
      }
      // wide gaussian: Z-integral in closed form per eps node; the eps-integrand
      // is then an entire function with smoothness scale a
      const int n = scaled(q.cauchy_nodes, q.node_scale);
      const QuadRule& ref = gauss_legendre_01(n);
      GVals v;
      for (int k = 0; k < n; ++k) {
        const double u = -0.5 * kPi + kPi * ref.nodes[k];
        accumulate(v, gauss_inner(loss, q, m, s0 * std::tan(u), a, s), ref.weights[k], m);
      }
      return v;
    }
    case ScalarDist::Kind::uniform: {
      const double lo = eps.a, hi = eps.b;
      const int n = scaled(q.uniform_nodes, q.node_scale);
      if (a < 3.0 * (hi - lo) / q.uniform_nodes) {
        const int seg_nodes = scaled(24, q.node_scale);
        if (a <= 1e-14) return uniform_point_integral(loss, m, lo, hi, 0.0, s, seg_nodes);
        const QuadRule& hz = gauss_hermite(scaled(q.hermite_nodes, q.node_scale));
        GVals v;
        for (int k = 0; k < hz.nodes.size(); ++k)
          accumulate(v, uniform_point_integral(loss, m, lo, hi, a * hz.nodes[k], s, seg_nodes),
                     hz.weights[k], m);
        return v;
      }
      const QuadRule& ref = gauss_legendre_01(n);
      GVals v;
      for (int k = 0; k < n; ++k) {
        const double x = lo + (hi - lo) * ref.nodes[k];
        accumulate(v, gauss_inner(loss, q, m, x, a, s), ref.weights[k], m);
      }
      return v;
    }
  }
  return {};
}

std::vector<std::pair<double, double>> lambda_nodes(const ScalarDist& lam,
                                                    const QuadratureConfig& q) {
  std::vector<std::pair<double, double>> nodes;
  switch (lam.kind) {
    case ScalarDist::Kind::point_mass:
      nodes.emplace_back(lam.a, 1.0);
      break;
    case ScalarDist::Kind::uniform: {
      const int n = scaled(q.uniform_nodes, q.node_scale);
      const QuadRule& ref = gauss_legendre_01(n);
      for (int k = 0; k < n; ++k)
        nodes.emplace_back(lam.a + (lam.b - lam.a) * ref.nodes[k], ref.weights[k]);
      break;
    }
    case ScalarDist::Kind::gaussian: {
      const QuadRule& rule = gauss_hermite(scaled(q.hermite_nodes, q.node_scale));
      for (int k = 0; k < rule.nodes.size(); ++k)
        nodes.emplace_back(lam.a * rule.nodes[k], rule.weights[k]);
      break;
    }
    case ScalarDist::Kind::cauchy: {
      const int n = scaled(q.cauchy_nodes, q.node_scale);
      const QuadRule& ref = gauss_legendre_01(n);
      for (int k = 0; k < n; ++k) {
        const double u = -0.5 * kPi + kPi * ref.nodes[k];
        nodes.emplace_back(lam.a * std::tan(u), ref.weights[k]);
      }
      break;
    }
  }
  return nodes;
}

struct EVals {
  double e1 = 0.0, e2 = 0.0, e2d = 0.0;
};

EVals expectations(const PopulationSpec& spec, double c, double r, const QuadratureConfig& q,
                   EvalMode m) {
  if (!(c >= 0.0) || !(r >= 0.0)) throw InputError("risk: c and r must be >= 0");
  EVals out;
  if (c == 0.0) {  // prox(0*rho) is the identity: E1 = 1, both E2 forms vanish
    out.e1 = 1.0;
    return out;
  }
  for (const auto& comp : spec.components) {
    for (const auto& [lv, lw] : lambda_nodes(comp.lam, q)) {
      const double s = c * lv * lv;
      const double a = std::abs(r * lv);
      const GVals g = eps_expect(spec.loss, q, m, comp.eps, a, s);
      const double wt = comp.weight * lw;
      out.e1 += wt * g.g1;
      if (m.g2) out.e2 += wt * (c * c * lv * lv) * g.g2;
      if (m.g2d) {
        if (lv * lv <= 0.0)
          throw ModelError("risk: direct E2 form undefined at lambda = 0");
        out.e2d += wt * g.g2d / (lv * lv);
      }
    }
  }
  return out;
}

void require_lambda_positive(const PopulationSpec& spec) {
  for (const auto& comp : spec.components) {
    const auto& lam = comp.lam;
    const bool ok = (lam.kind == ScalarDist::Kind::point_mass && lam.a != 0.0) ||
                    (lam.kind == ScalarDist::Kind::uniform && (lam.a > 0.0 || lam.b < 0.0));
    if (!ok)
      throw ModelError("risk: direct E2 form requires lambda laws bounded away from 0 (" +
                       lam.name() + ")");
  }
}

}  // namespace

double expectation_E1(const PopulationSpec& spec, double c, double r,
                      const QuadratureConfig& quad) {
  spec.validate();
  return expectations(spec, c, r, quad, {false, false}).e1;
}

double expectation_E2(const PopulationSpec& spec, double c, double r,
                      const QuadratureConfig& quad) {
  spec.validate();
  return expectations(spec, c, r, quad, {true, false}).e2;
}

double expectation_E2_direct(const PopulationSpec& spec, double c, double r,
                             const QuadratureConfig& quad) {
  spec.validate();
  require_lambda_positive(spec);
  EvalMode m{false, true};
  return expectations(spec, c, r, quad, m).e2d;
}

namespace {

struct InnerRoot {
  double c = 0.0;
  double f = 0.0;  // eq-1 residual at the root
};

// Solve E1(c, r) = 1 - kappa + tau c on [0, kappa/tau].
// E1 is nonincreasing in c and the line is increasing, so the gap function is
// strictly decreasing: Illinois false position with a bisection safeguard.
InnerRoot solve_c_given_r(const PopulationSpec& spec, double r, const QuadratureConfig& q,
                          double warm) {
  const double cmax = spec.kappa / spec.tau;
  auto gap = [&](double c) {
    return expectations(spec, c, r, q, {false, false}).e1 -
           (1.0 - spec.kappa + spec.tau * c);
  };
  double lo = 0.0, flo = spec.kappa;  // E1(0, r) = 1 exactly
  double hi = cmax, fhi = gap(cmax);
  if (fhi > 0.0) {
    if (fhi < 1e-10) return {cmax, fhi};
    throw ModelError("risk: equation 1 has no root in [0, kappa/tau]; endpoint gaps " +
                     std::to_string(flo) + " and " + std::to_string(fhi));
  }
  if (warm > 0.0 && warm < cmax) {
    const double fw = gap(warm);
    if (std::abs(fw) <= 1e-13) return {warm, fw};
    if (fw > 0.0) {
      lo = warm;
      flo = fw;
    } else {
      hi = warm;
      fhi = fw;
    }
  }
  int side = 0;
  double c = lo, fc = flo;
  for (int it = 0; it < 200; ++it) {
    c = (flo * hi - fhi * lo) / (flo - fhi);
    if (!(c > lo) || !(c < hi)) c = 0.5 * (lo + hi);
    fc = gap(c);
    if (std::abs(fc) <= 1e-13 || hi - lo <= 1e-16 * cmax) return {c, fc};
    if (fc > 0.0) {
      lo = c;
      flo = fc;
      if (side == 1) fhi *= 0.5;
      side = 1;
    } else {
      hi = c;
      fhi = fc;
      if (side == -1) flo *= 0.5;
      side = -1;
    }
  }
  return {c, fc};
}

RiskSolution solve_from_impl(const PopulationSpec& spec, double r0, double c0,
                             const QuadratureConfig& q) {
  spec.validate();
  if (!spec.loss.bounded_psi() && !spec.allow_unbounded_psi)
    throw ModelError(
        "risk: quadratic_test violates the bounded-psi assumption; set allow_unbounded_psi "
        "to override in tests");
  const double kappa = spec.kappa, tau = spec.tau, d = spec.discrepancy;
  const double cmax = kappa / tau;

  double r = std::max(r0, 0.0);
  InnerRoot root = solve_c_given_r(spec, r, q, c0);
  double c = root.c;

  RiskSolution sol;
  double best_gap = std::numeric_limits<double>::infinity();
  int stall = 0;
  int iters = 0;
  for (; iters < 150; ++iters) {
    const double e2 = expectations(spec, c, r, q, {true, false}).e2;
    const double res2 = kappa * e2 + tau * tau * d * d * c * c - kappa * kappa * r * r;
    if (std::max(std::abs(root.f), std::abs(res2)) <= 1e-8) {
      sol = {r, c, root.f, res2, iters + 1};
      return sol;
    }
    if (std::abs(res2) > 0.8 * best_gap) {
      if (++stall >= 6) break;
    } else {
      stall = 0;
    }
    best_gap = std::min(best_gap, std::abs(res2));
    const double rhs = (kappa * e2 + tau * tau * d * d * c * c) / (kappa * kappa);
    const double r_cand = std::sqrt(std::max(rhs, 0.0));
    r = 0.5 * r + 0.5 * r_cand;  // damped update, gamma = 1/2
    root = solve_c_given_r(spec, r, q, c);
    c = root.c;
  }

  // stall or slow linear phase: damped 2-D Newton with finite-difference Jacobian
  auto residuals = [&](double cc, double rr, double& f1, double& f2) {
    cc = std::clamp(cc, 0.0, cmax);
    rr = std::max(rr, 0.0);
    const EVals ev = expectations(spec, cc, rr, q, {true, false});
    f1 = ev.e1 - (1.0 - kappa + tau * cc);
    f2 = kappa * ev.e2 + tau * tau * d * d * cc * cc - kappa * kappa * rr * rr;
  };
  double f1, f2;
  residuals(c, r, f1, f2);
  const double fd = 1e-6;
  for (; iters < 200; ++iters) {
    if (std::max(std::abs(f1), std::abs(f2)) <= 1e-8) {
      sol = {r, c, f1, f2, iters + 1};
      return sol;
    }
    double f1c, f2c, f1r, f2r;
    residuals(c + fd, r, f1c, f2c);
    residuals(c, r + fd, f1r, f2r);
    const double j11 = (f1c - f1) / fd, j12 = (f1r - f1) / fd;
    const double j21 = (f2c - f2) / fd, j22 = (f2r - f2) / fd;
    const double det = j11 * j22 - j12 * j21;
    if (det == 0.0 || !std::isfinite(det)) break;
    const double dc = -(f1 * j22 - f2 * j12) / det;
    const double dr = -(j11 * f2 - j21 * f1) / det;
    const double norm0 = std::hypot(f1, f2);
    double t = 1.0;
    double nc = c, nr = r, nf1 = f1, nf2 = f2;
    for (int ls = 0; ls < 30; ++ls) {
      nc = std::clamp(c + t * dc, 0.0, cmax);
      nr = std::max(r + t * dr, 0.0);
      residuals(nc, nr, nf1, nf2);
      if (std::hypot(nf1, nf2) <= (1.0 - 1e-4 * t) * norm0) break;
      t *= 0.5;
    }
    if (std::hypot(nf1, nf2) >= norm0) break;  // no progress
    c = nc;
    r = nr;
    f1 = nf1;
    f2 = nf2;
  }
  if (std::max(std::abs(f1), std::abs(f2)) <= 1e-8) {
    return {r, c, f1, f2, iters + 1};
  }
  throw ConvergenceError("risk: outer iteration stopped at residuals (" + std::to_string(f1) +
                         ", " + std::to_string(f2) + ") with r = " + std::to_string(r) +
                         ", c = " + std::to_string(c));
}

double initial_r(const PopulationSpec& spec) {
  double proxy = 0.0;
  for (const auto& comp : spec.components) proxy += comp.weight * comp.eps.spread_proxy();
  double r0 = std::sqrt(spec.kappa) * proxy + spec.discrepancy;
  if (r0 <= 0.0) r0 = 1e-3;
  return r0;
}

}  // namespace

RiskSolution solve_risk_system_from(const PopulationSpec& spec, double r0, double c0,
                                    const QuadratureConfig& quad) {
  return solve_from_impl(spec, r0, c0, quad);
}

RiskSolution solve_risk_system(const PopulationSpec& spec, const QuadratureConfig& quad) {
  const double r0 = initial_r(spec);
  const RiskSolution base = solve_from_impl(spec, r0, -1.0, quad);
  if (spec.multi_start) {
    for (double mult : {0.25, 0.5, 2.0, 4.0}) {
      const RiskSolution other = solve_from_impl(spec, mult * r0, -1.0, quad);
      if (std::abs(other.r - base.r) > 1e-6)
        throw ModelError("risk: multi-start diagnostic found distinct solutions r = " +
                         std::to_string(base.r) + " vs " + std::to_string(other.r));
    }
  }
  return base;
}

RiskSolution source_risk(const PopulationSpec& spec, const QuadratureConfig& quad) {
  return solve_risk_system(spec, quad);
}

std::vector<CurvePoint> risk_curve(const PopulationSpec& spec, const std::vector<double>& d_grid,
                                   const QuadratureConfig& quad) {
  for (std::size_t i = 1; i < d_grid.size(); ++i)
    if (!(d_grid[i] >= d_grid[i - 1])) throw InputError("risk_curve: d_grid must be ascending");
  std::vector<CurvePoint> out;
  out.reserve(d_grid.size());
  double warm_r = -1.0, warm_c = -1.0;
  for (double d : d_grid) {
    PopulationSpec point_spec = spec;
    point_spec.discrepancy = d;
    CurvePoint pt;
    pt.discrepancy = d;
    try {
      pt.solution = warm_r > 0.0
                        ? solve_risk_system_from(point_spec, warm_r, warm_c, quad)
                        : solve_risk_system(point_spec, quad);
      pt.ok = true;
      warm_r = pt.solution.r;
      warm_c = pt.solution.c;
    } catch (const std::exception& e) {
      pt.ok = false;
      pt.error = e.what();
    }
    out.push_back(pt);
  }
  return out;
}

std::vector<MixtureComponent> case_mixture(const std::string& case_name, StudyRole role) {
  const bool src = role == StudyRole::source;
  const double g_sigma = src ? 2.0 : 1.0;
  const double c_scale = src ? 2.0 : 1.0;
  const MixtureComponent gauss_comp{1.0, ScalarDist::gaussian(g_sigma), ScalarDist::point_mass(1.0)};
  const MixtureComponent cauchy_comp{1.0, ScalarDist::cauchy(c_scale),
                                     ScalarDist::uniform(0.0, std::sqrt(3.0))};
  if (case_name == "I") return {gauss_comp};
  if (case_name == "II") return {cauchy_comp};
  if (case_name == "III") {
    auto a = gauss_comp, b = cauchy_comp;
    a.weight = 0.5;
    b.weight = 0.5;
    return {a, b};
  }
  throw InputError("case_mixture: unknown case '" + case_name + "'");
}

}  // namespace transrr
