#include <cmath>
#include <limits>

#include <doctest.h>

#include "transrr/errors.hpp"
#include "transrr/loss.hpp"
#include "transrr/risk.hpp"
#include "transrr/rng.hpp"

using namespace transrr;

namespace {

const LossModel kHuber = LossModel::smoothed_huber(1.35, 0.1);

PopulationSpec single_component(double kappa, double tau, double d, const ScalarDist& eps,
                                const ScalarDist& lam, const LossModel& loss,
                                bool override_psi = false) {
  PopulationSpec spec;
  spec.kappa = kappa;
  spec.tau = tau;
  spec.discrepancy = d;
  spec.components = {{1.0, eps, lam}};
  spec.loss = loss;
  spec.allow_unbounded_psi = override_psi;
  return spec;
}

double draw_from(const ScalarDist& dist, RngStream& rng) {
  switch (dist.kind) {
    case ScalarDist::Kind::point_mass: return dist.a;
    case ScalarDist::Kind::gaussian: return dist.a * rng.normal();
    case ScalarDist::Kind::cauchy: return rng.cauchy(dist.a);
    case ScalarDist::Kind::uniform: return rng.uniform(dist.a, dist.b);
  }
  return 0.0;
}

struct McEstimate {
  double mean = 0.0;
  double se = 0.0;
};

// Monte Carlo oracle for E1 / E2 over the mixture
McEstimate mc_expectation(const PopulationSpec& spec, double c, double r, bool second,
                          long draws, std::uint64_t seed) {
  RngStream rng(seed, StreamRole::generic);
  double sum = 0.0, sumsq = 0.0;
  for (long k = 0; k < draws; ++k) {
    const double u = rng.uniform();
    double acc = 0.0;
    const MixtureComponent* comp = &spec.components.back();
    for (const auto& candidate : spec.components) {
      acc += candidate.weight;
      if (u < acc) {
        comp = &candidate;
        break;
      }
    }
    const double lam = draw_from(comp->lam, rng);
    const double eps = draw_from(comp->eps, rng);
    const double w = eps + r * lam * rng.normal();
    const double s = c * lam * lam;
    double value;
    if (second) {
      const double psi_y = spec.loss.psi(prox(spec.loss, s, w));
      value = c * c * lam * lam * psi_y * psi_y;
    } else {
      value = prox_deriv_x(spec.loss, s, w);
    }
    sum += value;
    sumsq += value * value;
  }
  McEstimate est;
  est.mean = sum / draws;
  est.se = std::sqrt(std::max(0.0, sumsq / draws - est.mean * est.mean) / draws);
  return est;
}

}  // namespace

TEST_CASE("E1 trivial values") {
  const auto quad = single_component(1.0, 1.0, 0.0, ScalarDist::gaussian(1.0),
                                     ScalarDist::point_mass(1.0), LossModel::quadratic_test(),
                                     true);
  CHECK(expectation_E1(quad, 0.7, 0.3) == doctest::Approx(1.0 / 1.7).epsilon(1e-12));
  const auto huber = single_component(1.0, 1.0, 0.0, ScalarDist::gaussian(1.0),
                                      ScalarDist::point_mass(1.0), kHuber);
  CHECK(expectation_E1(huber, 0.0, 0.5) == 1.0);
  const double v = expectation_E1(huber, 0.5, 0.5);
  CHECK(v > 0.0);
  CHECK(v < 1.0);
}

TEST_CASE("E1 against a 10^7-draw Monte Carlo oracle (gaussian case)") {
  const auto spec = single_component(1.0, 1.0, 0.0, ScalarDist::gaussian(1.0),
                                     ScalarDist::point_mass(1.0), kHuber);
  const double quadrature = expectation_E1(spec, 0.5, 0.5);
  const McEstimate mc = mc_expectation(spec, 0.5, 0.5, false, 10'000'000, 404);
  CHECK(std::abs(quadrature - mc.mean) <= 3.0 * mc.se);
}

TEST_CASE("E1/E2 against Monte Carlo under the heavy-tailed mixture") {
  const auto spec = single_component(1.0, 1.0, 0.0, ScalarDist::cauchy(1.0),
                                     ScalarDist::uniform(0.0, std::sqrt(3.0)), kHuber);
  for (auto [c, r] : {std::pair{0.4, 0.9}, std::pair{0.9, 0.4}}) {
    const double e1 = expectation_E1(spec, c, r);
    const McEstimate mc1 = mc_expectation(spec, c, r, false, 4'000'000, 505);
    CHECK(std::abs(e1 - mc1.mean) <= 4.0 * mc1.se);
    const double e2 = expectation_E2(spec, c, r);
    const McEstimate mc2 = mc_expectation(spec, c, r, true, 4'000'000, 606);
    CHECK(std::abs(e2 - mc2.mean) <= 4.0 * mc2.se);
  }
}

TEST_CASE("E2 trivial and closed-form values") {
  const auto huber = single_component(1.0, 1.0, 0.0, ScalarDist::gaussian(1.0),
                                      ScalarDist::point_mass(1.0), kHuber);
  CHECK(expectation_E2(huber, 0.0, 0.7) == 0.0);

  const auto quad = single_component(1.0, 1.0, 0.0, ScalarDist::gaussian(1.3),
                                     ScalarDist::point_mass(1.0), LossModel::quadratic_test(),
                                     true);
  const double c = 0.8, r = 0.6;
  const double expected = (c / (1 + c)) * (c / (1 + c)) * (1.3 * 1.3 + r * r);
  CHECK(expectation_E2(quad, c, r) == doctest::Approx(expected).epsilon(1e-12));

  // psi-form is bounded by c^2 E[lam^2] psi_max^2 for bounded-psi losses
  const auto heavy = single_component(1.0, 1.0, 0.0, ScalarDist::cauchy(2.0),
                                      ScalarDist::uniform(0.0, std::sqrt(3.0)), kHuber);
  const double bound = c * c * 1.0 * kHuber.psi_max() * kHuber.psi_max();
  CHECK(expectation_E2(heavy, c, 1.0) <= bound * (1.0 + 1e-12));
}

TEST_CASE("two-form identity across random specs with lambda bounded away from 0") {
  RngStream rng(777, StreamRole::generic);
  for (int k = 0; k < 20; ++k) {
    const double lam_lo = rng.uniform(0.3, 0.8);
    const ScalarDist lam = (k % 2 == 0)
                               ? ScalarDist::point_mass(rng.uniform(0.5, 1.6))
                               : ScalarDist::uniform(lam_lo, lam_lo + rng.uniform(0.2, 1.0));
    ScalarDist eps = ScalarDist::gaussian(rng.uniform(0.4, 2.0));
    if (k % 3 == 1) eps = ScalarDist::cauchy(rng.uniform(0.5, 2.0));
    if (k % 3 == 2) eps = ScalarDist::uniform(-1.5, 1.5);
    const auto spec = single_component(1.0, 1.0, 0.0, eps, lam,
                                       (k % 4 == 3) ? LossModel::pseudo_huber(1.0) : kHuber);
    const double c = rng.uniform(0.05, 2.0);
    const double r = rng.uniform(0.0, 2.0);
    const double psi_form = expectation_E2(spec, c, r);
    const double direct = expectation_E2_direct(spec, c, r);
    CHECK(std::abs(psi_form - direct) <= 1e-8);
  }
  // and the direct form refuses lambda laws touching zero
  const auto bad = single_component(1.0, 1.0, 0.0, ScalarDist::gaussian(1.0),
                                    ScalarDist::uniform(0.0, 1.0), kHuber);
  CHECK_THROWS_AS(expectation_E2_direct(bad, 0.5, 0.5), ModelError);
}

TEST_CASE("golden quadratic-loss solutions") {
  // kappa = tau = sigma = 1, D = 0: eq1 gives c^2 + c - 1 = 0, then
  // r^2 = q / (1 - q) with q = (c/(1+c))^2
  auto spec = single_component(1.0, 1.0, 0.0, ScalarDist::gaussian(1.0),
                               ScalarDist::point_mass(1.0), LossModel::quadratic_test(), true);
  const RiskSolution d0 = solve_risk_system(spec);
  CHECK(d0.c == doctest::Approx(0.6180339887498949).epsilon(1e-9));
  CHECK(d0.r * d0.r == doctest::Approx(0.17082039324993691).epsilon(1e-8));
  CHECK(std::abs(d0.residual1) <= 1e-8);
  CHECK(std::abs(d0.residual2) <= 1e-8);

  spec.discrepancy = 1.0;
  const RiskSolution d1 = solve_risk_system(spec);
  CHECK(d1.r * d1.r == doctest::Approx(0.6180339887498948).epsilon(1e-8));

  // source-stage parameterization: kappa1 = 0.5, tau1 = 1, sigma = 2, D = 0
  // eq1: tau c^2 + (1 - kappa + tau) c - kappa = 0  =>  c = (sqrt(17) - 3) / 4
  // eq2: r^2 = q sigma^2 / (kappa - q)
  auto src = single_component(0.5, 1.0, 0.0, ScalarDist::gaussian(2.0),
                              ScalarDist::point_mass(1.0), LossModel::quadratic_test(), true);
  const RiskSolution s = source_risk(src);
  CHECK(s.c == doctest::Approx(0.2807764064044151).epsilon(1e-7));
  // residual2 <= 1e-8 with kappa = 0.5 allows ~4e-8 slack in r^2
  CHECK(std::abs(s.r * s.r - 0.42535625036332974) <= 1e-7);
}

TEST_CASE("solver rejects unbounded psi without the override") {
  auto spec = single_component(1.0, 1.0, 0.0, ScalarDist::gaussian(1.0),
                               ScalarDist::point_mass(1.0), LossModel::quadratic_test(), false);
  CHECK_THROWS_AS(solve_risk_system(spec), ModelError);
}

TEST_CASE("weight-mixture consistency") {
  PopulationSpec two;
  two.kappa = 1.0;
  two.tau = 1.0;
  two.discrepancy = 0.3;
  two.loss = kHuber;
  two.components = {{0.5, ScalarDist::gaussian(1.0), ScalarDist::point_mass(1.0)},
                    {0.5, ScalarDist::gaussian(1.0), ScalarDist::point_mass(1.0)}};
  const auto one = single_component(1.0, 1.0, 0.3, ScalarDist::gaussian(1.0),
                                    ScalarDist::point_mass(1.0), kHuber);
  const RiskSolution a = solve_risk_system(two);
  const RiskSolution b = solve_risk_system(one);
  CHECK(a.r == doctest::Approx(b.r).epsilon(1e-12));
  CHECK(a.c == doctest::Approx(b.c).epsilon(1e-12));
}

TEST_CASE("case mixtures solve with tight residuals and bracketed c") {
  for (const std::string& name : {"I", "II", "III"}) {
    const PopulationSpec spec{1.0, 1.0, 0.5, case_mixture(name, StudyRole::target), kHuber};
    const RiskSolution sol = solve_risk_system(spec);
    CHECK(std::abs(sol.residual1) <= 1e-8);
    CHECK(std::abs(sol.residual2) <= 1e-8);
    CHECK(sol.c >= 0.0);
    CHECK(sol.c <= spec.kappa / spec.tau + 1e-9);
    CHECK(sol.r > 0.0);
  }
}

TEST_CASE("equation-1 gap is strictly decreasing in c") {
  for (const std::string& name : {"I", "II"}) {
    const PopulationSpec spec{1.0, 1.0, 0.0, case_mixture(name, StudyRole::target), kHuber};
    const double r = 0.7;
    double prev = std::numeric_limits<double>::infinity();
    for (double c = 0.05; c <= 1.0; c += 0.05) {
      const double gap = expectation_E1(spec, c, r) - (1.0 - spec.kappa + spec.tau * c);
      CHECK(gap < prev);
      prev = gap;
    }
  }
}

TEST_CASE("quadrature doubling stability at the solution") {
  for (const std::string& name : {"I", "II", "III"}) {
    const PopulationSpec spec{1.0, 1.0, 0.5, case_mixture(name, StudyRole::target), kHuber};
    const RiskSolution sol = solve_risk_system(spec);
    QuadratureConfig doubled;
    doubled.node_scale = 2.0;
    CHECK(std::abs(expectation_E1(spec, sol.c, sol.r) -
                   expectation_E1(spec, sol.c, sol.r, doubled)) < 1e-9);
    CHECK(std::abs(expectation_E2(spec, sol.c, sol.r) -
                   expectation_E2(spec, sol.c, sol.r, doubled)) < 1e-9);
  }
}

TEST_CASE("lambda = 0 component is safe in both equations") {
  PopulationSpec spec;
  spec.kappa = 1.0;
  spec.tau = 1.0;
  spec.discrepancy = 0.0;
  spec.loss = kHuber;
  spec.components = {{0.5, ScalarDist::gaussian(1.0), ScalarDist::point_mass(0.0)},
                     {0.5, ScalarDist::gaussian(1.0), ScalarDist::point_mass(1.0)}};
  const auto ref = single_component(1.0, 1.0, 0.0, ScalarDist::gaussian(1.0),
                                    ScalarDist::point_mass(1.0), kHuber);
  const double c = 0.6, r = 0.8;
  // the lam = 0 component contributes exactly weight * 1 to E1 and 0 to E2
  CHECK(expectation_E1(spec, c, r) ==
        doctest::Approx(0.5 + 0.5 * expectation_E1(ref, c, r)).epsilon(1e-12));
  CHECK(expectation_E2(spec, c, r) ==
        doctest::Approx(0.5 * expectation_E2(ref, c, r)).epsilon(1e-12));
  CHECK(std::isfinite(expectation_E2(spec, c, r)));
}

TEST_CASE("degenerate noise: r tracks sigma down to the noiseless limit") {
  double prev_r = std::numeric_limits<double>::infinity();
  for (double sigma : {0.5, 0.2, 0.05, 0.01}) {
    const auto spec = single_component(0.5, 1.0, 0.0, ScalarDist::gaussian(sigma),
                                       ScalarDist::point_mass(1.0), kHuber);
    const RiskSolution sol = solve_risk_system(spec);
    CHECK(std::abs(sol.residual2) <= 1e-8);
    CHECK(sol.r < prev_r);
    prev_r = sol.r;
  }
  CHECK(prev_r < 0.02);
}

TEST_CASE("risk_curve warm chain") {
  const auto quad = single_component(1.0, 1.0, 0.0, ScalarDist::gaussian(1.0),
                                     ScalarDist::point_mass(1.0), LossModel::quadratic_test(),
                                     true);
  const auto pts = risk_curve(quad, {0.0});
  REQUIRE(pts.size() == 1);
  CHECK(pts[0].ok);
  CHECK(pts[0].solution.r * pts[0].solution.r ==
        doctest::Approx(0.17082039324993691).epsilon(1e-8));

  // closed form: r^2(D) = (q + c^2 D^2) / (1 - q) strictly increasing in D
  std::vector<double> d_grid;
  for (int k = 0; k <= 10; ++k) d_grid.push_back(0.3 * k);
  double prev = -1.0;
  for (const auto& pt : risk_curve(quad, d_grid)) {
    REQUIRE(pt.ok);
    const double q = 0.14589803375031546, c = 0.6180339887498949;
    const double expected =
        (q + c * c * pt.discrepancy * pt.discrepancy) / (1.0 - q);
    CHECK(pt.solution.r * pt.solution.r == doctest::Approx(expected).epsilon(1e-7));
    CHECK(pt.solution.r > prev);
    prev = pt.solution.r;
  }

  const PopulationSpec huber_spec{1.0, 1.0, 0.0, case_mixture("I", StudyRole::target), kHuber};
  prev = -1.0;
  for (const auto& pt : risk_curve(huber_spec, {0.0, 0.5, 1.0, 1.5, 2.0})) {
    REQUIRE(pt.ok);
    CHECK(pt.solution.r > prev);
    prev = pt.solution.r;
  }

  CHECK_THROWS_AS(risk_curve(quad, {1.0, 0.5}), InputError);
}

TEST_CASE("multi-start diagnostic agrees on the standard case") {
  PopulationSpec spec{1.0, 1.0, 0.5, case_mixture("I", StudyRole::target), kHuber};
  spec.multi_start = true;
  const RiskSolution sol = solve_risk_system(spec);
  CHECK(std::abs(sol.residual2) <= 1e-8);
}

TEST_CASE("pseudo-huber population solves") {
  const auto spec = single_component(1.0, 1.0, 0.3, ScalarDist::gaussian(1.0),
                                     ScalarDist::point_mass(1.0), LossModel::pseudo_huber(1.35));
  const RiskSolution sol = solve_risk_system(spec);
  CHECK(std::abs(sol.residual1) <= 1e-8);
  CHECK(std::abs(sol.residual2) <= 1e-8);
}

TEST_CASE("spec validation errors") {
  PopulationSpec spec{0.0, 1.0, 0.0, case_mixture("I", StudyRole::target), kHuber};
  CHECK_THROWS_AS(spec.validate(), InputError);
  spec.kappa = 1.0;
  spec.components[0].weight = 0.7;  // weights no longer sum to 1
  CHECK_THROWS_AS(spec.validate(), InputError);
  CHECK_THROWS_AS(ScalarDist::gaussian(-1.0).validate(), InputError);
  CHECK_THROWS_AS(ScalarDist::uniform(2.0, 1.0).validate(), InputError);
  CHECK_THROWS_AS(expectation_E1(single_component(1, 1, 0, ScalarDist::gaussian(1.0),
                                                  ScalarDist::point_mass(1.0), kHuber),
                                 -0.1, 0.5),
                  InputError);
}
