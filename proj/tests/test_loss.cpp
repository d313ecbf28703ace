#include <cmath>

#include <doctest.h>

#include "transrr/errors.hpp"
#include "transrr/loss.hpp"
#include "transrr/rng.hpp"

using namespace transrr;

namespace {

// independent root finder for the prox contract: plain bisection on
// y + c psi(y) = x over a bracket wide enough for any bounded psi
double prox_bisect(const LossModel& loss, double c, double x) {
  double span = loss.bounded_psi() ? c * loss.psi_max() + 1.0 : std::abs(x) + 1.0;
  double lo = x - span, hi = x + span;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid + c * loss.psi(mid) - x > 0.0)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

// Simpson integration of psi, used as the stated oracle for rho values
double integrate_psi(const LossModel& loss, double hi) {
  const int n = 20000;
  double acc = 0.0;
  const double h = hi / n;
  for (int k = 0; k < n; ++k) {
    const double a = k * h, b = a + h;
    acc += (loss.psi(a) + 4.0 * loss.psi(0.5 * (a + b)) + loss.psi(b)) * h / 6.0;
  }
  return acc;
}

const LossModel kHuber = LossModel::smoothed_huber(1.35, 0.1);

}  // namespace

TEST_CASE("rho piecewise values") {
  CHECK(kHuber.rho(0.0) == 0.0);
  CHECK(kHuber.rho(0.5) == doctest::Approx(0.125).epsilon(1e-15));
  // linear branch: (delta - eta/2)*|x| + C_rho with C_rho = -eta^2/6 + eta*delta/2 - delta^2/2
  CHECK(kHuber.rho(2.0) == doctest::Approx(1.7545833333333333).epsilon(1e-14));
  CHECK(kHuber.rho(2.0) == doctest::Approx(integrate_psi(kHuber, 2.0)).epsilon(1e-10));
  CHECK(LossModel::pseudo_huber(1.0).rho(0.0) == 0.0);
  // continuity across both breakpoints
  for (double x : {1.25, 1.35}) {
    CHECK(kHuber.rho(x - 1e-9) == doctest::Approx(kHuber.rho(x + 1e-9)).epsilon(1e-8));
  }
}

TEST_CASE("psi branch values") {
  CHECK(kHuber.psi(1.0) == 1.0);
  CHECK(kHuber.psi(5.0) == doctest::Approx(1.3).epsilon(1e-15));
  CHECK(kHuber.psi(1.3) == doctest::Approx(1.2875).epsilon(1e-15));
  CHECK(LossModel::pseudo_huber(1.0).psi_prime(0.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(kHuber.psi_prime(0.0) == 1.0);
  CHECK(kHuber.psi_prime(10.0) == 0.0);
}

TEST_CASE("invalid parameters rejected") {
  LossModel bad{LossKind::smoothed_huber, 1.35, 1.35};
  CHECK_THROWS_AS(bad.validate(), InputError);
  LossModel bad2{LossKind::smoothed_huber, -1.0, 0.1};
  CHECK_THROWS_AS(bad2.validate(), InputError);
  LossModel bad3{LossKind::pseudo_huber, 0.0, 0.0};
  CHECK_THROWS_AS(bad3.validate(), InputError);
  CHECK_THROWS_AS(prox(kHuber, -1.0, 0.0), InputError);
  CHECK_THROWS_AS(prox(kHuber, 1.0, std::nan("")), InputError);
}

TEST_CASE("prox closed-form spot checks") {
  CHECK(prox(kHuber, 0.0, 3.7) == 3.7);
  CHECK(prox(LossModel::quadratic_test(), 1.0, 2.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(prox(kHuber, 1.0, 10.0) == doctest::Approx(8.7).epsilon(1e-14));
  CHECK(prox(kHuber, 1.0, 10.0) == doctest::Approx(prox_bisect(kHuber, 1.0, 10.0)).epsilon(1e-12));
  CHECK(prox(kHuber, 1.0, 2.0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("prox derivative spot checks") {
  CHECK(prox_deriv_x(kHuber, 0.0, 0.37) == 1.0);
  CHECK(prox_deriv_x(LossModel::quadratic_test(), 1.0, 5.3) == doctest::Approx(0.5));
  CHECK(prox_deriv_x(kHuber, 2.0, 10.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(prox_deriv_c(kHuber, 1.0, 0.0) == 0.0);
  CHECK(prox_deriv_c(LossModel::quadratic_test(), 1.0, 2.0) == doctest::Approx(-0.5));
  CHECK(prox_deriv_c(kHuber, 1.0, 10.0) == doctest::Approx(-1.3).epsilon(1e-12));
}

TEST_CASE("prox contract on the (c, x) grid") {
  for (const LossModel& loss :
       {kHuber, LossModel::pseudo_huber(1.0), LossModel::quadratic_test()}) {
    for (double c : {0.0, 0.1, 0.5, 1.0, 5.0}) {
      double prev = -1e300;
      for (double x = -20.0; x <= 20.0 + 1e-9; x += 0.25) {
        const double y = prox(loss, c, x);
        CHECK(std::abs(y + c * loss.psi(y) - x) <= 1e-10);
        CHECK(y >= prev);  // monotone in x
        CHECK(std::abs(y) <= std::abs(x) + 1e-15);
        if (x != 0.0) CHECK(y * x >= 0.0);
        CHECK(loss.rho(x) - loss.rho(-x) == 0.0);
        CHECK(loss.psi(x) + loss.psi(-x) == 0.0);
        prev = y;
      }
    }
  }
}

TEST_CASE("derivatives match central finite differences") {
  RngStream rng(2024, StreamRole::generic);
  for (const LossModel& loss :
       {kHuber, LossModel::pseudo_huber(1.0), LossModel::quadratic_test()}) {
    int checked = 0;
    while (checked < 100) {
      const double c = rng.uniform(0.05, 4.0);
      const double x = rng.uniform(-8.0, 8.0);
      // keep clear of the non-smooth loci of psi' (prox image near the knees)
      if (loss.kind == LossKind::smoothed_huber) {
        const double y = prox(loss, c, x);
        const double ay = std::abs(y);
        if (std::abs(ay - (loss.delta - loss.eta)) < 0.02 || std::abs(ay - loss.delta) < 0.02)
          continue;
      }
      const double h = 1e-6;
      const double fd_x = (prox(loss, c, x + h) - prox(loss, c, x - h)) / (2 * h);
      const double fd_c = (prox(loss, c + h, x) - prox(loss, c - h, x)) / (2 * h);
      CHECK(prox_deriv_x(loss, c, x) ==
            doctest::Approx(fd_x).epsilon(1e-5).scale(std::max(1.0, std::abs(fd_x))));
      CHECK(prox_deriv_c(loss, c, x) ==
            doctest::Approx(fd_c).epsilon(1e-5).scale(std::max(1.0, std::abs(fd_c))));
      ++checked;
    }
  }
}

TEST_CASE("psi and psi' match finite differences of rho and psi") {
  RngStream rng(7, StreamRole::generic);
  const double lipschitz = 1.0 / kHuber.eta;
  for (int k = 0; k < 200; ++k) {
    const double x = rng.uniform(-6.0, 6.0);
    const double h = 1e-6;
    CHECK(kHuber.psi(x) ==
          doctest::Approx((kHuber.rho(x + h) - kHuber.rho(x - h)) / (2 * h)).epsilon(1e-6));
    CHECK(kHuber.psi_prime(x) ==
          doctest::Approx((kHuber.psi(x + h) - kHuber.psi(x - h)) / (2 * h))
              .epsilon(1e-5)
              .scale(1.0));
    const double x2 = rng.uniform(-6.0, 6.0);
    if (x2 != x)
      CHECK(std::abs(kHuber.psi_prime(x) - kHuber.psi_prime(x2)) <=
            (lipschitz + 1e-6) * std::abs(x - x2));
  }
}

TEST_CASE("saturation bound of psi") {
  for (double x = -30.0; x <= 30.0; x += 0.1)
    CHECK(std::abs(kHuber.psi(x)) <= 1.3 + 1e-15);
  CHECK(std::abs(kHuber.psi(1.35)) == doctest::Approx(1.3));
  CHECK(std::abs(kHuber.psi(100.0)) == doctest::Approx(1.3));
  CHECK(!LossModel::quadratic_test().bounded_psi());
  CHECK(std::isinf(LossModel::quadratic_test().psi_max()));
}
