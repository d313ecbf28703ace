#pragma once

#include <string>

namespace transrr {

enum class LossKind { smoothed_huber, pseudo_huber, quadratic_test };

/// Robust loss ρ with derivatives ψ = ρ' and ψ'.
///
/// smoothed_huber is Huber's loss with a cubic blend of width eta on
/// (delta-eta, delta) so that ψ' is Lipschitz. pseudo_huber is
/// δ²(√(1+x²/δ²)−1). quadratic_test is x²/2; its ψ is unbounded, so the
/// asymptotic risk solver rejects it unless explicitly overridden (it exists
/// to make closed-form oracles possible in tests).
struct LossModel {
  LossKind kind = LossKind::smoothed_huber;
  double delta = 1.35;
  double eta = 0.1;  // smoothing width; only meaningful for smoothed_huber

  static LossModel smoothed_huber(double delta = 1.35, double eta = 0.1);
  static LossModel pseudo_huber(double delta = 1.35);
  static LossModel quadratic_test();

  /// Throws InputError when the parameters are invalid (delta <= 0, or
  /// eta outside (0, delta) for smoothed_huber).
  void validate() const;

  double rho(double x) const;
  double psi(double x) const;
  double psi_prime(double x) const;

  /// sup_x |ψ(x)|: delta - eta/2 for smoothed_huber, delta for pseudo_huber,
  /// +inf for quadratic_test.
  double psi_max() const;
  bool bounded_psi() const { return kind != LossKind::quadratic_test; }

  std::string kind_name() const;
};

LossKind loss_kind_from_name(const std::string& name);

/// prox(cρ)(x): the unique y with y + c·ψ(y) = x, c >= 0.
double prox(const LossModel& loss, double c, double x);

/// d/dx prox(cρ)(x) = 1 / (1 + c ψ'(prox)); always in (0, 1].
double prox_deriv_x(const LossModel& loss, double c, double x);

/// d/dc prox(cρ)(x) = -ψ(prox) / (1 + c ψ'(prox)); sign opposite to x.
double prox_deriv_c(const LossModel& loss, double c, double x);

}  // namespace transrr
