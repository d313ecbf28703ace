#include "transrr/estimator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include <Eigen/Cholesky>

#include "transrr/errors.hpp"
#include "transrr/rng.hpp"

namespace transrr {

namespace {

double objective_of(const Eigen::VectorXd& resid, const LossModel& loss, double tau,
                    const Eigen::VectorXd& b) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < resid.size(); ++i) s += loss.rho(resid[i]);
  return s / static_cast<double>(resid.size()) + 0.5 * tau * b.squaredNorm();
}

struct SolveState {
  Eigen::VectorXd b, resid, grad;
  double objective = 0.0;
};

void eval_gradient(const Dataset& data, const LossModel& loss, double tau, SolveState& st) {
  const double n = static_cast<double>(data.n());
  Eigen::VectorXd psi_r(data.n());
  for (Eigen::Index i = 0; i < data.n(); ++i) psi_r[i] = loss.psi(st.resid[i]);
  st.grad.noalias() = -(data.X.transpose() * psi_r) / n;
  st.grad += tau * st.b;
}

}  // namespace

std::pair<FitResult, bool> fit_robust_ridge_noexcept(const Dataset& data, const LossModel& loss,
                                                     const EstimatorConfig& cfg,
                                                     const Eigen::VectorXd* offset) {
  data.validate();
  loss.validate();
  if (!(cfg.tau > 0.0)) throw InputError("fit: tau must be > 0");
  if (cfg.max_iter < 1) throw InputError("fit: max_iter must be >= 1");
  if (offset && offset->size() != data.p())
    throw InputError("fit: offset length " + std::to_string(offset->size()) +
                     " does not match p = " + std::to_string(data.p()));

  const Eigen::Index n = data.n(), p = data.p();
  const double n_inv = 1.0 / static_cast<double>(n);

  SolveState st;
  st.b = Eigen::VectorXd::Zero(p);
  st.resid = offset ? (data.y - data.X * (*offset)).eval() : data.y;
  eval_gradient(data, loss, cfg.tau, st);
  st.objective = objective_of(st.resid, loss, cfg.tau, st.b);

  const double tol =
      cfg.grad_tol > 0.0 ? cfg.grad_tol : 1e-8 * std::max(1.0, st.grad.norm());

  Eigen::VectorXd weights(n), step(p), prev_b, prev_grad;
  Eigen::MatrixXd hessian(p, p), scaled(n, p);
  int it = 0;
  for (; it < cfg.max_iter; ++it) {
    if (st.grad.norm() <= tol) break;

    bool have_step = false;
    for (Eigen::Index i = 0; i < n; ++i)
      weights[i] = std::sqrt(std::max(0.0, loss.psi_prime(st.resid[i])) * n_inv);
    scaled = weights.asDiagonal() * data.X;
    hessian.setZero();
    hessian.selfadjointView<Eigen::Lower>().rankUpdate(scaled.transpose());
    hessian.diagonal().array() += cfg.tau;
    Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>> llt(hessian);
    if (llt.info() == Eigen::Success) {
      step = llt.solve(-st.grad);
      have_step = step.allFinite();
    }
    if (!have_step) {
      // Barzilai–Borwein fallback
      double bb = 1.0 / (1.0 + cfg.tau);
      if (it > 0) {
        const Eigen::VectorXd sb = st.b - prev_b, sg = st.grad - prev_grad;
        const double denom = sg.squaredNorm();
        if (denom > 0.0) bb = std::abs(sb.dot(sg)) / denom;
      }
      step = -bb * st.grad;
    }

    const double slope = st.grad.dot(step);
    const Eigen::VectorXd x_step = data.X * step;
    prev_b = st.b;
    prev_grad = st.grad;

    // once the predicted decrease drops below the objective's floating-point
    // resolution, Armijo can no longer measure progress; trust the (damped)
    // Newton step and track the gradient norm instead
    if (-slope <= 1e-13 * std::max(1.0, std::abs(st.objective))) {
      SolveState trial = st;
      trial.b = st.b + step;
      trial.resid = st.resid - x_step;
      trial.objective = objective_of(trial.resid, loss, cfg.tau, trial.b);
      eval_gradient(data, loss, cfg.tau, trial);
      if (trial.grad.norm() >= st.grad.norm()) break;  // numerical floor
      st = trial;
      continue;
    }

    // backtracking Armijo line search on the objective
    double t = 1.0;
    SolveState trial = st;
    for (;;) {
      trial.b = st.b + t * step;
      trial.resid = st.resid - t * x_step;
      trial.objective = objective_of(trial.resid, loss, cfg.tau, trial.b);
      if (trial.objective <= st.objective + 1e-4 * t * slope || t < 1e-14) break;
      t *= 0.5;
    }
    st.b = trial.b;
    st.resid = trial.resid;
    st.objective = trial.objective;
    eval_gradient(data, loss, cfg.tau, st);
  }

  FitResult out;
  out.coef = st.b;
  out.grad_norm = st.grad.norm();
  out.iterations = it;
  out.objective = st.objective;
  return {out, out.grad_norm <= tol};
}

FitResult fit_robust_ridge(const Dataset& data, const LossModel& loss,
                           const EstimatorConfig& cfg, const Eigen::VectorXd* offset) {
  auto [result, converged] = fit_robust_ridge_noexcept(data, loss, cfg, offset);
  if (!converged)
    throw ConvergenceError("fit: gradient norm " + std::to_string(result.grad_norm) +
                           " after " + std::to_string(result.iterations) + " iterations");
  return result;
}

TransFit trans_rr(const Dataset& source, const Dataset& target, const LossModel& loss_source,
                  const LossModel& loss_target, double tau1, double tau,
                  const EstimatorConfig& cfg) {
  if (source.p() != target.p())
    throw InputError("trans_rr: source and target dimension mismatch");
  TransFit fit;
  EstimatorConfig cfg1 = cfg;
  cfg1.tau = tau1;
  try {
    fit.stage1 = fit_robust_ridge(source, loss_source, cfg1);
  } catch (const ConvergenceError& e) {
    throw ConvergenceError(std::string("trans_rr stage 1 (source): ") + e.what());
  }
  EstimatorConfig cfg2 = cfg;
  cfg2.tau = tau;
  try {
    fit.stage2 = fit_robust_ridge(target, loss_target, cfg2, &fit.stage1.coef);
  } catch (const ConvergenceError& e) {
    throw ConvergenceError(std::string("trans_rr stage 2 (target): ") + e.what());
  }
  fit.combined = fit.stage2;
  fit.combined.coef = fit.stage1.coef + fit.stage2.coef;
  fit.combined.iterations = fit.stage1.iterations + fit.stage2.iterations;
  return fit;
}

FitResult single_rr(const Dataset& target, const LossModel& loss, double tau,
                    const EstimatorConfig& cfg) {
  EstimatorConfig c = cfg;
  c.tau = tau;
  return fit_robust_ridge(target, loss, c);
}

FitResult pooled_rr(const Dataset& source, const Dataset& target, const LossModel& loss,
                    double tau, const EstimatorConfig& cfg) {
  if (source.n() == 0) return single_rr(target, loss, tau, cfg);
  EstimatorConfig c = cfg;
  c.tau = tau;
  const Dataset pooled = stack(source, target);
  return fit_robust_ridge(pooled, loss, c);
}

std::vector<double> default_tau_grid() {
  std::vector<double> grid;
  for (int k = -8; k <= 2; ++k) grid.push_back(std::pow(10.0, 0.5 * k));
  return grid;
}

CvResult cross_validate_tau(const Dataset& data, const LossModel& loss,
                            const std::vector<double>& grid, int folds, std::uint64_t seed,
                            const EstimatorConfig& base, int threads) {
  data.validate();
  if (grid.empty()) throw InputError("cv: empty tau grid");
  if (folds < 2) throw InputError("cv: folds must be >= 2");
  const Eigen::Index n = data.n();
  if (n < folds) throw InputError("cv: n < folds");

  // seeded permutation, contiguous blocks, remainder spread from the first fold
  std::vector<Eigen::Index> perm(n);
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  RngStream rng(seed, StreamRole::cv_folds);
  for (Eigen::Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Eigen::Index>(rng.next_u64() % static_cast<std::uint64_t>(i + 1));
    std::swap(perm[i], perm[j]);
  }
  const Eigen::Index block = n / folds, rem = n % folds;
  std::vector<std::vector<Eigen::Index>> fold_idx(folds);
  Eigen::Index pos = 0;
  for (int f = 0; f < folds; ++f) {
    const Eigen::Index len = block + (f < rem ? 1 : 0);
    fold_idx[f].assign(perm.begin() + pos, perm.begin() + pos + len);
    pos += len;
  }

  const int g = static_cast<int>(grid.size());
  std::vector<std::vector<double>> mae(folds, std::vector<double>(g, 0.0));

  auto run_fold = [&](int f) {
    const auto& val = fold_idx[f];
    Dataset train, holdout;
    train.X.resize(n - static_cast<Eigen::Index>(val.size()), data.p());
    train.y.resize(train.X.rows());
    holdout.X.resize(static_cast<Eigen::Index>(val.size()), data.p());
    holdout.y.resize(holdout.X.rows());
    std::vector<char> in_val(n, 0);
    for (auto i : val) in_val[i] = 1;
    Eigen::Index ti = 0, vi = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (in_val[i]) {
        holdout.X.row(vi) = data.X.row(i);
        holdout.y[vi++] = data.y[i];
      } else {
        train.X.row(ti) = data.X.row(i);
        train.y[ti++] = data.y[i];
      }
    }
    for (int k = 0; k < g; ++k) {
      EstimatorConfig cfg = base;
      cfg.tau = grid[k];
      auto [fit, ok] = fit_robust_ridge_noexcept(train, loss, cfg);
      (void)ok;  // a non-converged fold fit still scores; the objective is convex
      const Eigen::VectorXd pred = holdout.X * fit.coef;
      mae[f][k] = (holdout.y - pred).cwiseAbs().mean();
    }
  };

  if (threads > 1 && folds > 1) {
    std::vector<std::thread> pool;
    std::atomic_int next{0};
    const int nw = std::min(threads, folds);
    for (int w = 0; w < nw; ++w)
      pool.emplace_back([&] {
        for (int f = next.fetch_add(1); f < folds; f = next.fetch_add(1)) run_fold(f);
      });
    for (auto& t : pool) t.join();
  } else {
    for (int f = 0; f < folds; ++f) run_fold(f);
  }

  CvResult out;
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < g; ++k) {
    double m = 0.0;
    for (int f = 0; f < folds; ++f) m += mae[f][k];
    m /= folds;
    out.table.emplace_back(grid[k], m);
    if (m < best || (m == best && grid[k] > out.tau)) {
      best = m;
      out.tau = grid[k];
    }
  }
  return out;
}

}  // namespace transrr
