#include "transrr/simulation.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <thread>

#include "transrr/errors.hpp"
#include "transrr/rng.hpp"

namespace transrr {

void CaseSpec::validate() const {
  if (case_name != "I" && case_name != "II" && case_name != "III")
    throw InputError("case: must be one of I, II, III");
  if (n < 1 || p < 1 || n1 < 1) throw InputError("case: n, p, n1 must be >= 1");
}

namespace {

// rows [0, split) follow the Case-I recipe, rows [split, n) the Case-II one
int case1_rows(const std::string& case_name, int n) {
  if (case_name == "I") return n;
  if (case_name == "II") return 0;
  return (n + 1) / 2;  // Case III: odd counts give the extra row to the Case-I block
}

void fill_study(const std::string& case_name, int n, int p, const Eigen::VectorXd& coef,
                double gauss_sigma, double cauchy_scale, std::uint64_t seed, std::uint64_t rep,
                StreamRole design_role, StreamRole noise_role, StreamRole scale_role,
                Dataset& out) {
  RngStream design(seed, design_role, rep);
  RngStream noise(seed, noise_role, rep);
  RngStream scale(seed, scale_role, rep);

  out.X.resize(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) out.X(i, j) = design.normal();

  const int n1block = case1_rows(case_name, n);
  Eigen::VectorXd eps(n);
  for (int i = 0; i < n; ++i) {
    if (i < n1block) {
      eps[i] = gauss_sigma * noise.normal();
    } else {
      out.X.row(i) *= scale.uniform(0.0, std::sqrt(3.0));
      eps[i] = noise.cauchy(cauchy_scale);
    }
  }
  out.y = out.X * coef + eps;
}

double quantile_type7(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double h = (static_cast<double>(v.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= v.size()) return v.back();
  return v[lo] + (h - lo) * (v[lo + 1] - v[lo]);
}

void parallel_for(int count, int threads, const std::function<void(int)>& body) {
  if (threads <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic_int next{0};
  std::vector<std::thread> pool;
  const int nw = std::min(threads, count);
  pool.reserve(nw);
  for (int w = 0; w < nw; ++w)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) body(i);
    });
  for (auto& t : pool) t.join();
}

}  // namespace

CoefficientDesign make_diffuse_design(const CaseSpec& spec) {
  spec.validate();
  CoefficientDesign d;
  d.mode = CoefficientDesign::Mode::diffuse_table1;
  RngStream beta_rng(spec.seed, StreamRole::coef_beta);
  RngStream w_rng(spec.seed, StreamRole::coef_w);
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(spec.n));
  d.beta0.resize(spec.p);
  d.w0.resize(spec.p);
  for (int j = 0; j < spec.p; ++j) d.beta0[j] = beta_rng.uniform() * inv_sqrt_n;
  for (int j = 0; j < spec.p; ++j) d.w0[j] = w_rng.uniform() * inv_sqrt_n;
  return d;
}

CoefficientDesign make_crossover_design(const CaseSpec& spec, double c_d) {
  spec.validate();
  CoefficientDesign d;
  d.mode = CoefficientDesign::Mode::crossover;
  d.c_d = c_d;
  RngStream beta_rng(spec.seed, StreamRole::coef_beta);
  d.beta0.resize(spec.p);
  for (int j = 0; j < spec.p; ++j) d.beta0[j] = beta_rng.uniform();
  d.beta0 /= d.beta0.norm();
  const double shift = std::exp(c_d) / std::sqrt(static_cast<double>(spec.p));
  d.w0 = d.beta0.array() - shift;
  return d;
}

void generate_case(const CaseSpec& spec, const CoefficientDesign& design, std::uint64_t rep,
                   Dataset& source, Dataset& target) {
  spec.validate();
  if (design.beta0.size() != spec.p || design.w0.size() != spec.p)
    throw InputError("generate_case: design dimension mismatch");
  fill_study(spec.case_name, spec.n, spec.p, design.beta0, 1.0, 1.0, spec.seed, rep,
             StreamRole::target_design, StreamRole::target_noise, StreamRole::target_scale,
             target);
  fill_study(spec.case_name, spec.n1, spec.p, design.w0, 2.0, 2.0, spec.seed, rep,
             StreamRole::source_design, StreamRole::source_noise, StreamRole::source_scale,
             source);
}

PopulationSpec case_population(const std::string& case_name, StudyRole role, double kappa,
                               double tau, double discrepancy, const LossModel& loss) {
  PopulationSpec spec;
  spec.kappa = kappa;
  spec.tau = tau;
  spec.discrepancy = discrepancy;
  spec.components = case_mixture(case_name, role);
  spec.loss = loss;
  return spec;
}

ValidationRun run_validation(const CaseSpec& spec, const ValidationOptions& opt) {
  spec.validate();
  if (opt.reps < 2) throw InputError("run_validation: reps must be >= 2");
  const CoefficientDesign design = make_diffuse_design(spec);
  const double kappa = static_cast<double>(spec.p) / spec.n;

  ValidationRun run;
  run.replicates.assign(opt.reps, {});

  EstimatorConfig cfg;
  parallel_for(opt.reps, opt.threads, [&](int rep) {
    ReplicateResult& res = run.replicates[rep];
    res.rep_index = rep;
    try {
      Dataset source, target;
      generate_case(spec, design, static_cast<std::uint64_t>(rep), source, target);
      const TransFit fit =
          trans_rr(source, target, opt.loss, opt.loss, opt.tau1, opt.tau, cfg);
      res.sq_error = (fit.combined.coef - design.beta0).squaredNorm();
      res.rel_error = res.sq_error / design.beta0.squaredNorm();
      res.realized_discrepancy = (design.beta0 - fit.stage1.coef).norm();
      res.ok = true;
    } catch (const std::exception& e) {
      res.ok = false;
      res.error = e.what();
    }
  });

  if (opt.with_theory) {
    // warm-start every per-replicate solve from one base solution so the
    // result is independent of worker scheduling
    const ReplicateResult* first_ok = nullptr;
    for (const auto& r : run.replicates)
      if (r.ok) {
        first_ok = &r;
        break;
      }
    if (first_ok) {
      const PopulationSpec base_spec =
          case_population(spec.case_name, StudyRole::target, kappa, opt.tau,
                          first_ok->realized_discrepancy, opt.loss);
      const RiskSolution base = solve_risk_system(base_spec);
      parallel_for(opt.reps, opt.threads, [&](int rep) {
        ReplicateResult& res = run.replicates[rep];
        if (!res.ok) return;
        try {
          PopulationSpec s = base_spec;
          s.discrepancy = res.realized_discrepancy;
          const RiskSolution sol = solve_risk_system_from(s, base.r, base.c);
          res.theory_r2 = sol.r * sol.r;
        } catch (const std::exception& e) {
          res.ok = false;
          res.error = e.what();
        }
      });
    }
  }

  double sum = 0.0, theory_sum = 0.0;
  int ok = 0;
  for (const auto& r : run.replicates) {
    if (!r.ok) {
      ++run.failures;
      continue;
    }
    sum += r.sq_error;
    theory_sum += r.theory_r2;
    ++ok;
  }
  if (run.failures * 20 > opt.reps)
    throw ConvergenceError("run_validation: " + std::to_string(run.failures) + " of " +
                           std::to_string(opt.reps) + " replicates failed");
  run.mean_sq = sum / ok;
  run.theory_r2 = theory_sum / ok;
  double ss = 0.0;
  for (const auto& r : run.replicates)
    if (r.ok) ss += (r.sq_error - run.mean_sq) * (r.sq_error - run.mean_sq);
  run.sd_sq = ok > 1 ? std::sqrt(ss / (ok - 1)) : 0.0;
  return run;
}

CrossoverRun run_crossover(const CaseSpec& spec, const CrossoverOptions& opt) {
  spec.validate();
  if (opt.c_d_grid.empty()) throw InputError("run_crossover: empty c_d grid");
  if (opt.reps < 1) throw InputError("run_crossover: reps must be >= 1");
  const std::vector<double> grid =
      opt.tau_grid.empty() ? default_tau_grid() : opt.tau_grid;

  CrossoverRun run;
  const EstimatorConfig cfg;
  static const std::vector<std::string> methods = {"single-rr", "trans-rr", "pooled-rr"};

  for (std::size_t cdi = 0; cdi < opt.c_d_grid.size(); ++cdi) {
    const double c_d = opt.c_d_grid[cdi];
    const CoefficientDesign design = make_crossover_design(spec, c_d);
    const double beta_norm2 = design.beta0.squaredNorm();

    // ridge weights tuned once per (c_d, method): mean CV-MAE tables over a
    // few dedicated tuning replicates (indices >= reps, never reused for
    // evaluation), ties broken toward the largest tau
    const int tune_reps = 3;
    const std::uint64_t cv_seed = splitmix64_mix(spec.seed ^ (0x51E * cdi + 7));
    std::vector<double> mae_single(grid.size(), 0.0), mae_tau1(grid.size(), 0.0),
        mae_trans(grid.size(), 0.0), mae_pooled(grid.size(), 0.0);
    auto add_tables = [&](std::vector<double>& acc, const CvResult& cv) {
      for (std::size_t g = 0; g < grid.size(); ++g) acc[g] += cv.table[g].second;
    };
    auto pick = [&](const std::vector<double>& acc) {
      double best = acc[0];
      double tau = grid[0];
      for (std::size_t g = 1; g < grid.size(); ++g)
        if (acc[g] < best || (acc[g] == best && grid[g] > tau)) {
          best = acc[g];
          tau = grid[g];
        }
      return tau;
    };
    for (int tr = 0; tr < tune_reps; ++tr) {
      Dataset tune_source, tune_target;
      generate_case(spec, design, static_cast<std::uint64_t>(opt.reps + tr), tune_source,
                    tune_target);
      add_tables(mae_single, cross_validate_tau(tune_target, opt.loss, grid, opt.folds,
                                                cv_seed + 4 * tr, cfg, opt.threads));
      add_tables(mae_tau1, cross_validate_tau(tune_source, opt.loss, grid, opt.folds,
                                              cv_seed + 4 * tr + 1, cfg, opt.threads));
      add_tables(mae_pooled,
                 cross_validate_tau(stack(tune_source, tune_target), opt.loss, grid, opt.folds,
                                    cv_seed + 4 * tr + 3, cfg, opt.threads));
    }
    const double tau_single = pick(mae_single);
    const double tau1_trans = pick(mae_tau1);
    for (int tr = 0; tr < tune_reps; ++tr) {
      Dataset tune_source, tune_target;
      generate_case(spec, design, static_cast<std::uint64_t>(opt.reps + tr), tune_source,
                    tune_target);
      const FitResult tune_w = single_rr(tune_source, opt.loss, tau1_trans, cfg);
      Dataset tune_offset = tune_target;
      tune_offset.y -= tune_offset.X * tune_w.coef;
      add_tables(mae_trans, cross_validate_tau(tune_offset, opt.loss, grid, opt.folds,
                                               cv_seed + 4 * tr + 2, cfg, opt.threads));
    }
    const double tau_trans = pick(mae_trans);
    const double tau_pooled = pick(mae_pooled);

    std::vector<std::array<ReplicateResult, 3>> cell(opt.reps);
    parallel_for(opt.reps, opt.threads, [&](int rep) {
      Dataset source, target;
      generate_case(spec, design, static_cast<std::uint64_t>(rep), source, target);
      for (int mi = 0; mi < 3; ++mi) {
        ReplicateResult& res = cell[rep][mi];
        res.rep_index = rep;
        res.realized_discrepancy = std::exp(c_d);
        try {
          Eigen::VectorXd coef;
          if (mi == 0) {
            coef = single_rr(target, opt.loss, tau_single, cfg).coef;
          } else if (mi == 1) {
            coef = trans_rr(source, target, opt.loss, opt.loss, tau1_trans, tau_trans, cfg)
                       .combined.coef;
          } else {
            coef = pooled_rr(source, target, opt.loss, tau_pooled, cfg).coef;
          }
          res.sq_error = (coef - design.beta0).squaredNorm();
          res.rel_error = res.sq_error / beta_norm2;
          res.ok = true;
        } catch (const std::exception& e) {
          res.ok = false;
          res.error = e.what();
        }
      }
    });

    for (int mi = 0; mi < 3; ++mi) {
      std::vector<double> rels;
      for (int rep = 0; rep < opt.reps; ++rep) {
        const ReplicateResult& res = cell[rep][mi];
        run.replicates.push_back(res);
        run.replicate_method.push_back(methods[mi]);
        run.replicate_cd.push_back(c_d);
        if (res.ok)
          rels.push_back(res.rel_error);
        else
          ++run.failures;
      }
      if (rels.size() * 20 < static_cast<std::size_t>(opt.reps) * 19)
        throw ConvergenceError("run_crossover: too many failures at c_d = " +
                               std::to_string(c_d) + " for " + methods[mi]);
      CrossoverCell summary;
      summary.c_d = c_d;
      summary.h = std::exp(c_d);
      summary.method = methods[mi];
      summary.median_rel = quantile_type7(rels, 0.5);
      summary.q1 = quantile_type7(rels, 0.25);
      summary.q3 = quantile_type7(rels, 0.75);
      summary.tau = mi == 0 ? tau_single : (mi == 1 ? tau_trans : tau_pooled);
      summary.tau1 = mi == 1 ? tau1_trans : 0.0;
      run.summary.push_back(summary);
    }
  }
  return run;
}

std::vector<CurveRow> run_curves(const std::string& case_name, StudyRole role, double kappa,
                                 const LossModel& loss, const std::vector<double>& tau_list,
                                 const std::vector<double>& d_grid) {
  std::vector<CurveRow> rows;
  for (double tau : tau_list) {
    const PopulationSpec spec = case_population(case_name, role, kappa, tau, 0.0, loss);
    for (const CurvePoint& pt : risk_curve(spec, d_grid)) {
      CurveRow row;
      row.case_name = case_name;
      row.tau = tau;
      row.discrepancy = pt.discrepancy;
      row.solution = pt.solution;
      row.ok = pt.ok;
      row.error = pt.error;
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace transrr
