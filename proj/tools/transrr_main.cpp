#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "transrr/config.hpp"
#include "transrr/errors.hpp"
#include "transrr/io.hpp"
#include "transrr/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace transrr;

namespace {

struct CliFlags {
  std::string config_path;
  std::string out_override;
  std::uint64_t seed_override = 0;
  bool have_seed = false;
  int threads = 0;
  bool full_scale = false;
};

std::string risk_header() {
  return "case,tau,kappa,discrepancy,r,c,residual1,residual2,iterations\n";
}

std::string risk_row(const std::string& case_name, double tau, double kappa, double d,
                     const RiskSolution& sol) {
  std::ostringstream row;
  row << case_name << ',' << format_double(tau) << ',' << format_double(kappa) << ','
      << format_double(d) << ',' << format_double(sol.r) << ',' << format_double(sol.c) << ','
      << format_double(sol.residual1) << ',' << format_double(sol.residual2) << ','
      << sol.iterations << '\n';
  return row.str();
}

std::string seed_comment(std::uint64_t seed) {
  return "# seed=" + std::to_string(seed) + "\n";
}

int effective_threads(int config_threads, const CliFlags& flags) {
  int t = flags.threads > 0 ? flags.threads : config_threads;
  if (t <= 0) t = static_cast<int>(std::thread::hardware_concurrency());
  return std::max(1, t);
}

int run_fit(FitConfig cfg, const CliFlags& flags) {
  if (flags.have_seed) cfg.seed = flags.seed_override;
  if (!flags.out_override.empty()) cfg.out = flags.out_override;

  const Dataset target = load_data_csv(cfg.target_csv);
  Dataset source;
  if (cfg.method != "single-rr") source = load_data_csv(cfg.source_csv);

  EstimatorConfig ecfg;
  ecfg.grad_tol = cfg.grad_tol;
  ecfg.max_iter = cfg.max_iter;

  const std::vector<double> grid = cfg.cv.grid.empty() ? default_tau_grid() : cfg.cv.grid;
  double tau = cfg.tau, tau1 = cfg.tau1;

  ordered_json diag;
  diag["method"] = cfg.method;
  diag["seed"] = cfg.seed;
  bool converged = true;
  Eigen::VectorXd coef;

  auto stage_json = [](const FitResult& fit) {
    return ordered_json{{"grad_norm", fit.grad_norm},
                        {"iterations", fit.iterations},
                        {"objective", fit.objective},
                        {"coef_norm", fit.coef.norm()}};
  };

  if (cfg.method == "trans-rr") {
    if (source.p() != target.p()) throw InputError("fit: source/target dimension mismatch");
    if (cfg.cv.enabled) {
      tau1 = cross_validate_tau(source, cfg.loss, grid, cfg.cv.folds, cfg.seed + 1, ecfg).tau;
    }
    ecfg.tau = tau1;
    auto [stage1, ok1] = fit_robust_ridge_noexcept(source, cfg.loss, ecfg);
    if (cfg.cv.enabled) {
      Dataset adjusted = target;
      adjusted.y -= adjusted.X * stage1.coef;
      tau = cross_validate_tau(adjusted, cfg.loss, grid, cfg.cv.folds, cfg.seed + 2, ecfg).tau;
    }
    ecfg.tau = tau;
    auto [stage2, ok2] = fit_robust_ridge_noexcept(target, cfg.loss, ecfg, &stage1.coef);
    converged = ok1 && ok2;
    coef = stage1.coef + stage2.coef;
    diag["stages"] = ordered_json{{"source", stage_json(stage1)}, {"target", stage_json(stage2)}};
    diag["tau1"] = tau1;
    diag["grad_norm"] = stage2.grad_norm;
    diag["iterations"] = stage1.iterations + stage2.iterations;
    diag["objective"] = stage2.objective;
  } else {
    const Dataset& data_single = target;
    Dataset pooled;
    const Dataset* data = &data_single;
    if (cfg.method == "pooled-rr") {
      pooled = stack(source, target);
      data = &pooled;
    }
    if (cfg.cv.enabled)
      tau = cross_validate_tau(*data, cfg.loss, grid, cfg.cv.folds, cfg.seed + 1, ecfg).tau;
    ecfg.tau = tau;
    auto [fit, ok] = fit_robust_ridge_noexcept(*data, cfg.loss, ecfg);
    converged = ok;
    coef = fit.coef;
    diag["grad_norm"] = fit.grad_norm;
    diag["iterations"] = fit.iterations;
    diag["objective"] = fit.objective;
  }
  diag["tau"] = tau;
  diag["converged"] = converged;
  if (cfg.cv.enabled) diag["cv_folds"] = cfg.cv.folds;

  std::ostringstream coef_csv;
  coef_csv << seed_comment(cfg.seed) << "index,coef\n";
  for (Eigen::Index j = 0; j < coef.size(); ++j)
    coef_csv << j << ',' << format_double(coef[j]) << '\n';
  atomic_write(fs::path(cfg.out) / "coefficients.csv", coef_csv.str());
  atomic_write(fs::path(cfg.out) / "diagnostics.json", diag.dump(2) + "\n");
  if (!converged) {
    std::cerr << "transrr fit: not converged; best iterate written to " << cfg.out << "\n";
    return 3;
  }
  return 0;
}

int run_risk(RiskConfig cfg, const CliFlags& flags) {
  if (flags.have_seed) cfg.seed = flags.seed_override;
  if (!flags.out_override.empty()) cfg.out = flags.out_override;
  const PopulationSpec spec = cfg.population.to_spec();
  const RiskSolution sol = solve_risk_system(spec);
  const std::string case_label =
      cfg.population.case_name.empty() ? "custom" : cfg.population.case_name;
  atomic_write(fs::path(cfg.out) / "risk.csv",
               seed_comment(cfg.seed) + risk_header() +
                   risk_row(case_label, spec.tau, spec.kappa, spec.discrepancy, sol));
  return 0;
}

int run_curve(CurveConfig cfg, const CliFlags& flags) {
  if (flags.have_seed) cfg.seed = flags.seed_override;
  if (!flags.out_override.empty()) cfg.out = flags.out_override;
  const std::string case_label =
      cfg.population.case_name.empty() ? "custom" : cfg.population.case_name;
  std::ostringstream csv;
  csv << seed_comment(cfg.seed) << risk_header();
  bool all_ok = true;
  for (double tau : cfg.tau_list) {
    PopulationConfig pc = cfg.population;
    pc.tau = tau;
    const PopulationSpec spec = pc.to_spec();
    for (const CurvePoint& pt : risk_curve(spec, cfg.d_grid)) {
      if (pt.ok) {
        csv << risk_row(case_label, tau, spec.kappa, pt.discrepancy, pt.solution);
      } else {
        all_ok = false;
        csv << case_label << ',' << format_double(tau) << ',' << format_double(spec.kappa)
            << ',' << format_double(pt.discrepancy) << ",failed,failed,failed,failed,0\n";
      }
    }
  }
  atomic_write(fs::path(cfg.out) / "curve.csv", csv.str());
  return all_ok ? 0 : 3;
}

int run_simulate(SimulateConfig cfg, const CliFlags& flags) {
  if (flags.have_seed) cfg.seed = flags.seed_override;
  if (!flags.out_override.empty()) cfg.out = flags.out_override;
  if (flags.full_scale) cfg.reps = std::max(cfg.reps, 1000);
  const int threads = effective_threads(cfg.threads, flags);

  CaseSpec spec;
  spec.case_name = cfg.case_name;
  spec.n = cfg.n;
  spec.p = cfg.p;
  spec.n1 = cfg.n1;
  spec.seed = cfg.seed;

  std::ostringstream reps_csv, summary_csv;
  reps_csv << seed_comment(cfg.seed) << "rep,method,sq_error,rel_error,realized_discrepancy\n";

  if (cfg.mode == "validation") {
    ValidationOptions opt;
    opt.tau = cfg.tau;
    opt.tau1 = cfg.tau1;
    opt.loss = cfg.loss;
    opt.reps = cfg.reps;
    opt.threads = threads;
    const ValidationRun run = run_validation(spec, opt);
    for (const auto& r : run.replicates) {
      if (!r.ok) continue;
      reps_csv << r.rep_index << ",trans-rr," << format_double(r.sq_error) << ','
               << format_double(r.rel_error) << ',' << format_double(r.realized_discrepancy)
               << '\n';
    }
    summary_csv << seed_comment(cfg.seed) << "# failures=" << run.failures << "\n"
                << "method,mean_sq,sd_sq,theory_r2\n"
                << "trans-rr," << format_double(run.mean_sq) << ',' << format_double(run.sd_sq)
                << ',' << format_double(run.theory_r2) << '\n';
  } else {
    CrossoverOptions opt;
    opt.loss = cfg.loss;
    opt.c_d_grid = cfg.c_d_grid;
    opt.tau_grid = cfg.cv_grid;
    opt.folds = cfg.folds;
    opt.reps = cfg.reps;
    opt.threads = threads;
    const CrossoverRun run = run_crossover(spec, opt);
    for (std::size_t i = 0; i < run.replicates.size(); ++i) {
      const auto& r = run.replicates[i];
      if (!r.ok) continue;
      reps_csv << r.rep_index << ',' << run.replicate_method[i] << ','
               << format_double(r.sq_error) << ',' << format_double(r.rel_error) << ','
               << format_double(r.realized_discrepancy) << '\n';
    }
    summary_csv << seed_comment(cfg.seed) << "# failures=" << run.failures << "\n"
                << "c_d,h,method,median_rel,q1,q3\n";
    for (const auto& cell : run.summary)
      summary_csv << format_double(cell.c_d) << ',' << format_double(cell.h) << ','
                  << cell.method << ',' << format_double(cell.median_rel) << ','
                  << format_double(cell.q1) << ',' << format_double(cell.q3) << '\n';
  }
  atomic_write(fs::path(cfg.out) / "replicates.csv", reps_csv.str());
  atomic_write(fs::path(cfg.out) / "summary.csv", summary_csv.str());
  return 0;
}

int run_bench(BenchConfig cfg, const CliFlags& flags) {
  if (flags.have_seed) cfg.seed = flags.seed_override;
  if (!flags.out_override.empty()) cfg.out = flags.out_override;
  using clock = std::chrono::steady_clock;
  std::ostringstream csv;
  csv << seed_comment(cfg.seed) << "component,value,seconds\n";

  const LossModel loss = LossModel::smoothed_huber();
  {
    const auto t0 = clock::now();
    double acc = 0.0;
    const int evals = 1'000'000;
    for (int k = 0; k < evals; ++k)
      acc += prox(loss, 1.0 + (k % 7) * 0.5, -20.0 + 40.0 * k / evals);
    const std::chrono::duration<double> dt = clock::now() - t0;
    csv << "prox_evals," << evals << ',' << format_double(dt.count()) << '\n';
    if (acc == 42.0) std::cerr << "";  // keep the loop alive
  }
  {
    CaseSpec spec{"I", cfg.n, cfg.p, 2 * cfg.n, cfg.seed};
    const CoefficientDesign design = make_diffuse_design(spec);
    Dataset source, target;
    generate_case(spec, design, 0, source, target);
    const auto t0 = clock::now();
    const TransFit fit = trans_rr(source, target, loss, loss, 1.0, 1.0, {});
    const std::chrono::duration<double> dt = clock::now() - t0;
    csv << "trans_rr_fit," << fit.combined.iterations << ',' << format_double(dt.count())
        << '\n';
  }
  {
    const PopulationSpec spec = case_population("II", StudyRole::target, 1.0, 1.0, 0.5, loss);
    const auto t0 = clock::now();
    const RiskSolution sol = solve_risk_system(spec);
    const std::chrono::duration<double> dt = clock::now() - t0;
    csv << "risk_solve_case_II," << sol.iterations << ',' << format_double(dt.count()) << '\n';
  }
  if (cfg.out.empty())
    std::cout << csv.str();
  else
    atomic_write(fs::path(cfg.out) / "bench.csv", csv.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"transfer learning for moderate-dimensional ridge-regularized robust regression"};
  app.require_subcommand(1);

  CliFlags flags;
  const std::vector<std::string> names = {"fit", "risk", "curve", "simulate", "bench"};
  for (const auto& name : names) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", flags.config_path, "JSON run configuration");
    sub->add_option("--seed", flags.seed_override, "override the config seed")
        ->each([&](const std::string&) { flags.have_seed = true; });
    sub->add_option("--out", flags.out_override, "override the output directory");
    sub->add_option("--threads", flags.threads, "worker threads (speed only, never results)");
    sub->add_flag("--full-scale", flags.full_scale, "full-size replication counts (reps >= 1000)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    RunConfig rc;
    if (flags.config_path.empty()) {
      if (command != "bench") throw InputError("--config is required for " + command);
      rc.command = "bench";
      rc.payload = BenchConfig{};
    } else {
      rc = load_config(flags.config_path);
      if (rc.command != command)
        throw InputError("config command '" + rc.command + "' does not match subcommand '" +
                         command + "'");
    }
    if (command == "fit") return run_fit(std::get<FitConfig>(rc.payload), flags);
    if (command == "risk") return run_risk(std::get<RiskConfig>(rc.payload), flags);
    if (command == "curve") return run_curve(std::get<CurveConfig>(rc.payload), flags);
    if (command == "simulate") return run_simulate(std::get<SimulateConfig>(rc.payload), flags);
    return run_bench(std::get<BenchConfig>(rc.payload), flags);
  } catch (const InputError& e) {
    std::cerr << "transrr: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "transrr: " << e.what() << "\n";
    return 3;
  }
}
