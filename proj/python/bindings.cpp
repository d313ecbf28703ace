#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "transrr/estimator.hpp"
#include "transrr/loss.hpp"
#include "transrr/risk.hpp"
#include "transrr/simulation.hpp"
#include "transrr/whiten.hpp"

namespace py = pybind11;
using namespace transrr;

namespace {

Dataset make_dataset(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  Dataset d{X, y};
  d.validate();
  return d;
}

template <typename F>
Eigen::ArrayXd map_array(const Eigen::ArrayXd& x, F f) {
  Eigen::ArrayXd out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  return out;
}

}  // namespace

PYBIND11_MODULE(_transrr, m) {
  m.doc() = "transfer learning for moderate-dimensional ridge-regularized robust regression";

  py::class_<LossModel>(m, "LossModel")
      .def_static("smoothed_huber", &LossModel::smoothed_huber, py::arg("delta") = 1.35,
                  py::arg("eta") = 0.1)
      .def_static("pseudo_huber", &LossModel::pseudo_huber, py::arg("delta") = 1.35)
      .def_static("quadratic_test", &LossModel::quadratic_test)
      .def("rho", [](const LossModel& l, double x) { return l.rho(x); })
      .def("rho", [](const LossModel& l, const Eigen::ArrayXd& x) {
        return map_array(x, [&](double v) { return l.rho(v); });
      })
      .def("psi", [](const LossModel& l, double x) { return l.psi(x); })
      .def("psi", [](const LossModel& l, const Eigen::ArrayXd& x) {
        return map_array(x, [&](double v) { return l.psi(v); });
      })
      .def("psi_prime", [](const LossModel& l, double x) { return l.psi_prime(x); })
      .def("psi_prime", [](const LossModel& l, const Eigen::ArrayXd& x) {
        return map_array(x, [&](double v) { return l.psi_prime(v); });
      })
      .def("psi_max", &LossModel::psi_max)
      .def("__repr__", [](const LossModel& l) { return "LossModel(" + l.kind_name() + ")"; });

  m.def("prox", [](const LossModel& l, double c, double x) { return prox(l, c, x); },
        py::arg("loss"), py::arg("c"), py::arg("x"));
  m.def("prox",
        [](const LossModel& l, double c, const Eigen::ArrayXd& x) {
          return map_array(x, [&](double v) { return prox(l, c, v); });
        },
        py::arg("loss"), py::arg("c"), py::arg("x"));
  m.def("prox_deriv_x",
        [](const LossModel& l, double c, double x) { return prox_deriv_x(l, c, x); },
        py::arg("loss"), py::arg("c"), py::arg("x"));
  m.def("prox_deriv_x",
        [](const LossModel& l, double c, const Eigen::ArrayXd& x) {
          return map_array(x, [&](double v) { return prox_deriv_x(l, c, v); });
        },
        py::arg("loss"), py::arg("c"), py::arg("x"));
  m.def("prox_deriv_c",
        [](const LossModel& l, double c, double x) { return prox_deriv_c(l, c, x); },
        py::arg("loss"), py::arg("c"), py::arg("x"));
  m.def("prox_deriv_c",
        [](const LossModel& l, double c, const Eigen::ArrayXd& x) {
          return map_array(x, [&](double v) { return prox_deriv_c(l, c, v); });
        },
        py::arg("loss"), py::arg("c"), py::arg("x"));

  py::class_<FitResult>(m, "FitResult")
      .def_readonly("coef", &FitResult::coef)
      .def_readonly("grad_norm", &FitResult::grad_norm)
      .def_readonly("iterations", &FitResult::iterations)
      .def_readonly("objective", &FitResult::objective);

  py::class_<TransFit>(m, "TransFit")
      .def_readonly("combined", &TransFit::combined)
      .def_readonly("stage1", &TransFit::stage1)
      .def_readonly("stage2", &TransFit::stage2);

  m.def(
      "fit_robust_ridge",
      [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const LossModel& loss, double tau,
         std::optional<Eigen::VectorXd> offset, double grad_tol, int max_iter) {
        EstimatorConfig cfg{tau, grad_tol, max_iter};
        return fit_robust_ridge(make_dataset(X, y), loss, cfg,
                                offset ? &offset.value() : nullptr);
      },
      py::arg("X"), py::arg("y"), py::arg("loss"), py::arg("tau"),
      py::arg("offset") = std::nullopt, py::arg("grad_tol") = 0.0, py::arg("max_iter") = 500);

  m.def(
      "single_rr",
      [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const LossModel& loss, double tau) {
        return single_rr(make_dataset(X, y), loss, tau, {});
      },
      py::arg("X"), py::arg("y"), py::arg("loss"), py::arg("tau"));

  m.def(
      "trans_rr",
      [](const Eigen::MatrixXd& Xs, const Eigen::VectorXd& ys, const Eigen::MatrixXd& Xt,
         const Eigen::VectorXd& yt, const LossModel& loss, double tau1, double tau) {
        return trans_rr(make_dataset(Xs, ys), make_dataset(Xt, yt), loss, loss, tau1, tau, {});
      },
      py::arg("X_source"), py::arg("y_source"), py::arg("X_target"), py::arg("y_target"),
      py::arg("loss"), py::arg("tau1"), py::arg("tau"));

  m.def(
      "pooled_rr",
      [](const Eigen::MatrixXd& Xs, const Eigen::VectorXd& ys, const Eigen::MatrixXd& Xt,
         const Eigen::VectorXd& yt, const LossModel& loss, double tau) {
        return pooled_rr(make_dataset(Xs, ys), make_dataset(Xt, yt), loss, tau, {});
      },
      py::arg("X_source"), py::arg("y_source"), py::arg("X_target"), py::arg("y_target"),
      py::arg("loss"), py::arg("tau"));

  m.def(
      "cross_validate_tau",
      [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const LossModel& loss,
         const std::vector<double>& grid, int folds, std::uint64_t seed) {
        const CvResult res = cross_validate_tau(make_dataset(X, y), loss,
                                                grid.empty() ? default_tau_grid() : grid, folds,
                                                seed, {});
        return py::make_tuple(res.tau, res.table);
      },
      py::arg("X"), py::arg("y"), py::arg("loss"), py::arg("grid") = std::vector<double>{},
      py::arg("folds") = 5, py::arg("seed") = 0);

  py::class_<WhitenTransform>(m, "WhitenTransform")
      .def_readonly("x_mean", &WhitenTransform::x_mean)
      .def_readonly("inv_sqrt_cov", &WhitenTransform::inv_sqrt_cov)
      .def_readonly("y_mean", &WhitenTransform::y_mean)
      .def(
          "apply",
          [](const WhitenTransform& t, const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
            const Dataset out = t.apply(make_dataset(X, y));
            return py::make_tuple(out.X, out.y);
          },
          py::arg("X"), py::arg("y"));

  m.def(
      "fit_whitener",
      [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
        return fit_whitener(make_dataset(X, y));
      },
      py::arg("X"), py::arg("y"));

  py::class_<ScalarDist>(m, "ScalarDist")
      .def_static("point_mass", &ScalarDist::point_mass)
      .def_static("gaussian", &ScalarDist::gaussian)
      .def_static("cauchy", &ScalarDist::cauchy)
      .def_static("uniform", &ScalarDist::uniform)
      .def("__repr__", [](const ScalarDist& d) { return "ScalarDist(" + d.name() + ")"; });

  py::class_<MixtureComponent>(m, "MixtureComponent")
      .def(py::init([](double weight, const ScalarDist& eps, const ScalarDist& lam) {
             return MixtureComponent{weight, eps, lam};
           }),
           py::arg("weight"), py::arg("eps"), py::arg("lam"))
      .def_readwrite("weight", &MixtureComponent::weight);

  py::class_<PopulationSpec>(m, "PopulationSpec")
      .def(py::init([](double kappa, double tau, double discrepancy,
                       const std::vector<MixtureComponent>& components, const LossModel& loss,
                       bool allow_unbounded_psi, bool multi_start) {
             PopulationSpec spec{kappa, tau, discrepancy, components, loss,
                                 allow_unbounded_psi, multi_start};
             spec.validate();
             return spec;
           }),
           py::arg("kappa"), py::arg("tau"), py::arg("discrepancy"), py::arg("components"),
           py::arg("loss"), py::arg("allow_unbounded_psi") = false,
           py::arg("multi_start") = false)
      .def_readwrite("kappa", &PopulationSpec::kappa)
      .def_readwrite("tau", &PopulationSpec::tau)
      .def_readwrite("discrepancy", &PopulationSpec::discrepancy);

  py::class_<RiskSolution>(m, "RiskSolution")
      .def_readonly("r", &RiskSolution::r)
      .def_readonly("c", &RiskSolution::c)
      .def_readonly("residual1", &RiskSolution::residual1)
      .def_readonly("residual2", &RiskSolution::residual2)
      .def_readonly("iterations", &RiskSolution::iterations)
      .def("__repr__", [](const RiskSolution& s) {
        return "RiskSolution(r=" + std::to_string(s.r) + ", c=" + std::to_string(s.c) + ")";
      });

  m.def("expectation_E1",
        [](const PopulationSpec& spec, double c, double r) { return expectation_E1(spec, c, r); },
        py::arg("spec"), py::arg("c"), py::arg("r"));
  m.def("expectation_E2",
        [](const PopulationSpec& spec, double c, double r) { return expectation_E2(spec, c, r); },
        py::arg("spec"), py::arg("c"), py::arg("r"));
  m.def("solve_risk_system",
        [](const PopulationSpec& spec) { return solve_risk_system(spec); }, py::arg("spec"));
  m.def("source_risk", [](const PopulationSpec& spec) { return source_risk(spec); },
        py::arg("spec"));
  m.def(
      "risk_curve",
      [](const PopulationSpec& spec, const std::vector<double>& d_grid) {
        std::vector<py::tuple> rows;
        for (const CurvePoint& pt : risk_curve(spec, d_grid))
          rows.push_back(py::make_tuple(pt.discrepancy, pt.solution, pt.ok));
        return rows;
      },
      py::arg("spec"), py::arg("d_grid"));

  m.def(
      "case_population",
      [](const std::string& case_name, const std::string& role, double kappa, double tau,
         double discrepancy, const LossModel& loss) {
        return case_population(case_name,
                               role == "source" ? StudyRole::source : StudyRole::target, kappa,
                               tau, discrepancy, loss);
      },
      py::arg("case_name"), py::arg("role"), py::arg("kappa"), py::arg("tau"),
      py::arg("discrepancy"), py::arg("loss"));

  m.def(
      "generate_case",
      [](const std::string& case_name, int n, int p, int n1, std::uint64_t seed,
         std::uint64_t rep, const std::string& design_mode, double c_d) {
        CaseSpec spec{case_name, n, p, n1, seed};
        const CoefficientDesign design = design_mode == "crossover"
                                             ? make_crossover_design(spec, c_d)
                                             : make_diffuse_design(spec);
        Dataset source, target;
        generate_case(spec, design, rep, source, target);
        return py::make_tuple(source.X, source.y, target.X, target.y, design.beta0, design.w0);
      },
      py::arg("case_name"), py::arg("n"), py::arg("p"), py::arg("n1"), py::arg("seed"),
      py::arg("rep") = 0, py::arg("design_mode") = "diffuse", py::arg("c_d") = 0.0);
}
