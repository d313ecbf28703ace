#include "transrr/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "transrr/errors.hpp"

namespace transrr {

using json = nlohmann::ordered_json;

namespace {

void require_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw InputError("config: " + where + " must be an object");
  for (const auto& item : obj.items())
    if (!allowed.count(item.key()))
      throw InputError("config: unknown key '" + item.key() + "' in " + where);
}

template <typename T>
T get_or(const json& obj, const std::string& key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InputError("config: bad value for '" + key + "': " + e.what());
  }
}

LossModel parse_loss(const json& obj, const std::string& where) {
  require_keys(obj, where, {"kind", "delta", "eta"});
  LossModel loss;
  loss.kind = loss_kind_from_name(get_or<std::string>(obj, "kind", "smoothed_huber"));
  loss.delta = get_or<double>(obj, "delta", 1.35);
  loss.eta = get_or<double>(obj, "eta", 0.1);
  loss.validate();
  return loss;
}

json dump_loss(const LossModel& loss) {
  return json{{"kind", loss.kind_name()}, {"delta", loss.delta}, {"eta", loss.eta}};
}

ScalarDist parse_dist(const json& obj, const std::string& where) {
  require_keys(obj, where, {"kind", "value", "sigma", "scale", "lo", "hi"});
  const auto kind = get_or<std::string>(obj, "kind", "");
  ScalarDist d;
  if (kind == "point_mass") {
    d = ScalarDist::point_mass(get_or<double>(obj, "value", 0.0));
  } else if (kind == "gaussian") {
    d = ScalarDist::gaussian(get_or<double>(obj, "sigma", 1.0));
  } else if (kind == "cauchy") {
    d = ScalarDist::cauchy(get_or<double>(obj, "scale", 1.0));
  } else if (kind == "uniform") {
    d = ScalarDist::uniform(get_or<double>(obj, "lo", 0.0), get_or<double>(obj, "hi", 1.0));
  } else {
    throw InputError("config: unknown distribution kind '" + kind + "' in " + where);
  }
  d.validate();
  return d;
}

json dump_dist(const ScalarDist& d) {
  switch (d.kind) {
    case ScalarDist::Kind::point_mass: return json{{"kind", "point_mass"}, {"value", d.a}};
    case ScalarDist::Kind::gaussian: return json{{"kind", "gaussian"}, {"sigma", d.a}};
    case ScalarDist::Kind::cauchy: return json{{"kind", "cauchy"}, {"scale", d.a}};
    case ScalarDist::Kind::uniform: return json{{"kind", "uniform"}, {"lo", d.a}, {"hi", d.b}};
  }
  return {};
}

PopulationConfig parse_population(const json& obj) {
  require_keys(obj, "population",
               {"kappa", "tau", "discrepancy", "loss", "case", "role", "components",
                "allow_unbounded_psi", "multi_start"});
  PopulationConfig pc;
  pc.kappa = get_or<double>(obj, "kappa", 1.0);
  pc.tau = get_or<double>(obj, "tau", 1.0);
  pc.discrepancy = get_or<double>(obj, "discrepancy", 0.0);
  if (obj.contains("loss")) pc.loss = parse_loss(obj.at("loss"), "population.loss");
  pc.case_name = get_or<std::string>(obj, "case", "");
  pc.role = get_or<std::string>(obj, "role", "target");
  if (pc.role != "target" && pc.role != "source")
    throw InputError("config: population.role must be 'target' or 'source'");
  if (obj.contains("components")) {
    if (!obj.at("components").is_array())
      throw InputError("config: population.components must be an array");
    for (const auto& comp : obj.at("components")) {
      require_keys(comp, "population.components[]", {"weight", "eps", "lam"});
      MixtureComponent mc;
      mc.weight = get_or<double>(comp, "weight", 1.0);
      if (!comp.contains("eps") || !comp.contains("lam"))
        throw InputError("config: mixture component needs 'eps' and 'lam'");
      mc.eps = parse_dist(comp.at("eps"), "component.eps");
      mc.lam = parse_dist(comp.at("lam"), "component.lam");
      pc.components.push_back(mc);
    }
  }
  if (pc.case_name.empty() && pc.components.empty())
    throw InputError("config: population needs either 'case' or 'components'");
  pc.allow_unbounded_psi = get_or<bool>(obj, "allow_unbounded_psi", false);
  pc.multi_start = get_or<bool>(obj, "multi_start", false);
  return pc;
}

json dump_population(const PopulationConfig& pc) {
  json obj{{"kappa", pc.kappa},
           {"tau", pc.tau},
           {"discrepancy", pc.discrepancy},
           {"loss", dump_loss(pc.loss)},
           {"case", pc.case_name},
           {"role", pc.role},
           {"allow_unbounded_psi", pc.allow_unbounded_psi},
           {"multi_start", pc.multi_start}};
  json comps = json::array();
  for (const auto& mc : pc.components)
    comps.push_back(json{{"weight", mc.weight}, {"eps", dump_dist(mc.eps)}, {"lam", dump_dist(mc.lam)}});
  obj["components"] = comps;
  return obj;
}

std::vector<double> parse_grid(const json& obj, const std::string& key) {
  std::vector<double> grid;
  if (!obj.contains(key)) return grid;
  if (!obj.at(key).is_array()) throw InputError("config: '" + key + "' must be an array");
  for (const auto& v : obj.at(key)) grid.push_back(v.get<double>());
  return grid;
}

}  // namespace

PopulationSpec PopulationConfig::to_spec() const {
  PopulationSpec spec;
  spec.kappa = kappa;
  spec.tau = tau;
  spec.discrepancy = discrepancy;
  spec.loss = loss;
  spec.allow_unbounded_psi = allow_unbounded_psi;
  spec.multi_start = multi_start;
  spec.components = components.empty()
                        ? case_mixture(case_name,
                                       role == "source" ? StudyRole::source : StudyRole::target)
                        : components;
  spec.validate();
  return spec;
}

RunConfig parse_config_text(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw InputError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!root.is_object() || !root.contains("command"))
    throw InputError("config: top-level object with a 'command' key required");
  const auto command = root.at("command").get<std::string>();

  RunConfig rc;
  rc.command = command;
  if (command == "fit") {
    require_keys(root, "fit config",
                 {"command", "method", "target_csv", "source_csv", "loss", "tau", "tau1",
                  "grad_tol", "max_iter", "cv", "seed", "out"});
    FitConfig fc;
    fc.method = get_or<std::string>(root, "method", "single-rr");
    if (fc.method != "single-rr" && fc.method != "trans-rr" && fc.method != "pooled-rr")
      throw InputError("config: method must be single-rr, trans-rr or pooled-rr");
    fc.target_csv = get_or<std::string>(root, "target_csv", "");
    fc.source_csv = get_or<std::string>(root, "source_csv", "");
    if (fc.target_csv.empty()) throw InputError("config: fit needs 'target_csv'");
    if (fc.method != "single-rr" && fc.source_csv.empty())
      throw InputError("config: " + fc.method + " needs 'source_csv'");
    if (root.contains("loss")) fc.loss = parse_loss(root.at("loss"), "loss");
    fc.tau = get_or<double>(root, "tau", 1.0);
    fc.tau1 = get_or<double>(root, "tau1", 1.0);
    fc.grad_tol = get_or<double>(root, "grad_tol", 0.0);
    fc.max_iter = get_or<int>(root, "max_iter", 500);
    if (root.contains("cv")) {
      require_keys(root.at("cv"), "cv", {"enabled", "folds", "grid"});
      fc.cv.enabled = get_or<bool>(root.at("cv"), "enabled", true);
      fc.cv.folds = get_or<int>(root.at("cv"), "folds", 5);
      fc.cv.grid = parse_grid(root.at("cv"), "grid");
    }
    fc.seed = get_or<std::uint64_t>(root, "seed", 0);
    fc.out = get_or<std::string>(root, "out", "out");
    rc.payload = fc;
  } else if (command == "risk") {
    require_keys(root, "risk config", {"command", "population", "seed", "out"});
    RiskConfig cc;
    if (!root.contains("population")) throw InputError("config: risk needs 'population'");
    cc.population = parse_population(root.at("population"));
    cc.seed = get_or<std::uint64_t>(root, "seed", 0);
    cc.out = get_or<std::string>(root, "out", "out");
    rc.payload = cc;
  } else if (command == "curve") {
    require_keys(root, "curve config",
                 {"command", "population", "tau_list", "d_grid", "seed", "out"});
    CurveConfig cc;
    if (!root.contains("population")) throw InputError("config: curve needs 'population'");
    cc.population = parse_population(root.at("population"));
    cc.tau_list = parse_grid(root, "tau_list");
    cc.d_grid = parse_grid(root, "d_grid");
    if (cc.tau_list.empty()) cc.tau_list = {cc.population.tau};
    if (cc.d_grid.empty()) throw InputError("config: curve needs a non-empty 'd_grid'");
    cc.seed = get_or<std::uint64_t>(root, "seed", 0);
    cc.out = get_or<std::string>(root, "out", "out");
    rc.payload = cc;
  } else if (command == "simulate") {
    require_keys(root, "simulate config",
                 {"command", "mode", "case", "n", "p", "n1", "reps", "seed", "loss", "tau",
                  "tau1", "c_d_grid", "cv_grid", "folds", "with_theory", "threads", "out"});
    SimulateConfig sc;
    sc.mode = get_or<std::string>(root, "mode", "validation");
    if (sc.mode != "validation" && sc.mode != "crossover")
      throw InputError("config: simulate mode must be 'validation' or 'crossover'");
    sc.case_name = get_or<std::string>(root, "case", "I");
    sc.n = get_or<int>(root, "n", 100);
    sc.p = get_or<int>(root, "p", 100);
    sc.n1 = get_or<int>(root, "n1", 200);
    sc.reps = get_or<int>(root, "reps", 200);
    sc.seed = get_or<std::uint64_t>(root, "seed", 1);
    if (root.contains("loss")) sc.loss = parse_loss(root.at("loss"), "loss");
    sc.tau = get_or<double>(root, "tau", 1.0);
    sc.tau1 = get_or<double>(root, "tau1", 1.0);
    if (root.contains("c_d_grid")) sc.c_d_grid = parse_grid(root, "c_d_grid");
    sc.cv_grid = parse_grid(root, "cv_grid");
    sc.folds = get_or<int>(root, "folds", 5);
    sc.with_theory = get_or<bool>(root, "with_theory", true);
    sc.threads = get_or<int>(root, "threads", 0);
    sc.out = get_or<std::string>(root, "out", "out");
    rc.payload = sc;
  } else if (command == "bench") {
    require_keys(root, "bench config", {"command", "n", "p", "seed", "out"});
    BenchConfig bc;
    bc.n = get_or<int>(root, "n", 400);
    bc.p = get_or<int>(root, "p", 200);
    bc.seed = get_or<std::uint64_t>(root, "seed", 1);
    bc.out = get_or<std::string>(root, "out", "");
    rc.payload = bc;
  } else {
    throw InputError("config: unknown command '" + command + "'");
  }
  return rc;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("config: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::string serialize_config(const RunConfig& config) {
  json root;
  root["command"] = config.command;
  if (const auto* fc = std::get_if<FitConfig>(&config.payload)) {
    root["method"] = fc->method;
    root["target_csv"] = fc->target_csv;
    root["source_csv"] = fc->source_csv;
    root["loss"] = dump_loss(fc->loss);
    root["tau"] = fc->tau;
    root["tau1"] = fc->tau1;
    root["grad_tol"] = fc->grad_tol;
    root["max_iter"] = fc->max_iter;
    root["cv"] = json{{"enabled", fc->cv.enabled}, {"folds", fc->cv.folds}, {"grid", fc->cv.grid}};
    root["seed"] = fc->seed;
    root["out"] = fc->out;
  } else if (const auto* cc = std::get_if<RiskConfig>(&config.payload)) {
    root["population"] = dump_population(cc->population);
    root["seed"] = cc->seed;
    root["out"] = cc->out;
  } else if (const auto* cv = std::get_if<CurveConfig>(&config.payload)) {
    root["population"] = dump_population(cv->population);
    root["tau_list"] = cv->tau_list;
    root["d_grid"] = cv->d_grid;
    root["seed"] = cv->seed;
    root["out"] = cv->out;
  } else if (const auto* sc = std::get_if<SimulateConfig>(&config.payload)) {
    root["mode"] = sc->mode;
    root["case"] = sc->case_name;
    root["n"] = sc->n;
    root["p"] = sc->p;
    root["n1"] = sc->n1;
    root["reps"] = sc->reps;
    root["seed"] = sc->seed;
    root["loss"] = dump_loss(sc->loss);
    root["tau"] = sc->tau;
    root["tau1"] = sc->tau1;
    root["c_d_grid"] = sc->c_d_grid;
    root["cv_grid"] = sc->cv_grid;
    root["folds"] = sc->folds;
    root["with_theory"] = sc->with_theory;
    root["threads"] = sc->threads;
    root["out"] = sc->out;
  } else if (const auto* bc = std::get_if<BenchConfig>(&config.payload)) {
    root["n"] = bc->n;
    root["p"] = bc->p;
    root["seed"] = bc->seed;
    root["out"] = bc->out;
  }
  return root.dump(2) + "\n";
}

}  // namespace transrr
