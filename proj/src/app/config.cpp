#include "cgpdf/app/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace cgpdf::app {

json default_config() {
  return json::parse(R"({
    "model": {
      "preset": "triad_modified",
      "regime": "",
      "params": {"A1": null, "A2": null, "A3": null, "d1": null, "d2": null,
                 "d3": null, "sigma2": null, "sigma3": null, "epsilon": null},
      "init": [0.0, 0.0, 0.0]
    },
    "simulation": {"L": 500, "dt": 0.001, "t_end": 20.0, "store_stride": 100,
                   "blowup_cap": 1e8, "export_samples": 10},
    "filter": {"prior": "ensemble", "prior_mean": [], "prior_cov": [],
               "delta": 1e-6, "eig_floor": 1e-10, "floor_psd": true},
    "density": {"t_eval": [1.0, 20.0], "bandwidth": "scaling", "kappa": 1.0,
                "grid_points": 100, "hidden_points": 200, "half_width": 5.0,
                "estimators": ["hybrid"],
                "panels": [["u1", "u2"], ["u2", "u3"], ["u3", "u1"]]},
    "reference": {"L": 1000000, "dt": null, "kappa": 1.0, "seed": null},
    "compare": {"Ls": [125, 250, 500, 1000, 2000], "t_eval": 1.0,
                "repeats": 20, "grid_points": 40, "hidden_points": 200,
                "half_width": 5.0, "direct": true, "hidden": true},
    "diagnose": {"checkpoints": [2, 4, 6, 8, 10, 12, 14, 16, 18, 20],
                 "v": 1.0, "m": 1, "R0": 0.01, "R0_prime": 1.0,
                 "horizon": 10.0, "record_stride": 100,
                 "energy_points": 1000, "dissipativity_points": 2000,
                 "radius": 50.0},
    "seed": 1,
    "threads": 0,
    "output": {"dir": "out"}
  })");
}

namespace {

std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

bool compatible(const json& def, const json& val) {
  if (def.is_null()) return val.is_null() || val.is_number();
  if (def.is_number()) return val.is_number();
  return def.type() == val.type();
}

void overlay(json& base, const json& def, const json& user,
             const std::string& path) {
  if (!user.is_object())
    throw ConfigError("config: '" + (path.empty() ? "<root>" : path) +
                      "' must be an object");
  for (const auto& [key, val] : user.items()) {
    const std::string p = join(path, key);
    if (!def.contains(key)) throw ConfigError("config: unknown key '" + p + "'");
    const json& d = def.at(key);
    if (d.is_object()) {
      overlay(base[key], d, val, p);
    } else {
      if (!compatible(d, val))
        throw ConfigError("config: '" + p + "' expects " +
                          (d.is_null() ? std::string("number") : d.type_name()) +
                          ", got " + val.type_name());
      base[key] = val;
    }
  }
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError("config: '" + path + "' must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError("config: '" + path + "' must be finite");
  return v;
}

Index integer(const json& j, const std::string& path, Index lo) {
  const double v = number(j, path);
  if (v != std::floor(v) || v < static_cast<double>(lo) || v > 9e15)
    throw ConfigError("config: '" + path + "' must be an integer >= " +
                      std::to_string(lo));
  return static_cast<Index>(v);
}

double positive(const json& j, const std::string& path) {
  const double v = number(j, path);
  if (!(v > 0)) throw ConfigError("config: '" + path + "' must be > 0");
  return v;
}

Vec vector_of(const json& j, const std::string& path) {
  Vec v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v(static_cast<Index>(i)) = number(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

std::vector<double> times_of(const json& j, const std::string& path,
                             bool allow_empty) {
  std::vector<double> t;
  for (std::size_t i = 0; i < j.size(); ++i)
    t.push_back(positive(j[i], path + "[" + std::to_string(i) + "]"));
  if (!allow_empty && t.empty()) throw ConfigError("config: '" + path + "' is empty");
  for (std::size_t i = 1; i < t.size(); ++i)
    if (!(t[i] > t[i - 1]))
      throw ConfigError("config: '" + path + "' must be strictly increasing");
  return t;
}

}  // namespace

json merge_config(const json& user) {
  const json def = default_config();
  json out = def;
  overlay(out, def, user, "");
  return out;
}

json load_config(const std::string& path) {
  if (path.empty()) return default_config();
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  json user;
  try {
    user = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: '" + path + "' is not valid JSON: " + e.what());
  }
  return merge_config(user);
}

void apply_override(json& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw ConfigError("--set expects KEY=VALUE, got '" + std::string(assignment) + "'");
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  // Rebuild the nested object for the dotted key and overlay it.
  json patch = value;
  std::vector<std::string> parts;
  std::stringstream ss(key);
  for (std::string part; std::getline(ss, part, '.');) {
    if (part.empty()) throw ConfigError("--set: malformed key '" + key + "'");
    parts.push_back(part);
  }
  for (auto it = parts.rbegin(); it != parts.rend(); ++it)
    patch = json{{*it, patch}};
  const json def = default_config();
  overlay(cfg, def, patch, "");
}

std::vector<std::string> joint_labels(const ModelConfig&) {
  return {"u2", "u3", "u1"};
}

RunConfig parse_config(const json& merged) {
  RunConfig rc;
  rc.resolved = merged;
  const json& m = merged.at("model");

  rc.model.preset = m.at("preset").get<std::string>();
  rc.model.regime = m.at("regime").get<std::string>();
  TriadParams p = triad_preset(rc.model.preset, rc.model.regime);
  const json& pj = m.at("params");
  auto set = [&](const char* k, double& dst) {
    if (!pj.at(k).is_null()) dst = number(pj.at(k), std::string("model.params.") + k);
  };
  set("A1", p.A1);
  set("A2", p.A2);
  set("A3", p.A3);
  set("d1", p.d1);
  set("d2", p.d2);
  set("d3", p.d3);
  set("sigma2", p.sigma2);
  set("sigma3", p.sigma3);
  set("epsilon", p.epsilon);
  p.validate();
  rc.model.params = p;
  const Vec init = vector_of(m.at("init"), "model.init");
  if (init.size() != 3) throw ConfigError("config: 'model.init' needs (u1, u2, u3)");
  rc.model.uI0 = Vec{{init(1), init(2)}};
  rc.model.uII0 = Vec{{init(0)}};

  const json& s = merged.at("simulation");
  rc.simulation.L = integer(s.at("L"), "simulation.L", 1);
  rc.simulation.dt = positive(s.at("dt"), "simulation.dt");
  rc.simulation.t_end = positive(s.at("t_end"), "simulation.t_end");
  rc.simulation.store_stride = integer(s.at("store_stride"), "simulation.store_stride", 1);
  rc.simulation.blowup_cap = positive(s.at("blowup_cap"), "simulation.blowup_cap");
  rc.simulation.export_samples =
      integer(s.at("export_samples"), "simulation.export_samples", 0);

  const json& f = merged.at("filter");
  rc.filter.prior = f.at("prior").get<std::string>();
  if (rc.filter.prior != "ensemble" && rc.filter.prior != "gaussian")
    throw ConfigError("config: 'filter.prior' must be \"ensemble\" or \"gaussian\"");
  if (rc.filter.prior == "gaussian") {
    rc.filter.prior_mean = vector_of(f.at("prior_mean"), "filter.prior_mean");
    const json& pc = f.at("prior_cov");
    const Index n = rc.filter.prior_mean.size();
    if (n != 1 || static_cast<Index>(pc.size()) != n)
      throw ConfigError("config: gaussian prior needs a mean and covariance for u1");
    rc.filter.prior_cov.resize(n, n);
    for (Index i = 0; i < n; ++i) {
      const Vec row = vector_of(pc[i], "filter.prior_cov");
      if (row.size() != n) throw ConfigError("config: 'filter.prior_cov' must be square");
      rc.filter.prior_cov.row(i) = row.transpose();
    }
    if (!rc.filter.prior_cov.isApprox(rc.filter.prior_cov.transpose()) ||
        Eigen::SelfAdjointEigenSolver<Mat>(rc.filter.prior_cov).eigenvalues().minCoeff() < 0)
      throw ConfigError("config: 'filter.prior_cov' must be symmetric PSD");
  }
  rc.filter.delta = positive(f.at("delta"), "filter.delta");
  rc.filter.eig_floor = positive(f.at("eig_floor"), "filter.eig_floor");
  rc.filter.floor_psd = f.at("floor_psd").get<bool>();

  const json& d = merged.at("density");
  rc.density.t_eval = times_of(d.at("t_eval"), "density.t_eval", true);
  rc.density.bandwidth = d.at("bandwidth").get<std::string>();
  if (rc.density.bandwidth != "scaling" && rc.density.bandwidth != "silverman")
    throw ConfigError("config: 'density.bandwidth' must be \"scaling\" or \"silverman\"");
  rc.density.kappa = positive(d.at("kappa"), "density.kappa");
  rc.density.grid_points = integer(d.at("grid_points"), "density.grid_points", 5);
  rc.density.hidden_points = integer(d.at("hidden_points"), "density.hidden_points", 5);
  rc.density.half_width = positive(d.at("half_width"), "density.half_width");
  const std::set<std::string> known{"hybrid", "direct"};
  for (const auto& e : d.at("estimators")) {
    if (!e.is_string() || !known.count(e.get<std::string>()))
      throw ConfigError("config: 'density.estimators' entries are \"hybrid\" or \"direct\"");
    rc.density.estimators.push_back(e.get<std::string>());
  }
  const auto labels = joint_labels(rc.model);
  auto is_label = [&](const json& x) {
    return x.is_string() &&
           std::find(labels.begin(), labels.end(), x.get<std::string>()) != labels.end();
  };
  for (const auto& pr : d.at("panels")) {
    if (!pr.is_array() || pr.size() != 2 || !is_label(pr[0]) || !is_label(pr[1]) ||
        pr[0] == pr[1])
      throw ConfigError("config: 'density.panels' entries are pairs of distinct "
                        "coordinate names (u1, u2, u3)");
    rc.density.panels.emplace_back(pr[0].get<std::string>(), pr[1].get<std::string>());
  }

  const json& r = merged.at("reference");
  rc.reference.L = integer(r.at("L"), "reference.L", 2);
  rc.reference.dt = r.at("dt").is_null() ? rc.simulation.dt
                                         : positive(r.at("dt"), "reference.dt");
  rc.reference.kappa = positive(r.at("kappa"), "reference.kappa");

  rc.seed = static_cast<std::uint64_t>(integer(merged.at("seed"), "seed", 0));
  // Reference paths must not reuse the estimator's substreams.
  rc.reference.seed =
      r.at("seed").is_null()
          ? rc.seed ^ 0x9e3779b97f4a7c15ULL
          : static_cast<std::uint64_t>(integer(r.at("seed"), "reference.seed", 0));
  rc.threads = static_cast<int>(integer(merged.at("threads"), "threads", 0));
  rc.out_dir = merged.at("output").at("dir").get<std::string>();
  if (rc.out_dir.empty()) throw ConfigError("config: 'output.dir' is empty");

  const json& c = merged.at("compare");
  for (std::size_t i = 0; i < c.at("Ls").size(); ++i)
    rc.compare.Ls.push_back(integer(c.at("Ls")[i], "compare.Ls", 2));
  rc.compare.t_eval = positive(c.at("t_eval"), "compare.t_eval");
  rc.compare.repeats = integer(c.at("repeats"), "compare.repeats", 2);
  rc.compare.grid_points = integer(c.at("grid_points"), "compare.grid_points", 5);
  rc.compare.hidden_points = integer(c.at("hidden_points"), "compare.hidden_points", 5);
  rc.compare.half_width = positive(c.at("half_width"), "compare.half_width");
  rc.compare.direct = c.at("direct").get<bool>();
  rc.compare.hidden = c.at("hidden").get<bool>();

  const json& g = merged.at("diagnose");
  rc.diagnose.checkpoints = times_of(g.at("checkpoints"), "diagnose.checkpoints", true);
  rc.diagnose.v = positive(g.at("v"), "diagnose.v");
  rc.diagnose.m = static_cast<int>(integer(g.at("m"), "diagnose.m", 1));
  rc.diagnose.R0 = positive(g.at("R0"), "diagnose.R0");
  rc.diagnose.R0_prime = positive(g.at("R0_prime"), "diagnose.R0_prime");
  rc.diagnose.horizon = positive(g.at("horizon"), "diagnose.horizon");
  rc.diagnose.record_stride = integer(g.at("record_stride"), "diagnose.record_stride", 1);
  rc.diagnose.energy_points = integer(g.at("energy_points"), "diagnose.energy_points", 1);
  rc.diagnose.dissipativity_points =
      integer(g.at("dissipativity_points"), "diagnose.dissipativity_points", 1);
  rc.diagnose.radius = positive(g.at("radius"), "diagnose.radius");
  return rc;
}

}  // namespace cgpdf::app
