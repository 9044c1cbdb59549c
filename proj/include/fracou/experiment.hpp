#pragma once

// Declarative experiment runner: a JSON config names a scenario and its
// parameters; running it produces machine-readable CSV/JSON outputs plus a
// manifest. Outputs are a pure function of (config, seed) - same inputs,
// byte-identical files, independent of thread count.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fracou/control.hpp"
#include "fracou/errors.hpp"
#include "fracou/fbm.hpp"
#include "fracou/girsanov.hpp"
#include "fracou/grid.hpp"
#include "fracou/spectral.hpp"

namespace fracou {

using nlohmann::json;

inline constexpr const char* kToolVersion = "0.1.0";

struct ExperimentConfig {
  json raw;
  std::string scenario;
  SpectralModel model;
  int n_steps = 128;
  int n_paths = 1000;
  std::uint64_t seed = 1;
  std::vector<double> x;          // initial state (spectral coordinates)
  std::string f_name = "zero";    // density/strongfeller nonlinearity
  double f_scale = 1.0;           // linear f coefficient
  int dyadic_levels = 5;
  std::vector<double> direction;  // strongfeller offset direction
  std::optional<MomentProblem> moment;
  std::string dump_paths;         // simulate: optional binary dump file
  size_t max_elems = kDefaultPathCapElems;
};

namespace detail {

inline const json& require_field(const json& j, const char* name, const char* path) {
  if (!j.contains(name)) {
    throw ConfigError(std::string("$.") + path + ": missing required field");
  }
  return j.at(name);
}

inline double require_number(const json& j, const char* name, const char* path) {
  const json& v = require_field(j, name, path);
  if (!v.is_number()) throw ConfigError(std::string("$.") + path + ": must be a number");
  return v.get<double>();
}

inline std::vector<double> number_array(const json& v, const char* path) {
  if (!v.is_array()) throw ConfigError(std::string("$.") + path + ": must be an array");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw ConfigError(std::string("$.") + path + ": must hold numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

inline SpectralModel parse_model(const json& cfg, double beta, double T) {
  const json& m = require_field(cfg, "model", "model");
  try {
    if (m.contains("preset")) {
      const std::string preset = m.at("preset").get<std::string>();
      const int n_modes = static_cast<int>(require_number(m, "n_modes", "model.n_modes"));
      if (preset == "heat_dirichlet") return heat_dirichlet(n_modes, beta, T);
      if (preset == "parabolic_2m") {
        const int order = static_cast<int>(require_number(m, "order_m", "model.order_m"));
        return parabolic_2m(n_modes, order, beta, T);
      }
      throw ConfigError("$.model.preset: unknown preset '" + preset + "'");
    }
    if (m.contains("alphas")) {
      return build_model(number_array(require_field(m, "alphas", "model.alphas"), "model.alphas"),
                         number_array(require_field(m, "lambdas", "model.lambdas"),
                                      "model.lambdas"),
                         beta, T);
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("$.model: ") + e.what());
  }
  throw ConfigError("$.model: needs either 'preset' or explicit 'alphas'/'lambdas'");
}

inline NonlinearityG parse_nonlinearity(const std::string& f_name, double scale, int n_modes) {
  if (f_name == "zero") return NonlinearityG::zero();
  if (f_name == "sin") {
    return NonlinearityG::nemytskii("sin", [](double v) { return std::sin(v); }, n_modes, 1.0);
  }
  if (f_name == "neg_arctan") {
    return NonlinearityG::nemytskii("neg_arctan", [](double v) { return -std::atan(v); },
                                    n_modes, 1.0);
  }
  if (f_name == "linear") return NonlinearityG::componentwise_linear(scale);
  throw ConfigError("$.f: unknown nonlinearity '" + f_name +
                    "' (expected zero|sin|neg_arctan|linear)");
}

inline void write_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + tmp);
    out << content;
    if (!out) throw std::runtime_error("failed writing " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

inline const std::vector<std::pair<std::string, std::string>>& scenario_catalog() {
  static const std::vector<std::pair<std::string, std::string>> cat = {
      {"criterion", "equivalence-of-laws criterion: q_n spectrum, necsuf sequence, verdict"},
      {"simulate", "OU ensemble: empirical covariance vs quadrature, optional path dump"},
      {"control", "explicit steering control: L2/H* norms, steering residual"},
      {"moment", "truncated moment problem: regularized Gram solve and residuals"},
      {"density", "Girsanov density: normalization and the transfer identity"},
      {"strongfeller", "coupled density continuity probe over dyadic offsets"},
  };
  return cat;
}

inline ExperimentConfig parse_config(const json& j) {
  ExperimentConfig cfg;
  cfg.raw = j;
  if (j.contains("version") && j.at("version").is_number() &&
      j.at("version").get<int>() != 1) {
    throw ConfigError("$.version: unsupported config version");
  }
  const json& sc = detail::require_field(j, "scenario", "scenario");
  if (!sc.is_string()) throw ConfigError("$.scenario: must be a string");
  cfg.scenario = sc.get<std::string>();
  bool known = false;
  for (const auto& [name, _] : scenario_catalog()) known = known || name == cfg.scenario;
  if (!known) throw ConfigError("$.scenario: unknown scenario '" + cfg.scenario + "'");

  const double beta = detail::require_number(j, "beta", "beta");
  if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("$.beta: must lie in (0,1)");
  const double T = detail::require_number(j, "T", "T");
  if (!(T > 0.0)) throw ConfigError("$.T: must be positive");

  if (cfg.scenario != "moment") {
    cfg.model = detail::parse_model(j, beta, T);
  } else {
    cfg.model.beta = beta;
    cfg.model.horizon = T;
  }

  if (j.contains("n_steps")) {
    cfg.n_steps = static_cast<int>(detail::require_number(j, "n_steps", "n_steps"));
    if (cfg.n_steps < 8) throw ConfigError("$.n_steps: must be >= 8");
  }
  if (j.contains("n_paths")) {
    cfg.n_paths = static_cast<int>(detail::require_number(j, "n_paths", "n_paths"));
    if (cfg.n_paths < 1) throw ConfigError("$.n_paths: must be >= 1");
  }
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("max_elems")) cfg.max_elems = j.at("max_elems").get<size_t>();

  const int nm = cfg.model.n_modes();
  cfg.x.assign(std::max(nm, 1), 0.0);
  if (j.contains("x")) {
    cfg.x = detail::number_array(j.at("x"), "x");
    if (cfg.scenario != "moment" && static_cast<int>(cfg.x.size()) != nm) {
      throw ConfigError("$.x: length must equal the number of modes");
    }
  }
  if (j.contains("f")) {
    if (!j.at("f").is_string()) throw ConfigError("$.f: must be a string");
    cfg.f_name = j.at("f").get<std::string>();
  }
  if (j.contains("f_scale")) cfg.f_scale = detail::require_number(j, "f_scale", "f_scale");
  if (j.contains("dyadic_levels")) {
    cfg.dyadic_levels = static_cast<int>(detail::require_number(j, "dyadic_levels", "dyadic_levels"));
    if (cfg.dyadic_levels < 1 || cfg.dyadic_levels > 16) {
      throw ConfigError("$.dyadic_levels: must be in [1,16]");
    }
  }
  cfg.direction.assign(std::max(nm, 1), 0.0);
  cfg.direction[0] = 1.0;
  if (j.contains("direction")) {
    cfg.direction = detail::number_array(j.at("direction"), "direction");
    if (static_cast<int>(cfg.direction.size()) != nm) {
      throw ConfigError("$.direction: length must equal the number of modes");
    }
  }
  if (cfg.scenario == "moment") {
    const json& mo = detail::require_field(j, "moment", "moment");
    MomentProblem p;
    p.exponents = detail::number_array(detail::require_field(mo, "exponents", "moment.exponents"),
                                       "moment.exponents");
    p.targets = detail::number_array(detail::require_field(mo, "targets", "moment.targets"),
                                     "moment.targets");
    p.horizon = T;
    p.n_trunc = static_cast<int>(detail::require_number(mo, "n_trunc", "moment.n_trunc"));
    if (mo.contains("ridge")) p.ridge = detail::require_number(mo, "ridge", "moment.ridge");
    cfg.moment = std::move(p);
  }
  if (j.contains("dump_paths")) {
    if (!j.at("dump_paths").is_string()) throw ConfigError("$.dump_paths: must be a string");
    cfg.dump_paths = j.at("dump_paths").get<std::string>();
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config file " + file);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return parse_config(j);
}

struct RunManifest {
  json data;
  std::string path;
};

namespace scenario {

inline json run_criterion(const ExperimentConfig& cfg, const std::string& outdir,
                          json& outputs) {
  const CriterionReport rep = equivalence_report(cfg.model, cfg.n_steps);
  detail::write_atomic(outdir + "/criterion.csv", criterion_csv(rep));
  outputs["criterion_csv"] = "criterion.csv";
  json summary;
  summary["version"] = 1;
  summary["verdict"] = to_string(rep.verdict);
  summary["sup_necsuf"] = rep.sup_necsuf;
  summary["c1_hat"] = rep.c1_hat;
  summary["c2_hat"] = rep.c2_hat;
  summary["n_steps"] = rep.n_steps;
  summary["model"] = {{"alphas", rep.model.alphas},
                      {"lambdas", rep.model.lambdas},
                      {"beta", rep.model.beta},
                      {"T", rep.model.horizon},
                      {"n_modes", rep.model.n_modes()}};
  if (!cfg.model.preset.empty()) {
    summary["model"]["preset"] = cfg.model.preset;
    summary["parabolic_2m_condition_d1"] = parabolic_2m_condition(cfg.model.beta, cfg.model.order_m, 1);
  }
  json per_mode = json::array();
  for (const auto& r : rep.per_mode) {
    per_mode.push_back({{"n", r.n},
                        {"alpha", r.alpha},
                        {"lambda", r.lambda},
                        {"qn", r.qn},
                        {"exp_2aT", r.exp_2aT},
                        {"ratio", r.ratio},
                        {"necsuf", r.necsuf},
                        {"band", r.band}});
  }
  summary["per_mode"] = per_mode;
  detail::write_atomic(outdir + "/criterion.json", summary.dump(2) + "\n");
  outputs["criterion_json"] = "criterion.json";
  return {{"verdict", to_string(rep.verdict)}};
}

inline json run_simulate(const ExperimentConfig& cfg, const std::string& outdir, json& outputs) {
  const Grid grid(cfg.model.horizon, cfg.n_steps);
  const OUEnsemble ens =
      simulate_ou(cfg.model, grid, cfg.x, cfg.n_paths, NoiseSeed{cfg.seed, 0}, cfg.max_elems);
  std::string csv = "mode,alpha,lambda,qn_quadrature,qhat,qhat_se\n";
  bool x_zero = true;
  for (double v : cfg.x) x_zero = x_zero && v == 0.0;
  std::vector<VarSE> emp;
  if (x_zero && cfg.n_paths >= 100) emp = empirical_covariance(ens);
  for (int m = 0; m < cfg.model.n_modes(); ++m) {
    const double qn = covariance_qn(cfg.model, m + 1, std::max(cfg.n_steps, 256));
    csv += std::to_string(m + 1) + "," + detail::fmt(cfg.model.alphas[m]) + "," +
           detail::fmt(cfg.model.lambdas[m]) + "," + detail::fmt(qn) + ",";
    if (!emp.empty()) {
      csv += detail::fmt(emp[m].var) + "," + detail::fmt(emp[m].se) + "\n";
    } else {
      csv += ",\n";
    }
  }
  detail::write_atomic(outdir + "/simulate.csv", csv);
  outputs["simulate_csv"] = "simulate.csv";
  if (!cfg.dump_paths.empty()) {
    dump_paths_binary(ens.noise, outdir + "/" + cfg.dump_paths);
    outputs["paths_bin"] = cfg.dump_paths;
  }
  return {{"paths", cfg.n_paths}};
}

inline json run_control(const ExperimentConfig& cfg, const std::string& outdir, json& outputs) {
  const Grid grid(cfg.model.horizon, cfg.n_steps);
  ControlFunction u = explicit_control(cfg.model, cfg.x, grid);
  hstar_norm(cfg.model.hurst(), u);
  const double residual = verify_steering(cfg.model, cfg.x, u.u, grid);

  std::string csv = "t";
  for (int m = 0; m < cfg.model.n_modes(); ++m) csv += ",u_" + std::to_string(m + 1);
  csv += "\n";
  for (int k = 0; k <= grid.n_steps; ++k) {
    csv += detail::fmt(grid.node(k));
    for (int m = 0; m < cfg.model.n_modes(); ++m) csv += "," + detail::fmt(u.u.at(m, k));
    csv += "\n";
  }
  detail::write_atomic(outdir + "/control.csv", csv);
  outputs["control_csv"] = "control.csv";

  json summary;
  summary["norm_l2"] = u.norm_l2;
  summary["steering_residual"] = residual;
  summary["hstar"] = {{"status", to_string(u.hstar.status)},
                      {"trace", u.hstar.trace}};
  if (u.hstar.status == HstarStatus::finite) summary["hstar"]["value"] = u.hstar.value;
  detail::write_atomic(outdir + "/control.json", summary.dump(2) + "\n");
  outputs["control_json"] = "control.json";
  return {{"steering_residual", residual}, {"hstar_status", to_string(u.hstar.status)}};
}

inline json run_moment(const ExperimentConfig& cfg, const std::string& outdir, json& outputs) {
  const MomentSolution sol = moment_solve(*cfg.moment);
  json summary;
  summary["ridge_used"] = sol.ridge_used;
  summary["cond_estimate"] = sol.cond_estimate;
  summary["residuals"] = sol.residuals;
  summary["weights"] = sol.weights;
  double max_res = 0.0;
  for (double r : sol.residuals) max_res = std::max(max_res, std::abs(r));
  summary["max_residual"] = max_res;
  detail::write_atomic(outdir + "/moment.json", summary.dump(2) + "\n");
  outputs["moment_json"] = "moment.json";

  const Grid grid(cfg.model.horizon, cfg.n_steps);
  std::string csv = "t,h,u0\n";
  for (int k = 0; k <= grid.n_steps; ++k) {
    const double t = grid.node(k);
    csv += detail::fmt(t) + "," + detail::fmt(sol.h(t)) + "," + detail::fmt(sol.u0(t)) + "\n";
  }
  detail::write_atomic(outdir + "/moment.csv", csv);
  outputs["moment_csv"] = "moment.csv";
  return {{"max_residual", max_res}, {"ridge_used", sol.ridge_used}};
}

inline json run_density(const ExperimentConfig& cfg, const std::string& outdir, json& outputs) {
  const NonlinearityG G =
      detail::parse_nonlinearity(cfg.f_name, cfg.f_scale, cfg.model.n_modes());
  const Grid grid(cfg.model.horizon, cfg.n_steps);
  const auto samples =
      density_study(cfg.model, G, cfg.x, grid, NoiseSeed{cfg.seed, 0}, cfg.n_paths);
  std::string csv = "path_id,log_rho,ito_term,quadratic_term\n";
  std::vector<double> rhos(samples.size());
  for (size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    rhos[i] = s.rho;
    csv += std::to_string(s.path_id) + "," + detail::fmt(s.log_rho) + "," +
           detail::fmt(s.ito_term) + "," + detail::fmt(s.quadratic_term) + "\n";
  }
  detail::write_atomic(outdir + "/density.csv", csv);
  outputs["density_csv"] = "density.csv";

  const MeanSE rho_stat = mean_se(rhos);
  const TransferReport transfer = transfer_check(
      cfg.model, G, cfg.x, phi_battery(),
      MCParams{cfg.n_paths, cfg.n_steps, cfg.seed});
  json summary;
  summary["mean_rho"] = rho_stat.mean;
  summary["mean_rho_se"] = rho_stat.se;
  summary["normalization_within_3se"] = std::abs(rho_stat.mean - 1.0) <= 3.0 * rho_stat.se;
  json recs = json::array();
  for (const auto& r : transfer.records) {
    recs.push_back({{"phi", r.phi},
                    {"lhs", r.lhs},
                    {"lhs_se", r.lhs_se},
                    {"rhs", r.rhs},
                    {"rhs_se", r.rhs_se},
                    {"combined_se", r.combined_se},
                    {"abs_diff", r.diff},
                    {"within_3se", r.diff <= 3.0 * r.combined_se}});
  }
  summary["transfer"] = recs;
  detail::write_atomic(outdir + "/density.json", summary.dump(2) + "\n");
  outputs["density_json"] = "density.json";
  return {{"mean_rho", rho_stat.mean}, {"mean_rho_se", rho_stat.se}};
}

inline json run_strongfeller(const ExperimentConfig& cfg, const std::string& outdir,
                             json& outputs) {
  const NonlinearityG G =
      detail::parse_nonlinearity(cfg.f_name, cfg.f_scale, cfg.model.n_modes());
  const auto phis = phi_battery();
  const ProbeReport rep =
      strong_feller_probe(cfg.model, G, cfg.x, cfg.direction, cfg.dyadic_levels, phis,
                          MCParams{cfg.n_paths, cfg.n_steps, cfg.seed});
  std::string csv = "level,offset_scale,rho_absdiff,rho_absdiff_se";
  for (const auto& p : phis) csv += ",diff_" + p.name + ",se_" + p.name;
  csv += "\n";
  for (const auto& r : rep.levels) {
    csv += std::to_string(r.level) + "," + detail::fmt(r.offset_scale) + "," +
           detail::fmt(r.rho_absdiff.mean) + "," + detail::fmt(r.rho_absdiff.se);
    for (size_t i = 0; i < r.phi_diff.size(); ++i) {
      csv += "," + detail::fmt(r.phi_diff[i]) + "," + detail::fmt(r.phi_diff_se[i]);
    }
    csv += "\n";
  }
  detail::write_atomic(outdir + "/strongfeller.csv", csv);
  outputs["strongfeller_csv"] = "strongfeller.csv";

  bool monotone = true;
  for (size_t j = 1; j < rep.levels.size(); ++j) {
    const auto& prev = rep.levels[j - 1].rho_absdiff;
    const auto& cur = rep.levels[j].rho_absdiff;
    const double slack = 2.0 * std::sqrt(prev.se * prev.se + cur.se * cur.se);
    if (cur.mean > prev.mean + slack) monotone = false;
  }
  const double final_over_initial =
      rep.levels.back().rho_absdiff.mean / std::max(rep.levels.front().rho_absdiff.mean, 1e-300);
  json summary;
  summary["model_verdict"] = to_string(rep.model_verdict);
  summary["monotone_within_2se"] = monotone;
  summary["final_over_initial"] = final_over_initial;
  detail::write_atomic(outdir + "/strongfeller.json", summary.dump(2) + "\n");
  outputs["strongfeller_json"] = "strongfeller.json";
  return {{"monotone", monotone}, {"final_over_initial", final_over_initial}};
}

}  // namespace scenario

inline RunManifest run_experiment(const ExperimentConfig& cfg, const std::string& outdir) {
  std::filesystem::create_directories(outdir);
  const auto t0 = std::chrono::steady_clock::now();
  json outputs;
  json headline;
  if (cfg.scenario == "criterion") headline = scenario::run_criterion(cfg, outdir, outputs);
  else if (cfg.scenario == "simulate") headline = scenario::run_simulate(cfg, outdir, outputs);
  else if (cfg.scenario == "control") headline = scenario::run_control(cfg, outdir, outputs);
  else if (cfg.scenario == "moment") headline = scenario::run_moment(cfg, outdir, outputs);
  else if (cfg.scenario == "density") headline = scenario::run_density(cfg, outdir, outputs);
  else if (cfg.scenario == "strongfeller") headline = scenario::run_strongfeller(cfg, outdir, outputs);
  else throw ConfigError("unknown scenario " + cfg.scenario);
  const auto t1 = std::chrono::steady_clock::now();

  RunManifest manifest;
  manifest.data["tool"] = "fracou";
  manifest.data["version"] = kToolVersion;
  manifest.data["scenario"] = cfg.scenario;
  manifest.data["seed"] = cfg.seed;
  manifest.data["config"] = cfg.raw;
  manifest.data["outputs"] = outputs;
  manifest.data["headline"] = headline;
  manifest.data["wall_time_s"] = std::chrono::duration<double>(t1 - t0).count();
  manifest.data["timestamp_unix"] =
      std::chrono::duration_cast<std::chrono::seconds>(
          std::chrono::system_clock::now().time_since_epoch())
          .count();
  manifest.path = outdir + "/manifest.json";
  detail::write_atomic(manifest.path, manifest.data.dump(2) + "\n");
  return manifest;
}

// One-page human-readable summary of a finished run.
inline std::string emit_report(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw std::runtime_error("cannot open manifest " + manifest_path);
  json manifest;
  in >> manifest;
  if (!manifest.contains("scenario") || !manifest.contains("outputs")) {
    throw std::runtime_error("manifest is missing required fields");
  }
  const std::string dir = std::filesystem::path(manifest_path).parent_path().string();
  const std::string scenario = manifest.at("scenario").get<std::string>();
  std::ostringstream out;
  out << "fracou run report\n";
  out << "scenario:  " << scenario << "\n";
  out << "seed:      " << manifest.value("seed", 0ull) << "\n";
  out << "wall time: " << manifest.value("wall_time_s", 0.0) << " s\n\n";

  auto load_json_output = [&](const char* key) -> std::optional<json> {
    const auto& outputs = manifest.at("outputs");
    if (!outputs.contains(key)) return std::nullopt;
    const std::string file = dir.empty() ? outputs.at(key).get<std::string>()
                                         : dir + "/" + outputs.at(key).get<std::string>();
    std::ifstream f(file);
    if (!f) throw std::runtime_error("missing run artifact " + file);
    json j;
    f >> j;
    return j;
  };

  if (scenario == "criterion") {
    const auto j = load_json_output("criterion_json");
    if (!j) throw std::runtime_error("criterion run without criterion.json");
    out << "  n      q_n            necsuf          ratio\n";
    for (const auto& r : j->at("per_mode")) {
      char line[160];
      std::snprintf(line, sizeof(line), "%3d   %-14.6g %-15.6g %-14.6g\n",
                    r.at("n").get<int>(), r.at("qn").get<double>(),
                    r.at("necsuf").get<double>(), r.at("ratio").get<double>());
      out << line;
    }
    out << "\nband [c1_hat, c2_hat] = [" << j->at("c1_hat").get<double>() << ", "
        << j->at("c2_hat").get<double>() << "]\n";
    out << "verdict: " << j->at("verdict").get<std::string>() << "\n";
  } else if (scenario == "control") {
    const auto j = load_json_output("control_json");
    out << "|u|_L2            = " << j->at("norm_l2").get<double>() << "\n";
    out << "steering residual = " << j->at("steering_residual").get<double>() << "\n";
    out << "H* status         = " << j->at("hstar").at("status").get<std::string>() << "\n";
    out << "H* trace          =";
    for (const auto& v : j->at("hstar").at("trace")) out << " " << v.get<double>();
    out << "\n";
  } else if (scenario == "moment") {
    const auto j = load_json_output("moment_json");
    out << "max residual  = " << j->at("max_residual").get<double>() << "\n";
    out << "ridge used    = " << j->at("ridge_used").get<double>() << "\n";
    out << "cond estimate = " << j->at("cond_estimate").get<double>() << "\n";
  } else if (scenario == "density") {
    const auto j = load_json_output("density_json");
    const double mean = j->at("mean_rho").get<double>();
    const double se = j->at("mean_rho_se").get<double>();
    out << "mean(rho) = " << mean << " +- " << se
        << (j->at("normalization_within_3se").get<bool>() ? "  [pass: within 3 SE of 1]"
                                                          : "  [FAIL: outside 3 SE of 1]")
        << "\n\ntransfer identity (lhs = E phi(X_T), rhs = E phi(Z_T) rho):\n";
    for (const auto& r : j->at("transfer")) {
      char line[200];
      std::snprintf(line, sizeof(line), "  %-16s lhs %-12.6g rhs %-12.6g |diff| %-10.3g 3se %-10.3g %s\n",
                    r.at("phi").get<std::string>().c_str(), r.at("lhs").get<double>(),
                    r.at("rhs").get<double>(), r.at("abs_diff").get<double>(),
                    3.0 * r.at("combined_se").get<double>(),
                    r.at("within_3se").get<bool>() ? "[pass]" : "[FAIL]");
      out << line;
    }
  } else if (scenario == "strongfeller") {
    const auto j = load_json_output("strongfeller_json");
    out << "model verdict      = " << j->at("model_verdict").get<std::string>() << "\n";
    out << "monotone trend     = "
        << (j->at("monotone_within_2se").get<bool>() ? "pass" : "FAIL") << "\n";
    out << "final/initial      = " << j->at("final_over_initial").get<double>() << "\n";
  } else if (scenario == "simulate") {
    out << "simulate run finished; per-mode covariance table in simulate.csv\n";
  }
  return out.str();
}

}  // namespace fracou
