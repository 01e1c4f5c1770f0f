// Batch experiment runner and debugging front end.
//
//   aacc run --config exp.ini [--mode fv|traffic] [--out DIR] [--plots]
//            [--jobs N] [--seed S]
//   aacc identify --trajectory replay.csv
//   aacc plan --state state.json
//
// AACC_LOG=quiet|info|debug controls stderr verbosity.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "aacc/experiment.hpp"
#include "aacc/gmpc.hpp"
#include "aacc/ioc.hpp"
#include "aacc/simulator.hpp"

using nlohmann::json;

namespace {

int cmd_run(const std::string& config_path, const std::string& mode,
            const std::string& out_dir, bool plots, int jobs, long long seed) {
  aacc::ExperimentConfig cfg;
  if (!config_path.empty()) {
    cfg = aacc::ExperimentConfig::from_ini(aacc::IniDocument::load(config_path));
  }
  if (mode == "fv") {
    cfg.mode = aacc::SimMode::kFunctionValidation;
  } else if (mode == "traffic") {
    cfg.mode = aacc::SimMode::kTrafficFlow;
  } else if (!mode.empty()) {
    std::cerr << "unknown mode: " << mode << "\n";
    return 2;
  }
  if (!out_dir.empty()) {
    cfg.out_dir = out_dir;
  }
  if (plots) {
    cfg.plots = true;
  }
  if (jobs > 0) {
    cfg.jobs = jobs;
  }
  if (seed >= 0) {
    cfg.base_seed = static_cast<std::uint64_t>(seed);
  }
  const aacc::RunManifest manifest = aacc::run_matrix(cfg);
  if (cfg.plots) {
    aacc::emit_plots(manifest);
  }
  return aacc::manifest_acceptable(manifest) ? 0 : 1;
}

int cmd_identify(const std::string& trajectory_path) {
  std::ifstream in(trajectory_path);
  if (!in) {
    std::cerr << "cannot open " << trajectory_path << "\n";
    return 2;
  }
  const aacc::ReplayResult r = aacc::identify_trajectory_csv(in);
  json out;
  out["samples"] = r.samples;
  out["longitudinal_converged"] = r.longitudinal_converged;
  out["lateral_converged"] = r.lateral_converged;
  if (r.beta_long) {
    out["beta_long"] = {(*r.beta_long)(0), (*r.beta_long)(1), (*r.beta_long)(2)};
  }
  if (r.beta_lat) {
    out["beta_lat"] = {(*r.beta_lat)(0), (*r.beta_lat)(1)};
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_plan(const std::string& state_path) {
  std::ifstream in(state_path);
  if (!in) {
    std::cerr << "cannot open " << state_path << "\n";
    return 2;
  }
  json j;
  in >> j;

  aacc::SystemState x;
  x.delta_x = j.value("delta_x", 20.0);
  x.v_ev = j.value("v_ev", 18.0);
  x.v_cv = j.value("v_cv", 18.0);
  x.y_cv = j.value("y_cv", 3.5);
  x.psi_cv = j.value("psi_cv", 0.0);

  aacc::StyleParams beta;
  if (j.contains("beta") && j["beta"].size() == 5) {
    beta.beta_long << j["beta"][0], j["beta"][1], j["beta"][2];
    beta.beta_lat << j["beta"][3], j["beta"][4];
  }
  aacc::EvObjective obj;
  if (j.contains("theta") && j["theta"].size() == 3) {
    obj.theta1 = j["theta"][0];
    obj.theta2 = j["theta"][1];
    obj.theta3 = j["theta"][2];
  }
  obj.delta_x_des = j.value("delta_x_des_ev", obj.delta_x_des);
  obj.v_des = j.value("v_des_ev", obj.v_des);

  aacc::PlanConfig cfg;
  cfg.horizon = j.value("horizon", cfg.horizon);
  cfg.dt = j.value("dt", cfg.dt);
  cfg.a_min = j.value("a_min", cfg.a_min);
  cfg.a_max = j.value("a_max", cfg.a_max);
  cfg.v_lim = j.value("v_lim", cfg.v_lim);

  const aacc::PlanResult r = aacc::plan(x, beta, obj, cfg);
  json out;
  out["status"] = r.status == aacc::SolveStatus::kOptimal
                      ? "optimal"
                      : (r.status == aacc::SolveStatus::kInfeasibleRelaxed
                             ? "infeasible-relaxed"
                             : "failed");
  out["cost"] = r.cost;
  out["solve_time_ms"] = 1e3 * r.solve_time;
  out["u_ev"] = json::array();
  for (int i = 0; i < r.u_ev.size(); ++i) {
    out["u_ev"].push_back(r.u_ev(i));
  }
  out["x_pred"] = json::array();
  for (const auto& s : r.x_seq) {
    out["x_pred"].push_back({s.delta_x, s.v_ev, s.v_cv, s.y_cv, s.psi_cv});
  }
  out["u_cv_pred"] = json::array();
  for (const auto& u : r.u_cv_pred) {
    out["u_cv_pred"].push_back({u.a_cv, u.delta_f});
  }
  std::cout << out.dump(2) << "\n";
  return r.status == aacc::SolveStatus::kFailed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anti-bullying adaptive cruise control batch simulator"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "execute an experiment matrix");
  std::string config_path, mode, out_dir;
  bool plots = false;
  int jobs = 0;
  long long seed = -1;
  run->add_option("--config", config_path, "experiment config file");
  run->add_option("--mode", mode, "fv | traffic");
  run->add_option("--out", out_dir, "output directory");
  run->add_flag("--plots", plots, "render static SVG plots");
  run->add_option("--jobs", jobs, "worker threads");
  run->add_option("--seed", seed, "base RNG seed");

  auto* identify = app.add_subcommand("identify", "offline style identification");
  std::string trajectory_path;
  identify->add_option("--trajectory", trajectory_path, "replay CSV")
      ->required();

  auto* plan_cmd = app.add_subcommand("plan", "single planning cycle");
  std::string state_path;
  plan_cmd->add_option("--state", state_path, "state JSON")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      return cmd_run(config_path, mode, out_dir, plots, jobs, seed);
    }
    if (identify->parsed()) {
      return cmd_identify(trajectory_path);
    }
    if (plan_cmd->parsed()) {
      return cmd_plan(state_path);
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  }
  return 2;
}
