#include "aacc/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "aacc/svg.hpp"

namespace aacc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kArtifactVersion = "aacc 0.1.0";

int log_level() {
  static const int level = [] {
    const char* env = std::getenv("AACC_LOG");
    if (!env) {
      return 1;
    }
    const std::string v = env;
    if (v == "quiet") {
      return 0;
    }
    if (v == "debug") {
      return 2;
    }
    return 1;
  }();
  return level;
}

void log_info(const std::string& msg) {
  if (log_level() >= 1) {
    std::fprintf(stderr, "[aacc] %s\n", msg.c_str());
  }
}

std::string style_name(DrivingStyle s) {
  return s == DrivingStyle::kConservative ? "conservative" : "aggressive";
}

std::string controller_name(ControllerType c) {
  return c == ControllerType::kAacc ? "aacc" : "baseline";
}

DrivingStyle style_from(const std::string& s) {
  if (s == "conservative") {
    return DrivingStyle::kConservative;
  }
  if (s == "aggressive") {
    return DrivingStyle::kAggressive;
  }
  throw std::runtime_error("unknown style: " + s);
}

ControllerType controller_from(const std::string& s) {
  if (s == "aacc") {
    return ControllerType::kAacc;
  }
  if (s == "baseline") {
    return ControllerType::kBaseline;
  }
  throw std::runtime_error("unknown controller: " + s);
}

std::string fmt_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string serialize_scenario(const Scenario& sc) {
  std::ostringstream os;
  os << "road_length=" << fmt_num(sc.road_length)
     << ";lane_width=" << fmt_num(sc.lane_width) << ";dt=" << fmt_num(sc.dt)
     << ";horizon_s=" << fmt_num(sc.horizon_s) << ";v_lim=" << fmt_num(sc.v_lim)
     << ";a_min=" << fmt_num(sc.a_min) << ";a_max=" << fmt_num(sc.a_max)
     << ";duration_cap=" << fmt_num(sc.duration_cap)
     << ";cv_style=" << style_name(sc.cv_style)
     << ";initial_gap=" << fmt_num(sc.initial_gap)
     << ";t_arm_conservative=" << fmt_num(sc.t_arm_conservative)
     << ";t_arm_aggressive=" << fmt_num(sc.t_arm_aggressive)
     << ";pv_gap=" << fmt_num(sc.pv_gap) << ";pv_speed=" << fmt_num(sc.pv_speed)
     << ";ev_spawn_speed=" << fmt_num(sc.ev_spawn_speed)
     << ";cv_spawn_c=" << fmt_num(sc.cv_spawn_speed_conservative)
     << ";cv_spawn_a=" << fmt_num(sc.cv_spawn_speed_aggressive)
     << ";controller=" << controller_name(sc.controller)
     << ";mode=" << (sc.mode == SimMode::kFunctionValidation ? "fv" : "traffic")
     << ";vc_ratio=" << fmt_num(sc.vc_ratio)
     << ";lane_capacity=" << fmt_num(sc.lane_capacity)
     << ";ev_entry_time=" << fmt_num(sc.ev_entry_time)
     << ";traffic_duration_cap=" << fmt_num(sc.traffic_duration_cap)
     << ";rng_seed=" << sc.rng_seed << ";v_des_ev=" << fmt_num(sc.v_des_ev)
     << ";theta=" << fmt_num(sc.theta1) << ',' << fmt_num(sc.theta2) << ','
     << fmt_num(sc.theta3) << ";acc=" << fmt_num(sc.acc_time_gap) << ','
     << fmt_num(sc.acc_k_gap) << ',' << fmt_num(sc.acc_k_speed) << ','
     << fmt_num(sc.acc_engage_range)
     << ";vehicle_length=" << fmt_num(sc.vehicle_length);
  return os.str();
}

struct CsvRow {
  double t;
  int id;
  std::string role;
  int lane;
  double x, y, v, psi, a;
};

std::vector<CsvRow> read_run_csv(const std::string& path) {
  std::ifstream in(path);
  std::vector<CsvRow> rows;
  if (!in) {
    return rows;
  }
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    CsvRow r;
    char role[16];
    if (std::sscanf(line.c_str(), "%lf,%d,%15[^,],%d,%lf,%lf,%lf,%lf,%lf",
                    &r.t, &r.id, role, &r.lane, &r.x, &r.y, &r.v, &r.psi,
                    &r.a) == 9) {
      r.role = role;
      rows.push_back(r);
    }
  }
  return rows;
}

}  // namespace

bool apply_scenario_override(Scenario& sc, const std::string& key,
                             const std::string& value) {
  const auto d = [&] { return std::stod(value); };
  if (key == "road_length") sc.road_length = d();
  else if (key == "lane_width") sc.lane_width = d();
  else if (key == "dt") sc.dt = d();
  else if (key == "horizon_s") sc.horizon_s = d();
  else if (key == "v_lim") sc.v_lim = d();
  else if (key == "a_min") sc.a_min = d();
  else if (key == "a_max") sc.a_max = d();
  else if (key == "duration_cap") sc.duration_cap = d();
  else if (key == "initial_gap") sc.initial_gap = d();
  else if (key == "t_arm_conservative") sc.t_arm_conservative = d();
  else if (key == "t_arm_aggressive") sc.t_arm_aggressive = d();
  else if (key == "pv_gap") sc.pv_gap = d();
  else if (key == "pv_speed") sc.pv_speed = d();
  else if (key == "ev_spawn_speed") sc.ev_spawn_speed = d();
  else if (key == "cv_spawn_speed_conservative") sc.cv_spawn_speed_conservative = d();
  else if (key == "cv_spawn_speed_aggressive") sc.cv_spawn_speed_aggressive = d();
  else if (key == "vc_ratio") sc.vc_ratio = d();
  else if (key == "lane_capacity") sc.lane_capacity = d();
  else if (key == "ev_entry_time") sc.ev_entry_time = d();
  else if (key == "traffic_duration_cap") sc.traffic_duration_cap = d();
  else if (key == "rng_seed") sc.rng_seed = std::stoull(value);
  else if (key == "v_des_ev") sc.v_des_ev = d();
  else if (key == "theta1") sc.theta1 = d();
  else if (key == "theta2") sc.theta2 = d();
  else if (key == "theta3") sc.theta3 = d();
  else if (key == "acc_time_gap") sc.acc_time_gap = d();
  else if (key == "acc_k_gap") sc.acc_k_gap = d();
  else if (key == "acc_k_speed") sc.acc_k_speed = d();
  else if (key == "acc_engage_range") sc.acc_engage_range = d();
  else if (key == "vehicle_length") sc.vehicle_length = d();
  else if (key == "cv_style") sc.cv_style = style_from(value);
  else if (key == "controller") sc.controller = controller_from(value);
  else return false;
  return true;
}

ExperimentConfig ExperimentConfig::from_ini(const IniDocument& doc) {
  ExperimentConfig cfg;
  const std::string mode = doc.get("experiment", "mode", "fv");
  cfg.mode = mode == "traffic" ? SimMode::kTrafficFlow
                               : SimMode::kFunctionValidation;
  cfg.out_dir = doc.get("experiment", "out_dir", cfg.out_dir);
  cfg.plots = doc.get_bool("experiment", "plots", cfg.plots);
  cfg.jobs = doc.get_int("experiment", "jobs", cfg.jobs);
  cfg.seeds = doc.get_int("matrix", "seeds", cfg.seeds);
  cfg.base_seed = static_cast<std::uint64_t>(
      doc.get_int("matrix", "base_seed", static_cast<int>(cfg.base_seed)));
  if (doc.has("matrix", "styles")) {
    cfg.styles.clear();
    for (const auto& s : split_list(doc.get("matrix", "styles"))) {
      cfg.styles.push_back(style_from(s));
    }
  }
  if (doc.has("matrix", "gaps")) {
    cfg.gaps = split_doubles(doc.get("matrix", "gaps"));
  }
  if (doc.has("matrix", "controllers")) {
    cfg.controllers.clear();
    for (const auto& s : split_list(doc.get("matrix", "controllers"))) {
      cfg.controllers.push_back(controller_from(s));
    }
  }
  if (doc.has("matrix", "vc_ratios")) {
    cfg.vc_ratios = split_doubles(doc.get("matrix", "vc_ratios"));
  }
  const auto it = doc.sections().find("scenario");
  if (it != doc.sections().end()) {
    for (const auto& [k, v] : it->second) {
      if (!apply_scenario_override(cfg.scenario, k, v)) {
        throw std::runtime_error("unknown scenario key: " + k);
      }
    }
  }
  return cfg;
}

IniDocument ExperimentConfig::to_ini() const {
  IniDocument doc;
  doc.set("experiment", "mode",
          mode == SimMode::kTrafficFlow ? "traffic" : "fv");
  doc.set("experiment", "out_dir", out_dir);
  doc.set("experiment", "plots", plots ? "true" : "false");
  doc.set("experiment", "jobs", std::to_string(jobs));
  std::string styles_csv;
  for (const auto& s : styles) {
    styles_csv += (styles_csv.empty() ? "" : ",") + style_name(s);
  }
  doc.set("matrix", "styles", styles_csv);
  std::string gaps_csv;
  for (double g : gaps) {
    gaps_csv += (gaps_csv.empty() ? "" : ",") + fmt_num(g);
  }
  doc.set("matrix", "gaps", gaps_csv);
  std::string ctrl_csv;
  for (const auto& c : controllers) {
    ctrl_csv += (ctrl_csv.empty() ? "" : ",") + controller_name(c);
  }
  doc.set("matrix", "controllers", ctrl_csv);
  std::string vc_csv;
  for (double v : vc_ratios) {
    vc_csv += (vc_csv.empty() ? "" : ",") + fmt_num(v);
  }
  doc.set("matrix", "vc_ratios", vc_csv);
  doc.set("matrix", "seeds", std::to_string(seeds));
  doc.set("matrix", "base_seed", std::to_string(base_seed));
  return doc;
}

std::vector<RunSpec> expand_matrix(const ExperimentConfig& cfg) {
  std::vector<RunSpec> specs;
  if (cfg.mode == SimMode::kFunctionValidation) {
    for (const auto style : cfg.styles) {
      for (const double gap : cfg.gaps) {
        for (const auto ctrl : cfg.controllers) {
          Scenario sc = cfg.scenario;
          sc.mode = SimMode::kFunctionValidation;
          sc.cv_style = style;
          sc.initial_gap = gap;
          sc.controller = ctrl;
          sc.rng_seed = cfg.base_seed;
          std::ostringstream name;
          name << "fv_" << style_name(style) << "_gap" << fmt_num(gap) << '_'
               << controller_name(ctrl);
          specs.push_back(RunSpec{name.str(), sc});
        }
      }
    }
  } else {
    for (const double vc : cfg.vc_ratios) {
      for (const auto ctrl : cfg.controllers) {
        for (int seed = 0; seed < cfg.seeds; ++seed) {
          Scenario sc = cfg.scenario;
          sc.mode = SimMode::kTrafficFlow;
          sc.vc_ratio = vc;
          sc.controller = ctrl;
          sc.rng_seed = cfg.base_seed + static_cast<std::uint64_t>(seed);
          std::ostringstream name;
          name << "traffic_vc" << fmt_num(vc) << '_' << controller_name(ctrl)
               << "_seed" << seed;
          specs.push_back(RunSpec{name.str(), sc});
        }
      }
    }
  }
  return specs;
}

std::uint64_t scenario_hash(const Scenario& sc) {
  const std::string s = serialize_scenario(sc);
  std::uint64_t h = 14695981039346656037ull;
  for (const unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string RunManifest::to_json() const {
  json j;
  j["artifact_version"] = artifact_version;
  j["out_dir"] = out_dir;
  j["mode"] = mode == SimMode::kTrafficFlow ? "traffic" : "fv";
  j["entries"] = json::array();
  for (const auto& e : entries) {
    json je;
    je["name"] = e.name;
    je["scenario_hash"] = e.scenario_hash;
    je["seed"] = e.seed;
    je["csv"] = e.csv_path;
    je["metrics"] = e.metrics_path;
    je["wall_ms"] = e.wall_ms;
    je["ok"] = e.ok;
    je["collision"] = e.collision;
    if (!e.error.empty()) {
      je["error"] = e.error;
    }
    j["entries"].push_back(je);
  }
  j["aggregates"] = aggregate_files;
  return j.dump(2) + "\n";
}

void RunManifest::save(const std::string& path) const {
  std::ofstream out(path);
  out << to_json();
}

namespace {

struct RunOutcome {
  RunManifest::Entry entry;
  Metrics metrics;
  SimMode mode;
  Scenario scenario;
};

void write_fv_aggregates(const ExperimentConfig& cfg,
                         const std::vector<RunOutcome>& outcomes,
                         RunManifest& manifest) {
  // Tidy table plus the per-style controller comparisons.
  const std::string path = cfg.out_dir + "/aggregate_fv.csv";
  std::ofstream out(path);
  out << "style,gap,controller,avg_speed,tth,collision\n";
  std::map<std::pair<std::string, double>, std::map<std::string, Metrics>> grid;
  for (const auto& oc : outcomes) {
    if (!oc.entry.ok) {
      continue;
    }
    const std::string style = style_name(oc.scenario.cv_style);
    const std::string ctrl = controller_name(oc.scenario.controller);
    out << style << ',' << fmt_num(oc.scenario.initial_gap) << ',' << ctrl
        << ',' << fmt_num(oc.metrics.avg_speed_ev) << ','
        << fmt_num(oc.metrics.tth) << ',' << (oc.metrics.collision ? 1 : 0)
        << '\n';
    grid[{style, oc.scenario.initial_gap}][ctrl] = oc.metrics;
  }
  manifest.aggregate_files.push_back(path);

  const std::string cmp_path = cfg.out_dir + "/aggregate_fv_benefit.csv";
  std::ofstream cmp(cmp_path);
  cmp << "style,gap,avg_speed_aacc,avg_speed_baseline,speed_benefit_pct,"
         "tth_aacc,tth_baseline,tth_benefit_pct\n";
  for (const auto& [key, per_ctrl] : grid) {
    if (!per_ctrl.count("aacc") || !per_ctrl.count("baseline")) {
      continue;
    }
    const Metrics& a = per_ctrl.at("aacc");
    const Metrics& b = per_ctrl.at("baseline");
    const double sp_ben =
        b.avg_speed_ev > 0 ? 100.0 * (a.avg_speed_ev - b.avg_speed_ev) / b.avg_speed_ev
                           : 0.0;
    const double tth_ben =
        b.tth > 0 ? 100.0 * (b.tth - a.tth) / b.tth : 0.0;
    cmp << key.first << ',' << fmt_num(key.second) << ','
        << fmt_num(a.avg_speed_ev) << ',' << fmt_num(b.avg_speed_ev) << ','
        << fmt_num(sp_ben) << ',' << fmt_num(a.tth) << ',' << fmt_num(b.tth)
        << ',' << fmt_num(tth_ben) << '\n';
  }
  manifest.aggregate_files.push_back(cmp_path);
}

void write_traffic_aggregates(const ExperimentConfig& cfg,
                              const std::vector<RunOutcome>& outcomes,
                              RunManifest& manifest) {
  struct Cell {
    std::vector<double> travel;
    std::vector<double> speed_std;
    std::vector<double> mean_solve;
  };
  std::map<std::pair<double, std::string>, Cell> grid;
  for (const auto& oc : outcomes) {
    if (!oc.entry.ok) {
      continue;
    }
    auto& cell = grid[{oc.scenario.vc_ratio,
                       controller_name(oc.scenario.controller)}];
    cell.travel.push_back(oc.metrics.travel_time_ev);
    cell.speed_std.push_back(oc.metrics.speed_std_ev);
    if (oc.metrics.mean_solve_time > 0) {
      cell.mean_solve.push_back(oc.metrics.mean_solve_time);
    }
  }
  const auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) {
      s += x;
    }
    return v.empty() ? 0.0 : s / v.size();
  };

  const std::string path = cfg.out_dir + "/aggregate_traffic.csv";
  std::ofstream out(path);
  out << "vc,controller,runs,mean_travel_time,mean_speed_std,mean_solve_ms\n";
  for (const auto& [key, cell] : grid) {
    out << fmt_num(key.first) << ',' << key.second << ',' << cell.travel.size()
        << ',' << fmt_num(mean(cell.travel)) << ','
        << fmt_num(mean(cell.speed_std)) << ','
        << fmt_num(1e3 * mean(cell.mean_solve)) << '\n';
  }
  manifest.aggregate_files.push_back(path);

  // Speed standard deviation laid out as a comparison table:
  // one row per control type, one column per v/c ratio, plus the benefit row.
  const std::string t2 = cfg.out_dir + "/aggregate_speed_std_table.csv";
  std::ofstream tab(t2);
  tab << "control";
  for (double vc : cfg.vc_ratios) {
    tab << ",vc=" << fmt_num(vc);
  }
  tab << '\n';
  for (const std::string ctrl : {"aacc", "baseline"}) {
    tab << ctrl;
    for (double vc : cfg.vc_ratios) {
      const auto it = grid.find({vc, ctrl});
      tab << ',' << (it != grid.end() ? fmt_num(mean(it->second.speed_std)) : "");
    }
    tab << '\n';
  }
  tab << "benefit_pct";
  for (double vc : cfg.vc_ratios) {
    const auto ia = grid.find({vc, "aacc"});
    const auto ib = grid.find({vc, "baseline"});
    if (ia != grid.end() && ib != grid.end() && mean(ib->second.speed_std) > 0) {
      const double ben = 100.0 *
                         (mean(ib->second.speed_std) - mean(ia->second.speed_std)) /
                         mean(ib->second.speed_std);
      tab << ',' << fmt_num(ben);
    } else {
      tab << ',';
    }
  }
  tab << '\n';
  manifest.aggregate_files.push_back(t2);
}

}  // namespace

RunManifest run_matrix(const ExperimentConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  const std::vector<RunSpec> specs = expand_matrix(cfg);
  std::vector<RunOutcome> outcomes(specs.size());

  std::atomic<size_t> next{0};
  const int jobs = std::max(1, cfg.jobs);
  const auto worker = [&] {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= specs.size()) {
        return;
      }
      const RunSpec& spec = specs[i];
      RunOutcome& oc = outcomes[i];
      oc.scenario = spec.scenario;
      oc.mode = spec.scenario.mode;
      oc.entry.name = spec.name;
      oc.entry.seed = spec.scenario.rng_seed;
      oc.entry.scenario_hash = scenario_hash(spec.scenario);
      const auto t0 = std::chrono::steady_clock::now();
      try {
        const SimLog log = run_scenario(spec.scenario);
        oc.metrics = compute_metrics(log);
        oc.entry.collision = log.collision;
        oc.entry.csv_path = cfg.out_dir + "/" + spec.name + ".csv";
        oc.entry.metrics_path = cfg.out_dir + "/" + spec.name + ".metrics.json";
        std::ofstream(oc.entry.csv_path) << log.to_csv();
        std::ofstream(oc.entry.metrics_path) << oc.metrics.to_json();
        oc.entry.ok = true;
      } catch (const std::exception& ex) {
        oc.entry.ok = false;
        oc.entry.error = ex.what();
      }
      oc.entry.wall_ms =
          1e3 * std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                              t0)
                    .count();
    }
  };
  std::vector<std::thread> pool;
  for (int i = 0; i < jobs; ++i) {
    pool.emplace_back(worker);
  }
  for (auto& th : pool) {
    th.join();
  }

  RunManifest manifest;
  manifest.out_dir = cfg.out_dir;
  manifest.mode = cfg.mode;
  manifest.artifact_version = kArtifactVersion;
  for (auto& oc : outcomes) {
    manifest.entries.push_back(oc.entry);
    if (!oc.entry.ok) {
      log_info("run failed: " + oc.entry.name + ": " + oc.entry.error);
    }
  }
  if (cfg.mode == SimMode::kFunctionValidation) {
    write_fv_aggregates(cfg, outcomes, manifest);
  } else {
    write_traffic_aggregates(cfg, outcomes, manifest);
  }
  manifest.save(cfg.out_dir + "/manifest.json");
  log_info("completed " + std::to_string(specs.size()) + " runs -> " +
           cfg.out_dir);
  return manifest;
}

std::vector<std::string> emit_plots(const RunManifest& manifest) {
  std::vector<std::string> files;
  for (const auto& e : manifest.entries) {
    if (!e.ok) {
      log_info("plot skipped, no data: " + e.name);
      continue;
    }
    const auto rows = read_run_csv(e.csv_path);
    if (rows.empty()) {
      log_info("plot skipped, empty csv: " + e.name);
      continue;
    }
    std::map<int, std::pair<std::string, std::vector<CsvRow>>> per_vehicle;
    for (const auto& r : rows) {
      per_vehicle[r.id].first = r.role;
      per_vehicle[r.id].second.push_back(r);
    }

    SvgPlot speed(e.name + " speed", "t [s]", "v [m/s]");
    SvgPlot pos(e.name + " longitudinal position", "t [s]", "x [m]");
    SvgPlot traj(e.name + " sampled trajectories", "x [m]", "y [m]");
    for (const auto& [id, entry] : per_vehicle) {
      const auto& [role, vrows] = entry;
      std::vector<double> t, v, x, y;
      std::vector<double> mx, my;  // marks every 2 s
      for (size_t i = 0; i < vrows.size(); ++i) {
        t.push_back(vrows[i].t);
        v.push_back(vrows[i].v);
        x.push_back(vrows[i].x);
        y.push_back(vrows[i].y);
        if (i % 20 == 0) {
          mx.push_back(vrows[i].x);
          my.push_back(vrows[i].y);
        }
      }
      const std::string label = role + std::to_string(id);
      speed.add_series(label, t, v);
      pos.add_series(label, t, x);
      traj.add_series(label, x, y);
      traj.add_marks(mx, my);
    }
    const std::string base = manifest.out_dir + "/" + e.name;
    speed.save(base + "_speed.svg");
    pos.save(base + "_position.svg");
    traj.save(base + "_trajectory.svg");
    files.push_back(base + "_speed.svg");
    files.push_back(base + "_position.svg");
    files.push_back(base + "_trajectory.svg");
  }

  // Aggregate bar charts from the comparison tables.
  if (manifest.mode == SimMode::kFunctionValidation) {
    std::ifstream in(manifest.out_dir + "/aggregate_fv.csv");
    if (in) {
      std::string line;
      std::getline(in, line);
      std::map<std::string, std::map<double, std::map<std::string, Metrics>>> g;
      while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::string style, ctrl, field;
        double gap, avg, tth;
        std::getline(ss, style, ',');
        std::getline(ss, field, ',');
        gap = std::stod(field);
        std::getline(ss, ctrl, ',');
        std::getline(ss, field, ',');
        avg = std::stod(field);
        std::getline(ss, field, ',');
        tth = std::stod(field);
        Metrics m;
        m.avg_speed_ev = avg;
        m.tth = tth;
        g[style][gap][ctrl] = m;
      }
      for (const auto& [style, by_gap] : g) {
        std::vector<std::string> groups;
        std::vector<std::vector<double>> speeds, tths;
        for (const auto& [gap, by_ctrl] : by_gap) {
          groups.push_back(fmt_num(gap) + " m");
          std::vector<double> srow, trow;
          for (const std::string ctrl : {"aacc", "baseline"}) {
            const auto it = by_ctrl.find(ctrl);
            srow.push_back(it != by_ctrl.end() ? it->second.avg_speed_ev : 0.0);
            trow.push_back(it != by_ctrl.end() ? it->second.tth : 0.0);
          }
          speeds.push_back(srow);
          tths.push_back(trow);
        }
        SvgPlot sp("average EV speed (" + style + ")", "initial gap",
                   "v [m/s]");
        sp.add_bar_groups(groups, {"aacc", "baseline"}, speeds);
        const std::string f1 =
            manifest.out_dir + "/aggregate_avg_speed_" + style + ".svg";
        sp.save(f1);
        files.push_back(f1);
        SvgPlot tp("headway shortfall integral (" + style + ")",
                   "initial gap", "TTH [s^2]");
        tp.add_bar_groups(groups, {"aacc", "baseline"}, tths);
        const std::string f2 =
            manifest.out_dir + "/aggregate_tth_" + style + ".svg";
        tp.save(f2);
        files.push_back(f2);
      }
    }
  } else {
    std::ifstream in(manifest.out_dir + "/aggregate_traffic.csv");
    if (in) {
      std::string line;
      std::getline(in, line);
      std::map<double, std::map<std::string, double>> travel;
      while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::string field, ctrl;
        std::getline(ss, field, ',');
        const double vc = std::stod(field);
        std::getline(ss, ctrl, ',');
        std::getline(ss, field, ',');  // runs
        std::getline(ss, field, ',');
        travel[vc][ctrl] = std::stod(field);
      }
      std::vector<std::string> groups;
      std::vector<std::vector<double>> vals;
      for (const auto& [vc, by_ctrl] : travel) {
        groups.push_back("v/c " + fmt_num(vc));
        std::vector<double> row;
        for (const std::string ctrl : {"aacc", "baseline"}) {
          const auto it = by_ctrl.find(ctrl);
          row.push_back(it != by_ctrl.end() ? it->second : 0.0);
        }
        vals.push_back(row);
      }
      SvgPlot tp("EV travel time by congestion level", "demand",
                 "travel time [s]");
      tp.add_bar_groups(groups, {"aacc", "baseline"}, vals);
      const std::string f = manifest.out_dir + "/aggregate_travel_time.svg";
      tp.save(f);
      files.push_back(f);
    }

    // Mean planner wall time per congestion level, and the pooled headway
    // distributions per controller.
    std::ifstream in2(manifest.out_dir + "/aggregate_traffic.csv");
    if (in2) {
      std::string line;
      std::getline(in2, line);
      std::map<double, double> solve_ms;
      while (std::getline(in2, line)) {
        std::istringstream ss(line);
        std::string field, ctrl;
        std::getline(ss, field, ',');
        const double vc = std::stod(field);
        std::getline(ss, ctrl, ',');
        std::getline(ss, field, ',');
        std::getline(ss, field, ',');
        std::getline(ss, field, ',');
        std::getline(ss, field, ',');
        if (ctrl == "aacc") {
          solve_ms[vc] = std::stod(field);
        }
      }
      if (!solve_ms.empty()) {
        std::vector<std::string> groups;
        std::vector<std::vector<double>> vals;
        for (const auto& [vc, ms] : solve_ms) {
          groups.push_back("v/c " + fmt_num(vc));
          vals.push_back({ms});
        }
        SvgPlot sp("mean planning time by congestion level", "demand",
                   "wall time [ms]");
        sp.add_bar_groups(groups, {"aacc"}, vals);
        const std::string f = manifest.out_dir + "/aggregate_solve_time.svg";
        sp.save(f);
        files.push_back(f);
      }
    }
    {
      std::map<std::string, std::vector<double>> pooled;  // ctrl -> histogram
      for (const auto& e : manifest.entries) {
        if (!e.ok) {
          continue;
        }
        std::ifstream mf(e.metrics_path);
        if (!mf) {
          continue;
        }
        json jm;
        mf >> jm;
        if (!jm.contains("headway_histogram")) {
          continue;
        }
        const std::string ctrl =
            e.name.find("_aacc_") != std::string::npos ? "aacc" : "baseline";
        auto& hist = pooled[ctrl];
        const auto& jh = jm["headway_histogram"];
        if (hist.size() < jh.size()) {
          hist.resize(jh.size(), 0.0);
        }
        for (size_t i = 0; i < jh.size(); ++i) {
          hist[i] += jh[i].get<double>();
        }
      }
      if (!pooled.empty()) {
        SvgPlot hp("EV time-headway distribution", "headway [s]", "samples");
        for (const auto& [ctrl, hist] : pooled) {
          std::vector<double> x, y;
          for (size_t i = 0; i < hist.size(); ++i) {
            x.push_back(0.25 + 0.5 * i);
            y.push_back(hist[i]);
          }
          hp.add_series(ctrl, x, y);
        }
        const std::string f = manifest.out_dir + "/aggregate_headway.svg";
        hp.save(f);
        files.push_back(f);
      }
    }
  }
  return files;
}

bool manifest_acceptable(const RunManifest& manifest) {
  for (const auto& e : manifest.entries) {
    if (!e.ok) {
      return false;
    }
    if (manifest.mode == SimMode::kFunctionValidation && e.collision &&
        e.name.find("_aacc") != std::string::npos) {
      return false;
    }
  }
  return true;
}

}  // namespace aacc
