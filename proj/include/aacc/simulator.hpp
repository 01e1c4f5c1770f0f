#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aacc/gmpc.hpp"
#include "aacc/ioc.hpp"
#include "aacc/traffic_models.hpp"
#include "aacc/types.hpp"

namespace aacc {

enum class Role { kEv, kCv, kPv, kBackground };
enum class ControllerType { kAacc, kBaseline };
enum class SimMode { kFunctionValidation, kTrafficFlow };
enum class CvMode { kIdmMobil, kScriptedLqr };

/// Full description of one closed-loop run.
struct Scenario {
  // Road and timing
  double road_length = 3000.0;
  double lane_width = 3.5;
  double dt = 0.1;
  double horizon_s = 1.0;  ///< planner lookahead
  double v_lim = 25.0;
  double a_min = -3.5;
  double a_max = 4.0;
  double duration_cap = 60.0;

  // Function-validation setup
  DrivingStyle cv_style = DrivingStyle::kConservative;
  double initial_gap = 20.0;  ///< CV ahead of EV by this much [m]
  /// Commit times for the mandatory cut-in; the aggressive driver acts
  /// essentially immediately, the conservative hesitates.
  double t_arm_conservative = 1.5;
  double t_arm_aggressive = 0.6;
  double pv_gap = 60.0;
  double pv_speed = 18.0;
  double ev_spawn_speed = 18.0;
  /// CVs spawn below the nominal desired speed so the approach transient
  /// expresses the style before the cut-in arms.
  double cv_spawn_speed_conservative = 17.0;
  double cv_spawn_speed_aggressive = 17.0;

  ControllerType controller = ControllerType::kAacc;
  SimMode mode = SimMode::kFunctionValidation;
  CvMode cv_mode = CvMode::kIdmMobil;

  // Harness mode: ground-truth style for the scripted LQR follower.
  StyleParams scripted_beta{};

  // Traffic-flow setup
  double vc_ratio = 0.4;
  double lane_capacity = 2200.0;  ///< veh/h/lane
  double ev_entry_time = 30.0;
  double traffic_duration_cap = 600.0;

  std::uint64_t rng_seed = 1;

  // Controller parameters
  double v_des_ev = 18.0;
  double theta1 = 10.0;
  double theta2 = 10.0;
  double theta3 = 1.0;
  double acc_time_gap = 1.5;
  double acc_k_gap = 0.23;
  double acc_k_speed = 0.74;
  double acc_engage_range = 40.0;
  double vehicle_length = 5.0;
};

struct VehicleRecord {
  int id = 0;
  Role role = Role::kBackground;
  int lane = 0;
  double x = 0.0;
  double y = 0.0;
  double v = 0.0;
  double psi = 0.0;
  double a_cmd = 0.0;
  double delta_cmd = 0.0;
};

struct StepRecord {
  double t = 0.0;
  std::vector<VehicleRecord> vehicles;
  double ev_accel = 0.0;
  bool beta_valid = false;
  StyleParams beta{};
  bool style_converged = false;
};

enum class LaneChangeEventKind { kArmed, kStarted, kCrossed, kCompleted, kAborted };

struct LaneChangeEvent {
  double t = 0.0;
  int vehicle = 0;
  LaneChangeEventKind kind = LaneChangeEventKind::kArmed;
};

struct SimLog {
  Scenario scenario;
  std::vector<StepRecord> steps;
  std::vector<LaneChangeEvent> events;
  std::vector<double> solve_times;  ///< seconds per planning call
  /// Per-step EV headway when full vehicle rows are not logged (traffic
  /// mode); function-validation metrics derive headway from the rows.
  std::vector<double> headway_trace;
  bool collision = false;
  double collision_time = -1.0;
  bool ev_completed = false;   ///< EV reached the road end
  double ev_entry_time = 0.0;
  double ev_exit_time = -1.0;

  /// Canonical per-step CSV: t,id,role,lane,x,y,v,psi,a_cmd. Deterministic
  /// formatting; timing data intentionally excluded.
  std::string to_csv() const;
};

struct Metrics {
  double avg_speed_ev = 0.0;
  double travel_time_ev = 0.0;
  double tth = 0.0;  ///< time-integrated headway shortfall [s^2]
  double speed_std_ev = 0.0;
  std::vector<int> headway_histogram;  ///< 0.5 s buckets up to the 10.5 s cap
  int headway_samples = 0;
  double mean_solve_time = 0.0;
  double p99_solve_time = 0.0;
  bool collision = false;
  double distance_ev = 0.0;

  std::string to_json() const;
};

SimLog run_function_validation(const Scenario& sc);
SimLog run_traffic_flow(const Scenario& sc);
SimLog run_scenario(const Scenario& sc);

/// Context the baseline longitudinal controller sees.
struct EvContext {
  double v = 0.0;
  double v_des = 18.0;
  std::optional<Neighbor> leader;  ///< nearest same-lane leader, bumper gap
  double a_min = -3.5;
  double a_max = 4.0;
  double v_lim = 25.0;
  double time_gap = 1.5;
  double k_gap = 0.23;
  double k_speed = 0.74;
  double engage_range = 40.0;
};

/// Constant-time-gap ACC: cruise law without an engaged leader, gap+speed
/// law within the engagement range, clamped to the actuator box and capped
/// at the road speed limit.
double baseline_acc_control(const EvContext& ctx);

Metrics compute_metrics(const SimLog& log, double h_threshold = 1.5);

inline constexpr double kHeadwayCap = 10.5;

}  // namespace aacc
