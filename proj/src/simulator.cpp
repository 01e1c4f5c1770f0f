#include "aacc/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <sstream>

#include "aacc/cv_reaction.hpp"
#include "aacc/dynamics.hpp"

namespace aacc {

namespace {

constexpr double kMinSpeedForHeadway = 0.1;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

const char* role_name(Role r) {
  switch (r) {
    case Role::kEv: return "EV";
    case Role::kCv: return "CV";
    case Role::kPv: return "PV";
    default: return "BG";
  }
}

// Smooth lateral profile between lane centerlines: quintic with zero slope
// and curvature at both ends.
struct LateralPlan {
  bool active = false;
  double y_from = 0.0;
  double y_to = 0.0;
  double t_start = 0.0;
  double duration = 3.0;

  double y_ref(double t) const {
    const double s = std::clamp((t - t_start) / duration, 0.0, 1.0);
    const double shape = s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
    return y_from + (y_to - y_from) * shape;
  }
  double ydot_ref(double t) const {
    const double s = std::clamp((t - t_start) / duration, 0.0, 1.0);
    const double dshape = 30.0 * s * s * (1.0 - 2.0 * s + s * s);
    return (y_to - y_from) * dshape / duration;
  }
  bool finished(double t) const { return t >= t_start + duration; }
};

// Inverse-kinematics steering: desired yaw from the lateral reference plus
// position feedback, then the bicycle relations map commanded yaw rate to a
// front steering angle.
double track_lateral(const LateralPlan& plan, double t, double y, double psi,
                     double v, const VehicleGeometry& geom) {
  const double v_eff = std::max(v, 1.0);
  const double y_ref = plan.active ? plan.y_ref(t) : plan.y_to;
  const double ydot_ref = plan.active ? plan.ydot_ref(t) : 0.0;
  const double psi_des =
      std::asin(std::clamp(ydot_ref / v_eff, -0.35, 0.35)) +
      std::clamp(0.6 * (y_ref - y) / v_eff, -0.2, 0.2);
  const double psi_rate_cmd = 3.0 * (psi_des - psi);
  const double sin_phi = std::clamp(psi_rate_cmd * geom.l_r / v_eff, -0.3, 0.3);
  const double phi = std::asin(sin_phi);
  const double delta =
      std::atan(std::tan(phi) * geom.wheelbase() / geom.l_r);
  return std::clamp(delta, -0.5, 0.5);
}

enum class CvPhase { kCruise, kArmed, kMergeAhead, kYielding, kMergeBehind, kDone };

struct Vehicle {
  int id = 0;
  Role role = Role::kBackground;
  double x = 0.0;
  double y = 0.0;
  double v = 0.0;
  double psi = 0.0;
  DrivingStyle style = DrivingStyle::kConservative;
  LateralPlan lat;
  int lane = 0;         // by lateral center
  int target_lane = 0;  // intent while changing
  bool changing = false;
  bool crossed_logged = false;
  double a_cmd = 0.0;
  double delta_cmd = 0.0;
};

struct World {
  const Scenario& sc;
  std::vector<Vehicle> vehicles;
  double t = 0.0;
  std::mt19937_64 rng;
  SimLog log;

  explicit World(const Scenario& s) : sc(s), rng(s.rng_seed) { log.scenario = s; }

  double lane_center(int lane) const { return lane * sc.lane_width; }
  int lane_of(double y) const {
    return y < 0.5 * sc.lane_width ? 0 : 1;
  }

  Vehicle* find(Role role) {
    for (auto& v : vehicles) {
      if (v.role == role) {
        return &v;
      }
    }
    return nullptr;
  }

  const Vehicle* leader_in_lane(const Vehicle& ego, int lane) const {
    const Vehicle* best = nullptr;
    for (const auto& v : vehicles) {
      if (v.id == ego.id || lane_of(v.y) != lane || v.x <= ego.x) {
        continue;
      }
      if (!best || v.x < best->x) {
        best = &v;
      }
    }
    return best;
  }

  const Vehicle* follower_in_lane(const Vehicle& ego, int lane) const {
    const Vehicle* best = nullptr;
    for (const auto& v : vehicles) {
      if (v.id == ego.id || lane_of(v.y) != lane || v.x >= ego.x) {
        continue;
      }
      if (!best || v.x > best->x) {
        best = &v;
      }
    }
    return best;
  }

  double bumper_gap(const Vehicle& rear, const Vehicle& front) const {
    return front.x - rear.x - sc.vehicle_length;
  }

  void event(int id, LaneChangeEventKind kind) {
    log.events.push_back(LaneChangeEvent{t, id, kind});
  }

  bool check_collisions() {
    for (int lane = 0; lane < 2; ++lane) {
      std::vector<const Vehicle*> in_lane;
      for (const auto& v : vehicles) {
        if (lane_of(v.y) == lane) {
          in_lane.push_back(&v);
        }
      }
      std::sort(in_lane.begin(), in_lane.end(),
                [](const Vehicle* a, const Vehicle* b) { return a->x < b->x; });
      for (size_t i = 1; i < in_lane.size(); ++i) {
        if (in_lane[i]->x - in_lane[i - 1]->x <= sc.vehicle_length) {
          log.collision = true;
          log.collision_time = t;
          return true;
        }
      }
    }
    return false;
  }

  void step_vehicle(Vehicle& v) {
    const VehicleGeometry geom{};
    if (std::abs(v.delta_cmd) > 1e-12 || std::abs(v.psi) > 1e-12) {
      const BicycleState next =
          step_bicycle({v.x, v.y, v.v, v.psi}, v.a_cmd, v.delta_cmd, sc.dt, geom);
      v.x = next.x;
      v.y = next.y;
      v.v = next.v;
      v.psi = next.psi;
    } else {
      v.x += v.v * sc.dt + 0.5 * v.a_cmd * sc.dt * sc.dt;
      v.v = std::max(0.0, v.v + v.a_cmd * sc.dt);
    }
    v.lane = lane_of(v.y);
  }
};

// ---------------------------------------------------------------------------
// EV controllers

// Conduct evidence: trailing speed above the nominal desired speed, or
// sustained acceleration beyond what the conservative profile can produce.
// Unknown (window not yet full) maps to the safe treat-as-aggressive
// default at the decision site.
struct ConductTracker {
  std::vector<double> recent_v;
  std::vector<double> recent_a;
  bool aggressive_latched = false;
  bool window_full = false;

  void observe(double v_cv, double a_cv, double v_des) {
    recent_v.push_back(v_cv);
    if (recent_v.size() > 10) {
      recent_v.erase(recent_v.begin());
    }
    recent_a.push_back(a_cv);
    if (recent_a.size() > 5) {
      recent_a.erase(recent_a.begin());
    }
    if (recent_v.size() == 10) {
      window_full = true;
      double mean = 0.0;
      for (double v : recent_v) {
        mean += v;
      }
      mean /= recent_v.size();
      if (mean > v_des + 1.5) {
        aggressive_latched = true;
      }
    }
    int hard = 0;
    for (double a : recent_a) {
      hard += a > 1.3 ? 1 : 0;  // beyond the conservative profile's a_max
    }
    if (recent_a.size() == 5 && hard >= 3) {
      aggressive_latched = true;
    }
  }
};

struct AaccController {
  GmpcPlanner planner;
  DualStyleIdentifier identifier;
  CvDesired desired;
  int opponent_id = -1;
  ConductTracker conduct;

  AaccController(const Scenario& sc, const CvDesired& des)
      : planner(PlanConfig{
            static_cast<int>(std::lround(sc.horizon_s / sc.dt)), sc.dt,
            sc.a_min, sc.a_max, sc.v_lim, VehicleGeometry{}, des}),
        identifier(des),
        desired(des) {}

  void reset_opponent(int id) {
    opponent_id = id;
    identifier = DualStyleIdentifier(desired);
    planner.reset();
    conduct = ConductTracker{};
  }

  void observe_conduct(double v_cv, double a_cv) {
    conduct.observe(v_cv, a_cv, desired.v_des);
  }

  bool aggressive_given(const ConductTracker& tracker) const {
    if (identifier.longitudinal_converged()) {
      // Style weights are nonnegative by definition; a fit outside that cone
      // converged on data the model cannot represent, so fall back to the
      // observed conduct.
      const Eigen::VectorXd b = *identifier.longitudinal_estimate();
      if (b.minCoeff() >= 0.0 && b.maxCoeff() < 100.0) {
        return b(1) > 1.0;
      }
    }
    if (tracker.aggressive_latched) {
      return true;
    }
    // Treat-as-aggressive until there is evidence either way.
    return !tracker.window_full;
  }

  bool aggressive() const { return aggressive_given(conduct); }
};

EvContext make_ev_context(const World& w, const Vehicle& ev) {
  EvContext ctx;
  ctx.v = ev.v;
  ctx.v_des = w.sc.v_des_ev;
  ctx.a_min = w.sc.a_min;
  ctx.a_max = w.sc.a_max;
  ctx.v_lim = w.sc.v_lim;
  ctx.time_gap = w.sc.acc_time_gap;
  ctx.k_gap = w.sc.acc_k_gap;
  ctx.k_speed = w.sc.acc_k_speed;
  ctx.engage_range = w.sc.acc_engage_range;
  if (const Vehicle* lead = w.leader_in_lane(ev, w.lane_of(ev.y))) {
    ctx.leader = Neighbor{w.bumper_gap(ev, *lead), lead->v};
  }
  return ctx;
}

SystemState joint_state(const Vehicle& ev, const Vehicle& cv) {
  return SystemState{cv.x - ev.x, ev.v, cv.v, cv.y, cv.psi};
}

}  // namespace

double baseline_acc_control(const EvContext& ctx) {
  double a;
  if (ctx.leader && ctx.leader->gap <= ctx.engage_range) {
    a = ctx.k_gap * (ctx.leader->gap - ctx.time_gap * ctx.v) +
        ctx.k_speed * (ctx.leader->v - ctx.v);
  } else {
    a = ctx.k_speed * (ctx.v_des - ctx.v);
  }
  if (ctx.v >= ctx.v_lim) {
    a = std::min(a, 0.0);
  }
  return std::clamp(a, ctx.a_min, ctx.a_max);
}

namespace {

// ---------------------------------------------------------------------------
// Function-validation run

struct FvCvAgent {
  CvPhase phase = CvPhase::kCruise;
  bool armed_logged = false;
  bool abort_logged = false;
  double v_follower_at_arm = 0.0;

  // Contest test: the prospective follower would have to brake beyond the
  // safety bound AND is actively closing on the gap (speed risen clearly
  // above its value when the merge was announced). A follower that merely
  // sits close but keeps pace does not deter a mandatory merge.
  bool front_merge_contested(const World& w, const Vehicle& cv,
                             const Vehicle& ev, const StyleProfile& p) const {
    const double gap_f = ev.x < cv.x ? cv.x - ev.x - w.sc.vehicle_length : 0.0;
    if (gap_f <= 0.0) {
      return true;  // no slot at all
    }
    const double a_follower = idm_accel(gap_f, ev.v, cv.v, p.idm);
    const bool closing = ev.v > v_follower_at_arm + 0.3;
    return a_follower < -p.mobil.b_safe && closing;
  }

  void decide(World& w, Vehicle& cv, const Vehicle& ev, const Vehicle* pv) {
    const StyleProfile p = profile(cv.style);
    const VehicleGeometry geom{};
    const double boundary = 0.5 * w.sc.lane_width;

    // Phase transitions.
    const double t_arm = cv.style == DrivingStyle::kAggressive
                             ? w.sc.t_arm_aggressive
                             : w.sc.t_arm_conservative;
    if (phase == CvPhase::kCruise && w.t >= t_arm) {
      phase = CvPhase::kArmed;
      v_follower_at_arm = ev.v;
      if (!armed_logged) {
        w.event(cv.id, LaneChangeEventKind::kArmed);
        armed_logged = true;
      }
    }

    if (phase == CvPhase::kArmed) {
      const bool contested = front_merge_contested(w, cv, ev, p);
      if (!contested && cv.x > ev.x + 1.0) {
        phase = CvPhase::kMergeAhead;
        cv.changing = true;
        cv.target_lane = 0;
        cv.lat = LateralPlan{true, cv.y, w.lane_center(0), w.t, 3.0};
        w.event(cv.id, LaneChangeEventKind::kStarted);
      } else if (contested) {
        phase = CvPhase::kYielding;
        if (!abort_logged) {
          w.event(cv.id, LaneChangeEventKind::kAborted);
          abort_logged = true;
        }
      }
    } else if (phase == CvPhase::kMergeAhead) {
      const bool before_boundary = cv.y > boundary;
      if (before_boundary && front_merge_contested(w, cv, ev, p)) {
        phase = CvPhase::kYielding;
        cv.lat = LateralPlan{true, cv.y, w.lane_center(1), w.t, 3.0};
        cv.target_lane = 1;
        if (!abort_logged) {
          w.event(cv.id, LaneChangeEventKind::kAborted);
          abort_logged = true;
        }
      } else {
        if (!before_boundary && !cv.crossed_logged) {
          w.event(cv.id, LaneChangeEventKind::kCrossed);
          cv.crossed_logged = true;
        }
        if (cv.lat.finished(w.t) && std::abs(cv.y - w.lane_center(0)) < 0.05 &&
            std::abs(cv.psi) < 0.02) {
          phase = CvPhase::kDone;
          cv.changing = false;
          w.event(cv.id, LaneChangeEventKind::kCompleted);
        }
      }
    } else if (phase == CvPhase::kYielding) {
      const double gap_behind = ev.x - cv.x - w.sc.vehicle_length;
      const bool clearly_behind = gap_behind > std::max(p.idm.s0, 2.0);
      if (clearly_behind &&
          idm_accel(gap_behind, cv.v, ev.v, p.idm) >= -p.mobil.b_safe) {
        phase = CvPhase::kMergeBehind;
        cv.changing = true;
        cv.target_lane = 0;
        cv.lat = LateralPlan{true, cv.y, w.lane_center(0), w.t, 3.0};
        w.event(cv.id, LaneChangeEventKind::kStarted);
      }
    } else if (phase == CvPhase::kMergeBehind) {
      if (cv.y <= boundary && !cv.crossed_logged) {
        w.event(cv.id, LaneChangeEventKind::kCrossed);
        cv.crossed_logged = true;
      }
      if (cv.lat.finished(w.t) && std::abs(cv.y - w.lane_center(0)) < 0.05 &&
          std::abs(cv.psi) < 0.02) {
        phase = CvPhase::kDone;
        cv.changing = false;
        w.event(cv.id, LaneChangeEventKind::kCompleted);
      }
    }

    // Longitudinal command.
    double a = idm_free_accel(cv.v, p.idm);
    const auto follow = [&](const Vehicle* lead) {
      if (lead && lead->x > cv.x) {
        a = std::min(a, idm_accel(w.bumper_gap(cv, *lead), cv.v, lead->v, p.idm));
      }
    };
    switch (phase) {
      case CvPhase::kCruise:
      case CvPhase::kArmed:
        follow(w.leader_in_lane(cv, w.lane_of(cv.y)));
        break;
      case CvPhase::kMergeAhead:
        follow(w.leader_in_lane(cv, w.lane_of(cv.y)));
        follow(pv);
        break;
      case CvPhase::kYielding: {
        const double gap_behind = ev.x - cv.x - w.sc.vehicle_length;
        if (gap_behind <= std::max(p.idm.s0, 2.0)) {
          a = -0.5 * p.idm.b_com;  // ease off behind the contested slot
        } else {
          a = idm_accel(gap_behind, cv.v, ev.v, p.idm);
        }
        break;
      }
      case CvPhase::kMergeBehind: {
        const double gap_behind = ev.x - cv.x - w.sc.vehicle_length;
        a = gap_behind > 0.0 ? idm_accel(gap_behind, cv.v, ev.v, p.idm)
                             : -p.idm.b_com;
        break;
      }
      case CvPhase::kDone:
        follow(w.leader_in_lane(cv, w.lane_of(cv.y)));
        break;
    }
    cv.a_cmd = std::clamp(a, -9.0, p.idm.a_max);

    // Lateral command.
    if (!cv.lat.active) {
      cv.lat = LateralPlan{false, cv.y, w.lane_center(w.lane_of(cv.y)), w.t, 3.0};
    }
    cv.delta_cmd = track_lateral(cv.lat, w.t, cv.y, cv.psi, cv.v, geom);
  }

  // The game runs while the CV competes for the slot ahead of EV and is
  // still on its own side of the lane boundary; once it crosses it is a
  // leader for the ACC layer instead.
  bool contesting_front_slot(const World& w, const Vehicle& cv) const {
    if (phase == CvPhase::kArmed) {
      return true;
    }
    return phase == CvPhase::kMergeAhead && cv.y > 0.5 * w.sc.lane_width;
  }
};

StyleParams planning_beta(const DualStyleIdentifier& ident) {
  StyleParams beta;  // neutral defaults
  if (auto lon = ident.longitudinal_estimate()) {
    beta.beta_long = *lon;
  }
  if (ident.lateral().converged()) {
    beta.beta_lat = *ident.lateral().estimate();
  }
  return beta;
}

void log_step(World& w, double ev_accel, const DualStyleIdentifier* ident,
              bool full_rows) {
  StepRecord rec;
  rec.t = w.t;
  rec.ev_accel = ev_accel;
  if (ident) {
    if (auto lon = ident->longitudinal_estimate()) {
      rec.beta_valid = true;
      rec.beta = planning_beta(*ident);
      rec.style_converged = ident->longitudinal_converged();
    }
  }
  for (const auto& v : w.vehicles) {
    if (!full_rows && v.role != Role::kEv) {
      continue;
    }
    rec.vehicles.push_back(VehicleRecord{v.id, v.role, w.lane_of(v.y), v.x,
                                         v.y, v.v, v.psi, v.a_cmd,
                                         v.delta_cmd});
  }
  w.log.steps.push_back(std::move(rec));
}

SimLog run_function_validation_impl(const Scenario& sc) {
  World w(sc);
  const double v_cv0 = sc.cv_style == DrivingStyle::kConservative
                           ? sc.cv_spawn_speed_conservative
                           : sc.cv_spawn_speed_aggressive;
  Vehicle ev_v;
  ev_v.id = 0;
  ev_v.role = Role::kEv;
  ev_v.v = sc.ev_spawn_speed;
  w.vehicles.push_back(ev_v);
  Vehicle cv_v;
  cv_v.id = 1;
  cv_v.role = Role::kCv;
  cv_v.x = sc.initial_gap;
  cv_v.y = w.lane_center(1);
  cv_v.v = v_cv0;
  cv_v.style = sc.cv_style;
  w.vehicles.push_back(cv_v);
  Vehicle pv_v;
  pv_v.id = 2;
  pv_v.role = Role::kPv;
  pv_v.x = sc.pv_gap;
  pv_v.v = sc.pv_speed;
  w.vehicles.push_back(pv_v);
  for (auto& v : w.vehicles) {
    v.lane = w.lane_of(v.y);
    v.lat = LateralPlan{false, v.y, v.y, 0.0, 3.0};
  }

  FvCvAgent cv_agent;
  CvDesired desired;
  desired.y_des = w.lane_center(0);
  AaccController aacc(sc, desired);
  const VehicleGeometry geom{};

  const int max_steps = static_cast<int>(std::lround(sc.duration_cap / sc.dt));
  for (int step = 0; step < max_steps; ++step) {
    w.t = step * sc.dt;
    Vehicle* ev = w.find(Role::kEv);
    Vehicle* cv = w.find(Role::kCv);
    Vehicle* pv = w.find(Role::kPv);

    // Follower decides on the current state; the identifier then sees the
    // executed action with the state it acted from.
    cv_agent.decide(w, *cv, *ev, pv);
    pv->a_cmd = 0.0;
    pv->delta_cmd = 0.0;

    double a_ev = 0.0;
    if (sc.controller == ControllerType::kAacc) {
      const SystemState x = joint_state(*ev, *cv);
      const LinearDynamics dyn = linearize(x, geom, sc.dt);
      aacc.observe_conduct(cv->v, cv->a_cmd);
      aacc.identifier.update(
          TrajectorySample{x, CvControl{cv->a_cmd, cv->delta_cmd},
                           EvControl{ev->a_cmd}, step},
          dyn);

      if (cv_agent.contesting_front_slot(w, *cv)) {
        EvObjective obj;
        obj.theta1 = sc.theta1;
        obj.theta2 = sc.theta2;
        obj.theta3 = sc.theta3;
        obj.v_des = sc.v_des_ev;
        // Yielding to less than the ACC's own standoff would guarantee a
        // post-merge headway shortfall; floor the aggressive-side target.
        const double yield_gap = std::max(
            25.0, sc.acc_time_gap * sc.v_des_ev + sc.vehicle_length);
        const bool yielding = aacc.aggressive();
        obj.delta_x_des = yielding ? yield_gap : 0.0;
        const PlanResult r = aacc.planner.plan(x, planning_beta(aacc.identifier), obj);
        w.log.solve_times.push_back(r.solve_time);
        if (r.status != SolveStatus::kFailed) {
          a_ev = r.u_ev(0);
        }
        if (yielding) {
          // Precautionary yield at comfortable braking; hard braking stays
          // reserved for actual leaders through the ACC layer.
          a_ev = std::max(a_ev, -2.0);
        }
        // Safety envelope against the same-lane leader.
        const EvContext ctx = make_ev_context(w, *ev);
        if (ctx.leader && ctx.leader->gap <= ctx.engage_range) {
          a_ev = std::min(a_ev, baseline_acc_control(ctx));
        }
        if (ev->v >= sc.v_lim) {
          a_ev = std::min(a_ev, 0.0);
        }
        a_ev = std::clamp(a_ev, sc.a_min, sc.a_max);
      } else {
        a_ev = baseline_acc_control(make_ev_context(w, *ev));
      }
    } else {
      a_ev = baseline_acc_control(make_ev_context(w, *ev));
    }
    ev->a_cmd = a_ev;
    ev->delta_cmd = 0.0;

    log_step(w, a_ev,
             sc.controller == ControllerType::kAacc ? &aacc.identifier : nullptr,
             /*full_rows=*/true);

    for (auto& v : w.vehicles) {
      w.step_vehicle(v);
    }
    if (w.check_collisions()) {
      break;
    }
    if (ev->x >= sc.road_length) {
      w.log.ev_completed = true;
      w.log.ev_exit_time = w.t + sc.dt;
      break;
    }
  }
  return std::move(w.log);
}

// ---------------------------------------------------------------------------
// Scripted-LQR harness: follower plays an open-loop optimal plan in a frozen
// linear world while the streaming identifier runs in the loop.

SimLog run_scripted_lqr_impl(const Scenario& sc) {
  World w(sc);
  const int n_total = static_cast<int>(std::lround(sc.duration_cap / sc.dt));
  CvDesired desired;
  SystemState x{10.0, 15.0, 12.0, w.lane_center(1), 0.0};
  const LinearDynamics dyn = linearize(x, VehicleGeometry{}, sc.dt);
  std::vector<LinearDynamics> dyn_seq(n_total, dyn);
  std::vector<double> u_ev(n_total);
  for (int n = 0; n < n_total; ++n) {
    u_ev[n] = 1.2 * std::sin(0.35 * n) + 0.8 * std::cos(0.9 * n + 1.0);
  }
  const auto [law, ric] = backward_pass(sc.scripted_beta, dyn_seq, desired, u_ev);

  DualStyleIdentifier ident(desired);
  double x_ev = 0.0;
  for (int n = 0; n < n_total; ++n) {
    w.t = n * sc.dt;
    const CvControl u_cv = estimate_reaction(law, x, EvControl{u_ev[n]}, n);
    ident.update(TrajectorySample{x, u_cv, EvControl{u_ev[n]}, n}, dyn);

    StepRecord rec;
    rec.t = w.t;
    rec.ev_accel = u_ev[n];
    if (auto lon = ident.longitudinal_estimate()) {
      rec.beta_valid = true;
      rec.beta = planning_beta(ident);
      rec.style_converged = ident.longitudinal_converged();
    }
    rec.vehicles.push_back(VehicleRecord{0, Role::kEv, 0, x_ev, 0.0, x.v_ev,
                                         0.0, u_ev[n], 0.0});
    rec.vehicles.push_back(VehicleRecord{1, Role::kCv, 1, x_ev + x.delta_x,
                                         x.y_cv, x.v_cv, x.psi_cv, u_cv.a_cv,
                                         u_cv.delta_f});
    w.log.steps.push_back(std::move(rec));

    x_ev += x.v_ev * sc.dt + 0.5 * u_ev[n] * sc.dt * sc.dt;
    x = step_linear(dyn, x, EvControl{u_ev[n]}, u_cv);
  }
  return std::move(w.log);
}

// ---------------------------------------------------------------------------
// Traffic-flow run

struct BackgroundBrain {
  void decide(World& w, Vehicle& v, int step) {
    const StyleProfile p = profile(v.style);
    const VehicleGeometry geom{};
    const int lane = w.lane_of(v.y);

    double a = idm_free_accel(v.v, p.idm);
    const Vehicle* lead = w.leader_in_lane(v, lane);
    if (lead) {
      a = std::min(a, idm_accel(w.bumper_gap(v, *lead), v.v, lead->v, p.idm));
    }

    if (v.changing) {
      // Commit after the boundary; reconsider safety before it.
      const double target_y = w.lane_center(v.target_lane);
      const bool before_boundary =
          std::abs(v.y - target_y) > 0.5 * w.sc.lane_width;
      if (before_boundary) {
        MobilContext ctx = mobil_context(w, v, v.target_lane);
        if (!mobil_safety_ok(ctx, p.mobil, p.idm)) {
          v.target_lane = lane;
          v.lat = LateralPlan{true, v.y, w.lane_center(lane), w.t, 3.0};
          w.event(v.id, LaneChangeEventKind::kAborted);
        }
      }
      const Vehicle* lead_t = w.leader_in_lane(v, v.target_lane);
      if (lead_t && lead_t->x > v.x) {
        a = std::min(a,
                     idm_accel(w.bumper_gap(v, *lead_t), v.v, lead_t->v, p.idm));
      }
      if (v.lat.finished(w.t) &&
          std::abs(v.y - w.lane_center(v.target_lane)) < 0.05) {
        v.changing = false;
        w.event(v.id, LaneChangeEventKind::kCompleted);
      }
    } else if ((step + v.id * 3) % 10 == 0) {
      const int other = 1 - lane;
      MobilContext ctx = mobil_context(w, v, other);
      if (mobil_decide(ctx, p.mobil, p.idm) == LaneDecision::kChange) {
        v.changing = true;
        v.target_lane = other;
        v.crossed_logged = false;
        v.lat = LateralPlan{true, v.y, w.lane_center(other), w.t, 3.0};
        w.event(v.id, LaneChangeEventKind::kStarted);
      }
    }

    if (v.changing && !v.crossed_logged &&
        w.lane_of(v.y) == v.target_lane) {
      v.crossed_logged = true;
      w.event(v.id, LaneChangeEventKind::kCrossed);
    }

    v.a_cmd = std::clamp(a, -9.0, p.idm.a_max);
    if (!v.lat.active || (!v.changing && v.lat.finished(w.t))) {
      v.lat = LateralPlan{false, v.y, w.lane_center(w.lane_of(v.y)), w.t, 3.0};
    }
    v.delta_cmd = track_lateral(v.lat, w.t, v.y, v.psi, v.v, geom);
  }

  static MobilContext mobil_context(const World& w, const Vehicle& v,
                                    int target_lane) {
    MobilContext ctx;
    ctx.v_ego = v.v;
    const int lane = w.lane_of(v.y);
    if (const Vehicle* lc = w.leader_in_lane(v, lane)) {
      ctx.lead_current = Neighbor{w.bumper_gap(v, *lc), lc->v};
    }
    const Vehicle* lt = w.leader_in_lane(v, target_lane);
    if (lt) {
      ctx.lead_target = Neighbor{w.bumper_gap(v, *lt), lt->v};
    }
    if (const Vehicle* ft = w.follower_in_lane(v, target_lane)) {
      ctx.follow_target = Neighbor{w.bumper_gap(*ft, v), ft->v};
      ctx.follow_target_free_gap =
          lt ? w.bumper_gap(*ft, *lt) : 1e9;
    }
    return ctx;
  }
};

// Adjacent-lane vehicle that wants into the EV's lane: armed when already
// steering toward it, or when its own lane-change incentive clears the
// threshold regardless of safety (the threat the game is played against).
const Vehicle* find_armed_opponent(const World& w, const Vehicle& ev) {
  const int ev_lane = w.lane_of(ev.y);
  const Vehicle* best = nullptr;
  for (const auto& v : w.vehicles) {
    if (v.role == Role::kEv || v.role == Role::kPv) {
      continue;
    }
    const int lane = w.lane_of(v.y);
    if (lane == ev_lane) {
      continue;
    }
    const double dx = v.x - ev.x;
    // Contests are over the slot ahead: a vehicle alongside or behind has
    // not taken it, and merges landing far beyond the protection zone are
    // no threat either.
    if (dx <= 0.0 || dx > 35.0) {
      continue;
    }
    bool armed = v.changing && v.target_lane == ev_lane;
    if (!armed) {
      const StyleProfile p = profile(v.style);
      MobilContext ctx = BackgroundBrain::mobil_context(w, v, ev_lane);
      const double a_old = ctx.lead_current
                               ? idm_accel(ctx.lead_current->gap, v.v,
                                           ctx.lead_current->v, p.idm)
                               : idm_free_accel(v.v, p.idm);
      const double a_new = ctx.lead_target
                               ? idm_accel(ctx.lead_target->gap, v.v,
                                           ctx.lead_target->v, p.idm)
                               : idm_free_accel(v.v, p.idm);
      armed = (a_new - a_old) > p.mobil.a_th;
    }
    if (armed && (!best || std::abs(dx) < std::abs(best->x - ev.x))) {
      best = &v;
    }
  }
  return best;
}

SimLog run_traffic_flow_impl(const Scenario& sc) {
  World w(sc);
  const double rate = sc.vc_ratio * sc.lane_capacity / 3600.0;  // veh/s/lane
  std::exponential_distribution<double> headway(rate > 0 ? rate : 1e-9);
  std::uniform_int_distribution<int> style_draw(0, 1);
  double next_arrival[2] = {0.0, 0.0};
  if (rate > 0) {
    for (int lane = 0; lane < 2; ++lane) {
      next_arrival[lane] = headway(w.rng);
    }
  } else {
    next_arrival[0] = next_arrival[1] = 1e18;
  }
  int next_id = 10;
  bool ev_spawned = false;

  CvDesired desired;
  desired.y_des = w.lane_center(0);
  AaccController aacc(sc, desired);
  BackgroundBrain brains;
  const VehicleGeometry geom{};
  std::map<int, ConductTracker> observed;

  const int max_steps =
      static_cast<int>(std::lround(sc.traffic_duration_cap / sc.dt));
  std::vector<double> headway_samples;

  for (int step = 0; step < max_steps; ++step) {
    w.t = step * sc.dt;

    // Injection, lane order fixed for determinism. Arrivals that would
    // collide with the EV's entry window are deferred.
    for (int lane = 0; lane < 2; ++lane) {
      while (w.t >= next_arrival[lane]) {
        if (lane == 0 && std::abs(next_arrival[lane] - sc.ev_entry_time) < 2.5) {
          next_arrival[lane] = sc.ev_entry_time + 2.5;
          continue;
        }
        // Entry must be clear.
        bool clear = true;
        double v_spawn = 0.0;
        const DrivingStyle style = style_draw(w.rng) == 0
                                       ? DrivingStyle::kConservative
                                       : DrivingStyle::kAggressive;
        const StyleProfile p = profile(style);
        v_spawn = std::min(p.idm.v0, 20.0);
        for (const auto& v : w.vehicles) {
          if (w.lane_of(v.y) == lane &&
              v.x < sc.vehicle_length + p.idm.s0 + 0.8 * v_spawn) {
            clear = false;
            break;
          }
        }
        if (!clear) {
          next_arrival[lane] += 0.5;
          continue;
        }
        Vehicle nv;
        nv.id = next_id++;
        nv.role = Role::kBackground;
        nv.x = 0.0;
        nv.y = w.lane_center(lane);
        nv.v = v_spawn;
        nv.style = style;
        nv.lane = lane;
        nv.target_lane = lane;
        nv.lat = LateralPlan{false, nv.y, nv.y, w.t, 3.0};
        w.vehicles.push_back(nv);
        next_arrival[lane] += headway(w.rng);
      }
    }
    if (!ev_spawned && w.t >= sc.ev_entry_time) {
      bool clear = true;
      for (const auto& v : w.vehicles) {
        if (w.lane_of(v.y) == 0 && v.x > -1.0 && v.x < 25.0) {
          clear = false;
          break;
        }
      }
      if (clear) {
        Vehicle ev;
        ev.id = 0;
        ev.role = Role::kEv;
        ev.x = 0.0;
        ev.y = w.lane_center(0);
        ev.v = sc.ev_spawn_speed;
        ev.lane = 0;
        ev.target_lane = 0;
        ev.lat = LateralPlan{false, 0.0, 0.0, w.t, 3.0};
        w.vehicles.push_back(ev);
        ev_spawned = true;
        w.log.ev_entry_time = w.t;
      }
    }

    // Background decisions.
    for (auto& v : w.vehicles) {
      if (v.role == Role::kBackground) {
        brains.decide(w, v, step);
      }
    }

    Vehicle* ev = w.find(Role::kEv);
    if (ev && sc.controller == ControllerType::kAacc) {
      // The sensor suite sees every nearby adjacent-lane vehicle; conduct
      // evidence ripens before any of them arms a lane change.
      const int ev_lane = w.lane_of(ev->y);
      for (const auto& v : w.vehicles) {
        if (v.role == Role::kEv || w.lane_of(v.y) == ev_lane) {
          continue;
        }
        const double dx = v.x - ev->x;
        if (dx < -20.0 || dx > 80.0) {
          continue;
        }
        observed[v.id].observe(v.v, v.a_cmd, sc.v_des_ev);
      }
    }
    if (ev) {
      double a_ev;
      const Vehicle* opponent =
          sc.controller == ControllerType::kAacc ? find_armed_opponent(w, *ev)
                                                 : nullptr;
      // Yielding costs travel time, so it waits for a committed merge
      // (the opponent actively steering in); slot protection against a
      // hesitant driver starts on intent alone.
      const bool committed =
          opponent && opponent->changing &&
          opponent->target_lane == w.lane_of(ev->y);
      const bool opponent_aggressive =
          opponent && aacc.aggressive_given(observed[opponent->id]);
      if (opponent && (committed || !opponent_aggressive)) {
        if (aacc.opponent_id != opponent->id) {
          aacc.reset_opponent(opponent->id);
        }
        const SystemState x = joint_state(*ev, *opponent);
        const LinearDynamics dyn = linearize(x, geom, sc.dt);
        aacc.identifier.update(
            TrajectorySample{x, CvControl{opponent->a_cmd, opponent->delta_cmd},
                             EvControl{ev->a_cmd}, step},
            dyn);
        EvObjective obj;
        obj.theta1 = sc.theta1;
        obj.theta2 = sc.theta2;
        obj.theta3 = sc.theta3;
        obj.v_des = sc.v_des_ev;
        const double yield_gap = std::max(
            25.0, sc.acc_time_gap * sc.v_des_ev + sc.vehicle_length);
        const bool yielding = opponent_aggressive;
        obj.delta_x_des = yielding ? yield_gap : 0.0;
        const PlanResult r =
            aacc.planner.plan(x, planning_beta(aacc.identifier), obj);
        w.log.solve_times.push_back(r.solve_time);
        a_ev = r.status != SolveStatus::kFailed ? r.u_ev(0) : 0.0;
        if (yielding) {
          a_ev = std::max(a_ev, -2.0);
        }
        const EvContext ctx = make_ev_context(w, *ev);
        if (ctx.leader && ctx.leader->gap <= ctx.engage_range) {
          a_ev = std::min(a_ev, baseline_acc_control(ctx));
        }
        if (ev->v >= sc.v_lim) {
          a_ev = std::min(a_ev, 0.0);
        }
        a_ev = std::clamp(a_ev, sc.a_min, sc.a_max);
      } else {
        a_ev = baseline_acc_control(make_ev_context(w, *ev));
      }
      ev->a_cmd = a_ev;
      ev->delta_cmd = 0.0;

      // Headway sample against the same-lane leader.
      double h = kHeadwayCap;
      if (const Vehicle* lead = w.leader_in_lane(*ev, w.lane_of(ev->y))) {
        if (ev->v >= kMinSpeedForHeadway) {
          h = std::min(kHeadwayCap, w.bumper_gap(*ev, *lead) / ev->v);
        }
      }
      headway_samples.push_back(h);
      log_step(w, a_ev,
               sc.controller == ControllerType::kAacc ? &aacc.identifier
                                                      : nullptr,
               /*full_rows=*/false);
    }

    for (auto& v : w.vehicles) {
      w.step_vehicle(v);
    }
    if (w.check_collisions()) {
      break;
    }
    if (ev && ev->x >= sc.road_length) {
      w.log.ev_completed = true;
      w.log.ev_exit_time = w.t + sc.dt;
      break;
    }
    // Despawn beyond the corridor.
    std::erase_if(w.vehicles, [&](const Vehicle& v) {
      return v.role == Role::kBackground && v.x > sc.road_length + 50.0;
    });
  }
  // Stash traffic-mode headways in the log via the steps' beta slot? No:
  // recompute in metrics from the recorded EV rows is impossible without
  // neighbors, so attach them here.
  w.log.headway_trace = std::move(headway_samples);
  return std::move(w.log);
}

}  // namespace

SimLog run_function_validation(const Scenario& sc) {
  if (sc.cv_mode == CvMode::kScriptedLqr) {
    return run_scripted_lqr_impl(sc);
  }
  return run_function_validation_impl(sc);
}

SimLog run_traffic_flow(const Scenario& sc) { return run_traffic_flow_impl(sc); }

SimLog run_scenario(const Scenario& sc) {
  return sc.mode == SimMode::kFunctionValidation ? run_function_validation(sc)
                                                 : run_traffic_flow(sc);
}

std::string SimLog::to_csv() const {
  std::ostringstream os;
  os << "t,id,role,lane,x,y,v,psi,a_cmd\n";
  for (const auto& stepr : steps) {
    for (const auto& v : stepr.vehicles) {
      os << fmt(stepr.t) << ',' << v.id << ',' << role_name(v.role) << ','
         << v.lane << ',' << fmt(v.x) << ',' << fmt(v.y) << ',' << fmt(v.v)
         << ',' << fmt(v.psi) << ',' << fmt(v.a_cmd) << '\n';
    }
  }
  return os.str();
}

Metrics compute_metrics(const SimLog& log, double h_threshold) {
  Metrics m;
  m.collision = log.collision;
  const double dt = log.scenario.dt;

  std::vector<double> speeds;
  std::vector<double> headways;
  double x_first = 0.0;
  double x_last = 0.0;
  bool have_ev = false;
  for (const auto& stepr : log.steps) {
    const VehicleRecord* ev = nullptr;
    const VehicleRecord* lead = nullptr;
    for (const auto& v : stepr.vehicles) {
      if (v.role == Role::kEv) {
        ev = &v;
      }
    }
    if (!ev) {
      continue;
    }
    if (!have_ev) {
      x_first = ev->x;
      have_ev = true;
    }
    x_last = ev->x;
    speeds.push_back(ev->v);
    for (const auto& v : stepr.vehicles) {
      if (v.id != ev->id && v.lane == ev->lane && v.x > ev->x &&
          (!lead || v.x < lead->x)) {
        lead = &v;
      }
    }
    if (log.headway_trace.empty()) {
      double h = kHeadwayCap;
      if (lead && ev->v >= kMinSpeedForHeadway) {
        h = std::min(kHeadwayCap,
                     (lead->x - ev->x - log.scenario.vehicle_length) / ev->v);
      }
      headways.push_back(h);
    }
  }
  if (!log.headway_trace.empty()) {
    headways = log.headway_trace;
  }

  if (!speeds.empty()) {
    double sum = 0.0;
    for (double v : speeds) {
      sum += v;
    }
    m.avg_speed_ev = sum / speeds.size();
    double var = 0.0;
    for (double v : speeds) {
      var += (v - m.avg_speed_ev) * (v - m.avg_speed_ev);
    }
    m.speed_std_ev = std::sqrt(var / speeds.size());
    m.travel_time_ev = speeds.size() * dt;
    m.distance_ev = x_last - x_first;
  }

  m.headway_histogram.assign(21, 0);
  for (double h : headways) {
    m.tth += std::max(0.0, h_threshold - h) * dt;
    const int bucket =
        std::min(20, static_cast<int>(std::floor(h / 0.5)));
    m.headway_histogram[bucket] += 1;
  }
  m.headway_samples = static_cast<int>(headways.size());

  if (!log.solve_times.empty()) {
    std::vector<double> st = log.solve_times;
    std::sort(st.begin(), st.end());
    double sum = 0.0;
    for (double s : st) {
      sum += s;
    }
    m.mean_solve_time = sum / st.size();
    const size_t idx = static_cast<size_t>(
        std::min<double>(st.size() - 1.0, std::ceil(0.99 * st.size()) - 1.0));
    m.p99_solve_time = st[idx];
  }
  return m;
}

std::string Metrics::to_json() const {
  std::ostringstream os;
  os << "{\n";
  os << "  \"avg_speed_ev\": " << fmt(avg_speed_ev) << ",\n";
  os << "  \"travel_time_ev\": " << fmt(travel_time_ev) << ",\n";
  os << "  \"tth\": " << fmt(tth) << ",\n";
  os << "  \"speed_std_ev\": " << fmt(speed_std_ev) << ",\n";
  os << "  \"distance_ev\": " << fmt(distance_ev) << ",\n";
  os << "  \"mean_solve_time\": " << fmt(mean_solve_time) << ",\n";
  os << "  \"p99_solve_time\": " << fmt(p99_solve_time) << ",\n";
  os << "  \"collision\": " << (collision ? "true" : "false") << ",\n";
  os << "  \"headway_samples\": " << headway_samples << ",\n";
  os << "  \"headway_histogram\": [";
  for (size_t i = 0; i < headway_histogram.size(); ++i) {
    os << (i ? "," : "") << headway_histogram[i];
  }
  os << "]\n}\n";
  return os.str();
}

}  // namespace aacc
