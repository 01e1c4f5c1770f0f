#pragma once

#include <optional>

namespace aacc {

/// Intelligent Driver Model parameters.
struct IdmParams {
  double a_max = 1.0;   ///< maximum acceleration [m/s^2]
  double b_com = 2.0;   ///< comfortable deceleration [m/s^2]
  double t_gap = 2.5;   ///< desired time gap [s]
  double v0 = 18.0;     ///< desired speed [m/s]
  double s0 = 2.0;      ///< minimum jam distance [m]
  double delta = 4.0;   ///< acceleration exponent
};

/// MOBIL lane-change decision parameters.
struct MobilParams {
  double politeness = 0.2;  ///< weight on the imposed follower change
  double a_th = 0.4;        ///< incentive threshold [m/s^2]
  double b_safe = 4.0;      ///< safe braking limit for the new follower [m/s^2]
};

enum class DrivingStyle { kConservative, kAggressive };

struct StyleProfile {
  DrivingStyle label = DrivingStyle::kConservative;
  IdmParams idm;
  MobilParams mobil;
};

/// IDM acceleration for a bumper-to-bumper gap to the leader.
/// gap <= 0 signals an imminent collision and returns the emergency floor.
/// Result clamped to [-9, a_max].
double idm_accel(double gap, double v, double v_lead, const IdmParams& p);

/// Free-flow IDM acceleration (no leader).
double idm_free_accel(double v, const IdmParams& p);

/// Neighbor as seen from the deciding vehicle: bumper gap and speed.
struct Neighbor {
  double gap = 0.0;
  double v = 0.0;
};

/// Situation snapshot for a MOBIL decision. Missing neighbors mean a free
/// lane. follow_target.gap is the gap the new follower would have to the
/// deciding vehicle after insertion; follow_target_free_gap is that
/// follower's current gap without the insertion.
struct MobilContext {
  double v_ego = 0.0;
  std::optional<Neighbor> lead_current;
  std::optional<Neighbor> lead_target;
  std::optional<Neighbor> follow_target;
  std::optional<double> follow_target_free_gap;
};

enum class LaneDecision { kStay, kChange };

/// MOBIL: change iff the own-acceleration gain plus the politeness-weighted
/// follower change exceeds a_th, and the new follower keeps above -b_safe.
LaneDecision mobil_decide(const MobilContext& ctx, const MobilParams& m,
                          const IdmParams& idm);

/// Safety criterion alone: would the prospective follower stay above -b_safe.
bool mobil_safety_ok(const MobilContext& ctx, const MobilParams& m,
                     const IdmParams& idm);

/// Tabulated conservative / aggressive profiles.
StyleProfile profile(DrivingStyle label);

}  // namespace aacc
