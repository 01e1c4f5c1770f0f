#include "aacc/traffic_models.hpp"

#include <algorithm>
#include <cmath>

namespace aacc {

namespace {
constexpr double kEmergencyBrake = -9.0;
}

double idm_free_accel(double v, const IdmParams& p) {
  const double a = p.a_max * (1.0 - std::pow(v / p.v0, p.delta));
  return std::clamp(a, kEmergencyBrake, p.a_max);
}

double idm_accel(double gap, double v, double v_lead, const IdmParams& p) {
  if (gap <= 0.0) {
    return kEmergencyBrake;
  }
  const double s_star = p.s0 + v * p.t_gap +
                        v * (v - v_lead) / (2.0 * std::sqrt(p.a_max * p.b_com));
  const double a = p.a_max * (1.0 - std::pow(v / p.v0, p.delta) -
                              (s_star / gap) * (s_star / gap));
  return std::clamp(a, kEmergencyBrake, p.a_max);
}

namespace {

double accel_with_optional_leader(double v, const std::optional<Neighbor>& lead,
                                  const IdmParams& idm) {
  return lead ? idm_accel(lead->gap, v, lead->v, idm) : idm_free_accel(v, idm);
}

double follower_accel_after_insert(const MobilContext& ctx,
                                   const IdmParams& idm) {
  if (!ctx.follow_target) {
    return 0.0;
  }
  return idm_accel(ctx.follow_target->gap, ctx.follow_target->v, ctx.v_ego,
                   idm);
}

double follower_accel_before_insert(const MobilContext& ctx,
                                    const IdmParams& idm) {
  if (!ctx.follow_target) {
    return 0.0;
  }
  if (ctx.follow_target_free_gap) {
    const double lead_v =
        ctx.lead_target ? ctx.lead_target->v : ctx.follow_target->v;
    return idm_accel(*ctx.follow_target_free_gap, ctx.follow_target->v, lead_v,
                     idm);
  }
  return idm_free_accel(ctx.follow_target->v, idm);
}

}  // namespace

bool mobil_safety_ok(const MobilContext& ctx, const MobilParams& m,
                     const IdmParams& idm) {
  if (!ctx.follow_target) {
    return true;
  }
  return follower_accel_after_insert(ctx, idm) >= -m.b_safe;
}

LaneDecision mobil_decide(const MobilContext& ctx, const MobilParams& m,
                          const IdmParams& idm) {
  if (!mobil_safety_ok(ctx, m, idm)) {
    return LaneDecision::kStay;
  }
  const double a_ego_old = accel_with_optional_leader(ctx.v_ego, ctx.lead_current, idm);
  const double a_ego_new = accel_with_optional_leader(ctx.v_ego, ctx.lead_target, idm);
  const double a_fol_new = follower_accel_after_insert(ctx, idm);
  const double a_fol_old = follower_accel_before_insert(ctx, idm);
  const double incentive =
      (a_ego_new - a_ego_old) + m.politeness * (a_fol_new - a_fol_old);
  return incentive > m.a_th ? LaneDecision::kChange : LaneDecision::kStay;
}

StyleProfile profile(DrivingStyle label) {
  StyleProfile p;
  p.label = label;
  if (label == DrivingStyle::kConservative) {
    p.idm = IdmParams{1.0, 2.0, 2.5, 18.0, 2.0, 4.0};
    p.mobil = MobilParams{0.2, 0.4, 4.0};
  } else {
    p.idm = IdmParams{2.5, 3.0, 0.8, 25.0, 2.0, 4.0};
    p.mobil = MobilParams{0.05, 0.2, 4.0};
  }
  return p;
}

}  // namespace aacc
