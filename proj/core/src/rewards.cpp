#include "sparsestep/rewards.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sparsestep {

namespace {

constexpr std::array<std::string_view, kNumRewardTerms> kTermNames = {
    "position_tracking", "heading_tracking", "termination",      "collision",
    "joint_velocity",    "joint_velocity_limit", "base_accel",   "feet_accel",
    "action_rate",       "torque",           "torque_limit",     "contact_force",
    "dont_wait",         "move_in_direction", "stand_still",     "aggressive_motion",
    "stand_pose",        "linear_velocity_tracking", "yaw_rate_tracking",
};

// Product of the enabled masks; a zero parameter disables that mask.
double mask_product(const MaskParams& m, const RobotState& s, const Command& c) {
  double w = 1.0;
  if (m.window > 0.0) w *= mask_duration(s.time, c.episode_length, m.window);
  if (m.radius > 0.0) w *= mask_position(s.base_position.head<2>(), c.target_position, m.radius);
  if (m.heading > 0.0) w *= mask_heading(s.yaw(), c.target_heading, m.heading);
  return w;
}

}  // namespace

std::string_view reward_term_name(RewardTerm term) { return reward_term_name(static_cast<int>(term)); }

std::string_view reward_term_name(int term) {
  if (term < 0 || term >= kNumRewardTerms) throw std::out_of_range("bad reward term");
  return kTermNames[term];
}

double mask_duration(double t, double T, double t0) {
  if (!(t0 > 0.0)) throw std::invalid_argument("duration mask needs t0 > 0");
  return t > T - t0 ? 1.0 / t0 : 0.0;
}

double mask_position(const Eigen::Vector2d& p, const Eigen::Vector2d& target, double d0) {
  return (p - target).norm() < d0 ? 1.0 : 0.0;
}

double mask_heading(double psi, double target, double theta0) {
  return std::abs(wrap_angle(psi - target)) < theta0 ? 1.0 : 0.0;
}

double task_reward(double distance_sq, double t, double T, double T_r, double c_task) {
  if (!(t > T - T_r)) return 0.0;
  return (c_task / T_r) / (1.0 + distance_sq);
}

double task_reward(const Eigen::Vector2d& chi, const Eigen::Vector2d& target, double t, double T,
                   double T_r, double c_task) {
  return task_reward((chi - target).squaredNorm(), t, T, T_r, c_task);
}

double task_reward_heading(double psi, double target, double t, double T, double T_r,
                           double c_task) {
  const double d = wrap_angle(psi - target);
  return task_reward(d * d, t, T, T_r, c_task);
}

int collision_count(const RobotState& s, const TerrainGrid& grid, const SimConfig& sim) {
  auto below_surface = [&](const Eigen::Vector3d& p) {
    const TerrainSample t = grid.height_at(p.x(), p.y());
    return t.steppable && p.z() < t.height;
  };
  int count = below_surface(s.base_position) ? 1 : 0;
  const Eigen::Matrix3d r = s.rotation();
  for (int f = 0; f < kNumFeet; ++f) {
    const Eigen::Vector3d hip = s.base_position + r * sim.hip(f);
    const Eigen::Vector3d leg = s.foot_positions[f] - hip;
    for (double u : {0.2, 0.4, 0.6, 0.8}) {
      if (below_surface(hip + u * leg)) {
        ++count;
        break;
      }
    }
  }
  return count;
}

RewardBreakdown velocity_tracking_rewards(const RobotState& s, const Command& c,
                                          const RewardProfile& p) {
  RewardBreakdown out;
  const Eigen::Vector3d v_body = s.base_linear_velocity_body();
  const Eigen::Vector3d w_body = s.base_angular_velocity_body();
  const double lin_err = (v_body.head<2>() - c.velocity).squaredNorm();
  const double yaw_err = (w_body.z() - c.yaw_rate) * (w_body.z() - c.yaw_rate);
  out.terms[static_cast<int>(RewardTerm::kLinearVelocityTracking)] =
      p.linear_velocity_tracking * std::exp(-lin_err / p.tracking_sigma);
  out.terms[static_cast<int>(RewardTerm::kYawRateTracking)] =
      p.yaw_rate_tracking * std::exp(-yaw_err / p.tracking_sigma);
  for (double t : out.terms) out.total += t;
  return out;
}

RewardBreakdown compute_rewards(const RewardInput& in, const RewardProfile& p,
                                const SimConfig& sim) {
  if (!in.state || !in.action || !in.prev_action || !in.command || !in.grid) {
    throw std::invalid_argument("compute_rewards: missing input");
  }
  const RobotState& s = *in.state;
  const Command& c = *in.command;
  RewardBreakdown out;
  auto set = [&](RewardTerm t, double v) { out.terms[static_cast<int>(t)] = v; };

  const Eigen::Vector2d pos = s.base_position.head<2>();
  const Eigen::Vector3d& v = s.base_linear_velocity;
  const Eigen::Vector2d v_h = v.head<2>();
  const Eigen::Vector3d& w = s.base_angular_velocity;

  if (p.velocity_mode) {
    const RewardBreakdown track = velocity_tracking_rewards(s, c, p);
    set(RewardTerm::kLinearVelocityTracking, track[RewardTerm::kLinearVelocityTracking]);
    set(RewardTerm::kYawRateTracking, track[RewardTerm::kYawRateTracking]);
  } else {
    const MaskParams& pm = p.position_tracking_mask;
    double position = task_reward(pos, c.target_position, s.time, c.episode_length, pm.window,
                                  p.position_tracking);
    if (pm.radius > 0.0) position *= mask_position(pos, c.target_position, pm.radius);
    set(RewardTerm::kPositionTracking, position);

    const MaskParams& hm = p.heading_tracking_mask;
    double heading = task_reward_heading(s.yaw(), c.target_heading, s.time, c.episode_length,
                                         hm.window, p.heading_tracking);
    if (hm.radius > 0.0) heading *= mask_position(pos, c.target_position, hm.radius);
    if (hm.heading > 0.0) heading *= mask_heading(s.yaw(), c.target_heading, hm.heading);
    set(RewardTerm::kHeadingTracking, heading);
  }

  set(RewardTerm::kTermination, in.failed ? p.termination : 0.0);
  set(RewardTerm::kCollision, p.collision * collision_count(s, *in.grid, sim));
  set(RewardTerm::kJointVelocity, p.joint_velocity * s.joint_velocities.squaredNorm());

  const double qd_cap = p.joint_velocity_limit_fraction * sim.joint_velocity_limit;
  set(RewardTerm::kJointVelocityLimit,
      p.joint_velocity_limit * (s.joint_velocities.cwiseAbs().array() - qd_cap).max(0.0).sum());

  double base_accel = 0.0, feet_accel = 0.0;
  if (in.prev_state) {
    const RobotState& prev = *in.prev_state;
    const Eigen::Vector3d dv = (v - prev.base_linear_velocity) / sim.dt;
    const Eigen::Vector3d dw = (w - prev.base_angular_velocity) / sim.dt;
    base_accel = dv.squaredNorm() + p.base_accel_angular_scale * dw.squaredNorm();
    for (int f = 0; f < kNumFeet; ++f) {
      feet_accel += ((s.foot_velocities[f] - prev.foot_velocities[f]) / sim.dt).norm();
    }
  }
  set(RewardTerm::kBaseAccel, p.base_accel * base_accel);
  set(RewardTerm::kFeetAccel, p.feet_accel * feet_accel);
  set(RewardTerm::kActionRate, p.action_rate * (*in.action - *in.prev_action).squaredNorm());
  set(RewardTerm::kTorque, p.torque * s.actuator_forces.squaredNorm());

  const double tau_cap = p.torque_limit_fraction * sim.torque_limit;
  set(RewardTerm::kTorqueLimit,
      p.torque_limit * (s.actuator_forces.cwiseAbs().array() - tau_cap).max(0.0).sum());

  double contact = 0.0;
  for (double f : s.contact_forces) {
    const double excess = std::clamp(f - p.contact_force_threshold, 0.0, p.contact_force_threshold);
    contact += excess * excess;
  }
  set(RewardTerm::kContactForce, p.contact_force * contact);

  const double dont_wait_mask = 1.0 - mask_position(pos, c.target_position, p.dont_wait_radius);
  set(RewardTerm::kDontWait, p.dont_wait * dont_wait_mask * (v.norm() < p.dont_wait_speed ? 1.0 : 0.0));

  double cosine = 0.0;
  const Eigen::Vector2d to_target = c.target_position - pos;
  // Below 1 mm/s the direction of v is integration noise.
  if (v_h.norm() > 1e-3 && to_target.norm() > 0.0) {
    cosine = v_h.dot(to_target) / (v_h.norm() * to_target.norm());
  }
  const bool move_active = in.iteration < p.move_in_direction_iterations;
  set(RewardTerm::kMoveInDirection, move_active ? p.move_in_direction * cosine : 0.0);

  set(RewardTerm::kStandStill,
      p.stand_still * mask_product(p.stand_still_mask, s, c) * (2.5 * v.norm() + w.norm()));

  const double speed = v_h.norm();
  const double over = speed > p.aggressive_speed ? (speed - p.aggressive_speed) : 0.0;
  set(RewardTerm::kAggressiveMotion, p.aggressive_motion * over * over);

  const Eigen::Vector3d& g = s.projected_gravity;
  const double pose =
      std::abs(s.base_position.z() - p.stand_pose_height) + g.x() * g.x() + g.y() * g.y();
  set(RewardTerm::kStandPose, p.stand_pose * mask_product(p.stand_pose_mask, s, c) * pose);

  for (double t : out.terms) out.total += t;
  return out;
}

}  // namespace sparsestep
