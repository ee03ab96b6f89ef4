#pragma once

#include <array>
#include <string>
#include <string_view>

#include <Eigen/Core>

#include "sparsestep/robot.hpp"
#include "sparsestep/sim.hpp"

namespace sparsestep {

enum class RewardTerm : int {
  kPositionTracking = 0,
  kHeadingTracking,
  kTermination,
  kCollision,
  kJointVelocity,
  kJointVelocityLimit,
  kBaseAccel,
  kFeetAccel,
  kActionRate,
  kTorque,
  kTorqueLimit,
  kContactForce,
  kDontWait,
  kMoveInDirection,
  kStandStill,
  kAggressiveMotion,
  kStandPose,
  kLinearVelocityTracking,
  kYawRateTracking,
  kCount,
};

inline constexpr int kNumRewardTerms = static_cast<int>(RewardTerm::kCount);
std::string_view reward_term_name(RewardTerm term);
std::string_view reward_term_name(int term);

/// (1/t0) * 1(t > T - t0). Throws std::invalid_argument when t0 <= 0.
double mask_duration(double t, double T, double t0);
/// 1(|p - p*| < d0).
double mask_position(const Eigen::Vector2d& p, const Eigen::Vector2d& target, double d0);
/// 1(|wrap(psi - psi*)| < theta0).
double mask_heading(double psi, double target, double theta0);

/// Terminal-window tracking reward (c/T_r) / (1 + |chi - chi*|^2) when t > T - T_r.
double task_reward(double distance_sq, double t, double T, double T_r, double c_task);
double task_reward(const Eigen::Vector2d& chi, const Eigen::Vector2d& target, double t, double T,
                   double T_r, double c_task);
/// Heading variant; the angle difference is wrapped to (-pi, pi] first.
double task_reward_heading(double psi, double target, double t, double T, double T_r,
                           double c_task);

struct MaskParams {
  double window = 0.0;   // t0 of the duration mask, 0 = no duration mask
  double radius = 0.0;   // d0 of the position mask, 0 = no position mask
  double heading = 0.0;  // theta0 of the heading mask, 0 = no heading mask

  bool operator==(const MaskParams&) const = default;
};

/// Weights and constants of every term. Defaults are the generalist profile.
struct RewardProfile {
  std::string name = "generalist";
  std::string task = "generalist";
  bool velocity_mode = false;

  double position_tracking = 10.0;
  MaskParams position_tracking_mask{2.0, 0.0, 0.0};
  double heading_tracking = 5.0;
  MaskParams heading_tracking_mask{4.0, 2.0, 0.0};
  double termination = -200.0;
  double collision = -1.0;
  double joint_velocity = -0.001;
  double joint_velocity_limit = -1.0;
  double joint_velocity_limit_fraction = 0.9;
  double base_accel = -0.001;
  double base_accel_angular_scale = 0.02;
  double feet_accel = -0.0005;
  double action_rate = -0.01;
  double torque = -1e-5;
  double torque_limit = -0.2;
  double torque_limit_fraction = 1.0;
  double contact_force = -2.5e-5;
  double contact_force_threshold = 700.0;
  double dont_wait = -1.0;
  double dont_wait_radius = 1.0;
  double dont_wait_speed = 0.2;
  double move_in_direction = 1.0;
  int move_in_direction_iterations = 150;
  double stand_still = -1.0;
  MaskParams stand_still_mask{1.0, 0.25, 0.5};
  double aggressive_motion = 0.0;
  double aggressive_speed = 1.0;
  double stand_pose = 0.0;
  MaskParams stand_pose_mask{1.0, 0.25, 0.5};
  double stand_pose_height = 0.6;
  double linear_velocity_tracking = 1.0;
  double yaw_rate_tracking = 0.5;
  double tracking_sigma = 0.25;

  bool operator==(const RewardProfile&) const = default;
};

/// Built-in profiles: generalist, s2, bb, stepping_beams, velocity_ablation.
RewardProfile builtin_profile(std::string_view name);
/// Name of a built-in profile or path to a JSON profile file.
RewardProfile load_reward_profile(const std::string& name_or_path);
void save_reward_profile(const RewardProfile& profile, const std::string& path);
std::string profile_to_json(const RewardProfile& profile);
RewardProfile profile_from_json(const std::string& text);

struct RewardBreakdown {
  std::array<double, kNumRewardTerms> terms{};
  double total = 0.0;

  double operator[](RewardTerm t) const { return terms[static_cast<int>(t)]; }
};

/// Everything a reward evaluation looks at for one transition.
struct RewardInput {
  const RobotState* state = nullptr;       // after the step
  const RobotState* prev_state = nullptr;  // before the step; null at episode start
  const Vec12* action = nullptr;           // applied action a_t
  const Vec12* prev_action = nullptr;      // a_{t-1}
  const Command* command = nullptr;
  const TerrainGrid* grid = nullptr;
  bool failed = false;  // early termination on this step
  int iteration = 0;    // training iteration, gates move-in-direction
};

/// Number of base/leg proxy points below a steppable surface (collision term).
int collision_count(const RobotState& state, const TerrainGrid& grid, const SimConfig& sim);

RewardBreakdown compute_rewards(const RewardInput& in, const RewardProfile& profile,
                                const SimConfig& sim);

/// Only the two velocity-tracking terms, the rest left zero.
RewardBreakdown velocity_tracking_rewards(const RobotState& state, const Command& command,
                                          const RewardProfile& profile);

}  // namespace sparsestep
