#pragma once

#include <array>
#include <cmath>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace sparsestep {

inline constexpr int kNumFeet = 4;
inline constexpr int kJointDim = 3 * kNumFeet;

// Foot order follows the usual quadruped convention.
enum Foot : int { kLF = 0, kRF = 1, kLH = 2, kRH = 3 };

using Vec12 = Eigen::Matrix<double, kJointDim, 1>;
using FootArray = std::array<Eigen::Vector3d, kNumFeet>;

inline double wrap_angle(double a) {
  // Maps to (-pi, pi].
  a = std::remainder(a, 2.0 * M_PI);
  if (a <= -M_PI) a += 2.0 * M_PI;
  return a;
}

/// Simplified quadruped: rigid base with four point feet driven by PD actuators.
///
/// The "joint" quantities are the point-foot analogues of the articulated
/// ones: q is the foot offset from its nominal stance point in the base frame,
/// q_dot its rate, tau the actuator force along each base axis.
struct RobotState {
  Eigen::Vector3d base_position = Eigen::Vector3d::Zero();
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();
  Eigen::Vector3d base_linear_velocity = Eigen::Vector3d::Zero();   // world frame
  Eigen::Vector3d base_angular_velocity = Eigen::Vector3d::Zero();  // world frame
  Eigen::Vector3d projected_gravity{0.0, 0.0, -1.0};                // base frame
  FootArray foot_positions{};                                       // world frame
  FootArray foot_velocities{};                                      // world frame
  Vec12 joint_coords = Vec12::Zero();
  Vec12 joint_velocities = Vec12::Zero();
  Vec12 actuator_forces = Vec12::Zero();
  Vec12 previous_action = Vec12::Zero();
  std::array<double, kNumFeet> contact_forces{};
  std::array<bool, kNumFeet> contact_flags{};
  Eigen::Vector3d com_bias = Eigen::Vector3d::Zero();  // base frame offset of the mass point
  double time = 0.0;
  int step_count = 0;
  bool fault = false;

  double yaw() const;
  double roll() const;
  double pitch() const;
  Eigen::Matrix3d rotation() const { return orientation.toRotationMatrix(); }
  Eigen::Vector3d base_linear_velocity_body() const;
  Eigen::Vector3d base_angular_velocity_body() const;
};

/// Navigation command: reach target pose by the end of the episode. In the
/// velocity-tracking ablation the velocity fields are used instead.
struct Command {
  Eigen::Vector2d target_position = Eigen::Vector2d::Zero();
  double target_heading = 0.0;
  double episode_length = 6.0;
  Eigen::Vector2d velocity = Eigen::Vector2d::Zero();  // base-frame planar velocity command
  double yaw_rate = 0.0;
};

}  // namespace sparsestep
