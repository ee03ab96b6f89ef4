#pragma once

#include <span>

#include "sparsestep/robot.hpp"
#include "sparsestep/terrain.hpp"

namespace sparsestep {

/// Offsets of the flat policy observation.
///
/// In velocity mode the target slot carries the planar velocity command
/// (vx*, vy*) and the first heading slot the yaw-rate command; the second
/// heading slot is zero.
struct ObsLayout {
  static constexpr int kLinearVelocity = 0;   // base frame, 3
  static constexpr int kAngularVelocity = 3;  // base frame, 3
  static constexpr int kGravity = 6;          // 3
  static constexpr int kJointCoords = 9;      // 12
  static constexpr int kJointVelocities = 21; // 12
  static constexpr int kPreviousAction = 33;  // 12
  static constexpr int kScan = 45;
  int scan_size = ScanPattern{}.size();

  int target() const { return kScan + scan_size; }  // 2, heading frame
  int heading() const { return target() + 2; }      // cos, sin of the heading error
  int time_left() const { return target() + 4; }    // (T - t) / T
  int size() const { return target() + 5; }
};

struct ObservationContext {
  const TerrainGrid* grid = nullptr;
  Eigen::Vector2d scan_drift = Eigen::Vector2d::Zero();
  ScanPattern pattern;
  bool velocity_mode = false;
};

void build_observation(const RobotState& state, const Command& command,
                       const ObservationContext& ctx, std::span<float> out);
std::vector<float> build_observation(const RobotState& state, const Command& command,
                                     const ObservationContext& ctx);

/// Target position in the yaw-aligned base frame.
Eigen::Vector2d relative_target(const RobotState& state, const Command& command);
/// wrap(psi* - psi).
double heading_error(const RobotState& state, const Command& command);

}  // namespace sparsestep
