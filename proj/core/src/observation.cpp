#include "sparsestep/observation.hpp"

#include <stdexcept>
#include <vector>

namespace sparsestep {

Eigen::Vector2d relative_target(const RobotState& s, const Command& c) {
  const double yaw = s.yaw();
  const Eigen::Vector2d d = c.target_position - s.base_position.head<2>();
  const double cy = std::cos(yaw), sy = std::sin(yaw);
  return {cy * d.x() + sy * d.y(), -sy * d.x() + cy * d.y()};
}

double heading_error(const RobotState& s, const Command& c) {
  return wrap_angle(c.target_heading - s.yaw());
}

void build_observation(const RobotState& s, const Command& c, const ObservationContext& ctx,
                       std::span<float> out) {
  ObsLayout layout;
  layout.scan_size = ctx.pattern.size();
  if (static_cast<int>(out.size()) != layout.size()) {
    throw std::invalid_argument("observation buffer has the wrong size");
  }
  if (!ctx.grid) throw std::invalid_argument("observation needs a terrain grid");

  auto put3 = [&](int at, const Eigen::Vector3d& v) {
    for (int k = 0; k < 3; ++k) out[at + k] = static_cast<float>(v[k]);
  };
  auto put12 = [&](int at, const Vec12& v) {
    for (int k = 0; k < kJointDim; ++k) out[at + k] = static_cast<float>(v[k]);
  };
  put3(ObsLayout::kLinearVelocity, s.base_linear_velocity_body());
  put3(ObsLayout::kAngularVelocity, s.base_angular_velocity_body());
  put3(ObsLayout::kGravity, s.projected_gravity);
  put12(ObsLayout::kJointCoords, s.joint_coords);
  put12(ObsLayout::kJointVelocities, s.joint_velocities);
  put12(ObsLayout::kPreviousAction, s.previous_action);

  std::vector<double> scan(layout.scan_size);
  height_scan(*ctx.grid, s.base_position, s.yaw(), ctx.scan_drift, ctx.pattern, scan);
  for (int i = 0; i < layout.scan_size; ++i) out[ObsLayout::kScan + i] = static_cast<float>(scan[i]);

  if (ctx.velocity_mode) {
    out[layout.target()] = static_cast<float>(c.velocity.x());
    out[layout.target() + 1] = static_cast<float>(c.velocity.y());
    out[layout.heading()] = static_cast<float>(c.yaw_rate);
    out[layout.heading() + 1] = 0.0f;
  } else {
    const Eigen::Vector2d rel = relative_target(s, c);
    const double err = heading_error(s, c);
    out[layout.target()] = static_cast<float>(rel.x());
    out[layout.target() + 1] = static_cast<float>(rel.y());
    out[layout.heading()] = static_cast<float>(std::cos(err));
    out[layout.heading() + 1] = static_cast<float>(std::sin(err));
  }
  const double T = c.episode_length;
  out[layout.time_left()] = static_cast<float>(T > 0.0 ? (T - s.time) / T : 0.0);
}

std::vector<float> build_observation(const RobotState& s, const Command& c,
                                     const ObservationContext& ctx) {
  ObsLayout layout;
  layout.scan_size = ctx.pattern.size();
  std::vector<float> out(layout.size());
  build_observation(s, c, ctx, out);
  return out;
}

}  // namespace sparsestep
