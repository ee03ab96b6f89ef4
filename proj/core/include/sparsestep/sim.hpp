#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sparsestep/robot.hpp"
#include "sparsestep/terrain.hpp"

namespace sparsestep {

/// Physical constants of the point-foot model.
struct SimConfig {
  double dt = 0.02;
  int substeps = 4;
  double gravity = 9.81;
  double base_mass = 50.0;
  Eigen::Vector3d base_inertia{1.0, 2.5, 3.0};  // body-frame principal moments (kg m^2)
  double angular_damping = 0.0;                 // N m s / rad on the base
  double hip_x = 0.3;
  double hip_y = 0.2;
  double nominal_height = 0.6;  // foot below hip at q = 0
  double foot_mass = 1.5;
  double kp = 10000.0;
  double kd = 400.0;
  double torque_limit = 300.0;         // tau_lim per coordinate (N)
  double joint_velocity_limit = 2.0;   // q_dot_lim (m/s)
  double friction = 0.7;
  double workspace_horizontal = 0.25;  // +- around the hip
  double workspace_low = -0.75;        // relative to hip
  double workspace_high = -0.2;
  double contact_tolerance = 1e-6;
  // Termination.
  double fall_depth = 0.3;
  double support_radius = 0.5;
  double max_tilt = 1.0;

  Eigen::Vector3d hip(int foot) const;
  Eigen::Vector3d nominal_foot(int foot) const;  // base frame
  /// Box of admissible targets in q coordinates (offset from nominal).
  Eigen::Vector3d joint_low() const;
  Eigen::Vector3d joint_high() const;
  double standing_sag() const { return base_mass * gravity / (kNumFeet * kp); }
};

/// Task-related randomization ranges.
struct RandomizationConfig {
  std::pair<double, double> episode_length_range{5.0, 7.0};
  std::pair<double, double> target_distance_range{1.5, 4.9};
  std::pair<double, double> lateral_offset_range{-0.5, 0.5};
  std::pair<double, double> scan_drift_range{0.0, 0.0};
  std::pair<double, double> com_bias_x{0.0, 0.0};
  std::pair<double, double> com_bias_y{0.0, 0.0};
  std::pair<double, double> com_bias_z{0.0, 0.0};
  bool random_heading = true;  // uniform target heading, else aligned with travel

  static RandomizationConfig for_task(TerrainType type);
};

enum class TerminationKind : std::uint8_t { kNone = 0, kFailure = 1, kTimeout = 2 };

struct TerminationFlags {
  TerminationKind kind = TerminationKind::kNone;
  bool fault = false;
  bool fall = false;
  bool tilt = false;
  bool collision = false;
  bool out_of_bounds = false;

  bool failure() const { return kind == TerminationKind::kFailure; }
  bool timeout() const { return kind == TerminationKind::kTimeout; }
  bool done() const { return kind != TerminationKind::kNone; }
};

struct StepEvents {
  bool fault = false;
  std::array<bool, kNumFeet> touchdown{};
  std::array<bool, kNumFeet> liftoff{};
};

/// Spawned episode: initial state, command and the fixed scan drift.
struct EpisodeStart {
  RobotState state;
  Command command;
  std::shared_ptr<const TerrainGrid> grid;
  Eigen::Vector2d scan_drift = Eigen::Vector2d::Zero();
};

/// Pre-generated terrains, `variants` per level, shared read-only by all envs.
class TerrainPool {
 public:
  TerrainPool(TerrainType type, int variants, std::uint64_t seed, int max_level = kMaxLevel);
  TerrainPool(TerrainType type, int variants, std::uint64_t seed, int max_level,
              const TerrainLayout& layout);

  TerrainType type() const { return type_; }
  int variants() const { return variants_; }
  int max_level() const { return max_level_; }
  const std::shared_ptr<const TerrainGrid>& get(int level, int variant) const;

 private:
  TerrainType type_;
  int variants_;
  int max_level_;
  std::vector<std::shared_ptr<const TerrainGrid>> grids_;
};

class Simulator {
 public:
  explicit Simulator(SimConfig config = {});

  const SimConfig& config() const { return config_; }

  /// Robot standing at equilibrium on the grid's spawn point.
  RobotState standing_state(const TerrainGrid& grid, const Eigen::Vector2d& xy, double yaw,
                            const Eigen::Vector3d& com_bias = Eigen::Vector3d::Zero()) const;

  EpisodeStart reset(int level, const TerrainPool& pool, const RandomizationConfig& rand,
                     std::mt19937_64& rng) const;

  /// One control step. `action` holds target joint coordinates and is clipped
  /// to the workspace box. A non-finite action flags a fault and leaves the
  /// state otherwise untouched.
  StepEvents step(RobotState& state, const Vec12& action, const TerrainGrid& grid) const;
  std::pair<RobotState, StepEvents> step(const RobotState& state, const Vec12& action,
                                         const TerrainGrid& grid) const;

  TerminationFlags check_termination(const RobotState& state, const Command& command,
                                     const TerrainGrid& grid) const;

  /// Element-wise step over a batch; throws on mismatched lengths.
  void batch_step(std::span<RobotState> states, std::span<const Vec12> actions,
                  std::span<const TerrainGrid* const> grids, std::span<StepEvents> events,
                  int workers = 1) const;

  Vec12 clip_action(const Vec12& action) const;

 private:
  void substep(RobotState& state, const Vec12& target, const TerrainGrid& grid, double h,
               StepEvents& events) const;
  void refresh_kinematics(RobotState& state) const;

  SimConfig config_;
};

enum class Mirror : std::uint8_t { kIdentity = 0, kLeftRight = 1, kFrontBack = 2, kBoth = 3 };

Mirror mirror_from_string(std::string_view tag);
std::array<int, kNumFeet> foot_permutation(Mirror m);
/// Sign flips applied to a body-frame vector (polar) under the mirror.
Eigen::Vector3d mirror_signs(Mirror m);
Vec12 mirror_joint_vector(const Vec12& v, Mirror m);

/// Reflection across the vertical plane through `pivot` that contains (left-right)
/// or is normal to (front-back) the heading `yaw`; kBoth applies both.
struct Reflection {
  Eigen::Vector3d pivot = Eigen::Vector3d::Zero();
  double yaw = 0.0;
  Mirror mirror = Mirror::kIdentity;

  static Reflection about(const RobotState& s, Mirror m);
  Eigen::Matrix3d body() const;
  Eigen::Matrix3d world() const;
};

/// World-frame reflection of a full robot state and its command, with feet
/// relabelled so the result is again a valid robot. Only a symmetry of the
/// dynamics on terrain that is itself symmetric about the reflection.
RobotState mirror_state(const RobotState& s, const Reflection& r);
Command mirror_command(const Command& c, const Reflection& r);

}  // namespace sparsestep
