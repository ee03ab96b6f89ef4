#pragma once

#include <memory>
#include <random>
#include <vector>

#include "sparsestep/curriculum.hpp"
#include "sparsestep/nn.hpp"
#include "sparsestep/observation.hpp"
#include "sparsestep/rewards.hpp"
#include "sparsestep/sim.hpp"

namespace sparsestep {

struct VelocityCommandRange {
  std::pair<double, double> vx{0.3, 1.0};
  std::pair<double, double> vy{-0.2, 0.2};
  std::pair<double, double> yaw_rate{-0.3, 0.3};
};

struct EnvConfig {
  SimConfig sim;
  RandomizationConfig randomization;
  RewardProfile profile;
  ScanPattern pattern;
  VelocityCommandRange velocity_commands;
  // Training reward is max(total - termination, 0) + termination, so that a policy cannot
  // escape regularizer costs by ending episodes early.
  bool clip_negative_rewards = false;
  int workers = 1;
};

/// Reward terms and outcome bookkeeping summed over one rollout.
struct EnvStats {
  std::array<double, kNumRewardTerms> term_sums{};
  double reward_sum = 0.0;
  long steps = 0;
  int episodes = 0;
  int successes = 0;
  int failures = 0;
  int faults = 0;
  void clear() { *this = EnvStats{}; }
};

/// Batch of environments sharing one terrain pool. Levels come from the curriculum and change
/// only at resets. Each environment owns its RNG, so results do not depend on `workers`.
class VecEnv {
 public:
  VecEnv(int n_envs, EnvConfig config, std::shared_ptr<const TerrainPool> pool,
         Curriculum* curriculum, std::uint64_t seed);

  int n_envs() const { return static_cast<int>(states_.size()); }
  int obs_dim() const { return layout_.size(); }
  const EnvConfig& config() const { return config_; }
  const Simulator& simulator() const { return sim_; }

  /// obs_dim x n_envs observations of the current states.
  const MatX<float>& observations() const { return obs_; }
  /// Observation of the final state for environments that ended on the last step.
  const MatX<float>& terminal_observations() const { return terminal_obs_; }
  const VecX<float>& rewards() const { return rewards_; }
  const std::vector<std::uint8_t>& dones() const { return dones_; }
  const std::vector<std::uint8_t>& timeouts() const { return timeouts_; }

  const RobotState& state(int env) const { return states_[env]; }
  const Command& command(int env) const { return commands_[env]; }

  /// Applies policy samples `u` (act_dim x n_envs) as joint targets action_scale * u.
  void step(const MatX<float>& u, const Eigen::Vector3d& action_scale, int iteration);

  EnvStats& stats() { return stats_; }

 private:
  void reset_env(int env);
  void write_obs(int env, MatX<float>& dst);

  EnvConfig config_;
  Simulator sim_;
  std::shared_ptr<const TerrainPool> pool_;
  Curriculum* curriculum_;
  ObsLayout layout_;
  std::vector<std::mt19937_64> rngs_;
  std::vector<RobotState> states_;
  std::vector<RobotState> prev_states_;
  std::vector<Command> commands_;
  std::vector<std::shared_ptr<const TerrainGrid>> grids_;
  std::vector<Eigen::Vector2d> drifts_;
  std::vector<Eigen::Vector2d> spawns_;
  std::vector<double> initial_distance_;
  MatX<float> obs_;
  MatX<float> terminal_obs_;
  VecX<float> rewards_;
  std::vector<std::uint8_t> dones_;
  std::vector<std::uint8_t> timeouts_;
  EnvStats stats_;
};

/// Velocity command drawn from `range`, also used by the velocity-mode ablation.
void sample_velocity_command(Command& c, const VelocityCommandRange& range, std::mt19937_64& rng);

/// Outcome of a finished episode as consumed by the curriculum.
EpisodeOutcome episode_outcome(const RobotState& s, const Command& c, const Eigen::Vector2d& spawn,
                               double initial_distance, bool failed);

bool episode_success(const EpisodeOutcome& o, const CurriculumConfig& cfg, bool velocity_mode);

}  // namespace sparsestep
