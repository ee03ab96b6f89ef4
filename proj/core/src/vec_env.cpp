#include "sparsestep/vec_env.hpp"

#include <algorithm>
#include <stdexcept>

namespace sparsestep {

void sample_velocity_command(Command& c, const VelocityCommandRange& range, std::mt19937_64& rng) {
  auto u = [&](std::pair<double, double> r) {
    return std::uniform_real_distribution<double>(r.first, r.second)(rng);
  };
  c.velocity = {u(range.vx), u(range.vy)};
  c.yaw_rate = u(range.yaw_rate);
}

EpisodeOutcome episode_outcome(const RobotState& s, const Command& c, const Eigen::Vector2d& spawn,
                               double initial_distance, bool failed) {
  EpisodeOutcome o;
  o.initial_distance = initial_distance;
  o.final_distance = (s.base_position.head<2>() - c.target_position).norm();
  o.failed = failed;
  o.distance_walked = (s.base_position.head<2>() - spawn).norm();
  o.commanded_distance = c.velocity.norm() * c.episode_length;
  return o;
}

bool episode_success(const EpisodeOutcome& o, const CurriculumConfig& cfg, bool velocity_mode) {
  if (velocity_mode) {
    return !o.failed && o.distance_walked >= cfg.velocity_promote_fraction * o.commanded_distance;
  }
  return o.final_distance < cfg.promote_radius;
}

VecEnv::VecEnv(int n_envs, EnvConfig config, std::shared_ptr<const TerrainPool> pool,
               Curriculum* curriculum, std::uint64_t seed)
    : config_(std::move(config)), sim_(config_.sim), pool_(std::move(pool)), curriculum_(curriculum) {
  if (n_envs <= 0) throw std::invalid_argument("vec_env: n_envs must be positive");
  if (!pool_) throw std::invalid_argument("vec_env: missing terrain pool");
  if (curriculum_ && curriculum_->n_envs() != n_envs) {
    throw std::invalid_argument("vec_env: curriculum size mismatch");
  }
  layout_.scan_size = config_.pattern.size();
  rngs_.reserve(n_envs);
  for (int e = 0; e < n_envs; ++e) {
    rngs_.emplace_back(seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(e) * 7919ULL + 17);
  }
  states_.resize(n_envs);
  prev_states_.resize(n_envs);
  commands_.resize(n_envs);
  grids_.resize(n_envs);
  drifts_.resize(n_envs);
  spawns_.resize(n_envs);
  initial_distance_.resize(n_envs);
  obs_.resize(layout_.size(), n_envs);
  terminal_obs_ = MatX<float>::Zero(layout_.size(), n_envs);
  rewards_ = VecX<float>::Zero(n_envs);
  dones_.assign(n_envs, 0);
  timeouts_.assign(n_envs, 0);
  for (int e = 0; e < n_envs; ++e) {
    reset_env(e);
    write_obs(e, obs_);
  }
}

void VecEnv::reset_env(int e) {
  const int level = curriculum_ ? curriculum_->level(e) : 0;
  EpisodeStart start = sim_.reset(level, *pool_, config_.randomization, rngs_[e]);
  if (config_.profile.velocity_mode) {
    sample_velocity_command(start.command, config_.velocity_commands, rngs_[e]);
  }
  states_[e] = start.state;
  commands_[e] = start.command;
  grids_[e] = start.grid;
  drifts_[e] = start.scan_drift;
  spawns_[e] = start.state.base_position.head<2>();
  initial_distance_[e] = (spawns_[e] - start.command.target_position).norm();
}

void VecEnv::write_obs(int e, MatX<float>& dst) {
  ObservationContext ctx;
  ctx.grid = grids_[e].get();
  ctx.scan_drift = drifts_[e];
  ctx.pattern = config_.pattern;
  ctx.velocity_mode = config_.profile.velocity_mode;
  build_observation(states_[e], commands_[e], ctx, std::span<float>(dst.col(e).data(), dst.rows()));
}

void VecEnv::step(const MatX<float>& u, const Eigen::Vector3d& action_scale, int iteration) {
  const int n = n_envs();
  if (u.cols() != n || u.rows() != kJointDim) throw std::invalid_argument("vec_env: action shape");
  std::vector<Vec12> actions(n);
  std::vector<const TerrainGrid*> grids(n);
  std::vector<StepEvents> events(n);
  for (int e = 0; e < n; ++e) {
    for (int i = 0; i < kJointDim; ++i) {
      actions[e][i] = action_scale[i % 3] * static_cast<double>(u(i, e));
    }
    grids[e] = grids_[e].get();
    prev_states_[e] = states_[e];
  }
  sim_.batch_step(states_, actions, grids, events, config_.workers);

  const double dt = config_.sim.dt;
  for (int e = 0; e < n; ++e) {
    const TerminationFlags term = sim_.check_termination(states_[e], commands_[e], *grids_[e]);
    RewardInput in;
    in.state = &states_[e];
    in.prev_state = &prev_states_[e];
    in.action = &states_[e].previous_action;
    in.prev_action = &prev_states_[e].previous_action;
    in.command = &commands_[e];
    in.grid = grids_[e].get();
    in.failed = term.failure();
    in.iteration = iteration;
    const RewardBreakdown r = compute_rewards(in, config_.profile, config_.sim);
    double total = r.total;
    if (config_.clip_negative_rewards) {
      const double termination = r.terms[static_cast<int>(RewardTerm::kTermination)];
      total = std::max(total - termination, 0.0) + termination;
    }
    rewards_[e] = static_cast<float>(total * dt);
    for (int k = 0; k < kNumRewardTerms; ++k) stats_.term_sums[k] += r.terms[k] * dt;
    stats_.reward_sum += total * dt;
    ++stats_.steps;
    if (events[e].fault || term.fault) ++stats_.faults;

    dones_[e] = term.done() ? 1 : 0;
    timeouts_[e] = term.timeout() ? 1 : 0;
    if (term.done()) {
      write_obs(e, terminal_obs_);
      const EpisodeOutcome o =
          episode_outcome(states_[e], commands_[e], spawns_[e], initial_distance_[e], term.failure());
      const CurriculumConfig cc = curriculum_ ? curriculum_->config() : CurriculumConfig{};
      ++stats_.episodes;
      if (episode_success(o, cc, config_.profile.velocity_mode)) ++stats_.successes;
      if (term.failure()) ++stats_.failures;
      if (curriculum_) curriculum_->update(e, o);
      reset_env(e);
    }
    write_obs(e, obs_);
  }
}

}  // namespace sparsestep
