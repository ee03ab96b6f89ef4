#include "sparsestep/curriculum.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace sparsestep {

CurriculumRule curriculum_rule_from_string(std::string_view name) {
  if (name == "relaxed") return CurriculumRule::kRelaxed;
  if (name == "strict") return CurriculumRule::kStrict;
  if (name == "velocity") return CurriculumRule::kVelocity;
  throw std::invalid_argument("unknown curriculum rule: " + std::string(name));
}

std::string_view curriculum_rule_name(CurriculumRule rule) {
  switch (rule) {
    case CurriculumRule::kRelaxed: return "relaxed";
    case CurriculumRule::kStrict: return "strict";
    case CurriculumRule::kVelocity: return "velocity";
  }
  return "relaxed";
}

int update_level(const EpisodeOutcome& outcome, int level, const CurriculumConfig& config,
                 std::span<const double> baselines, std::mt19937_64& rng) {
  const int top = std::clamp(config.max_level, 0, kMaxLevel);
  level = std::clamp(level, 0, top);

  bool promote = false;
  bool demote = false;
  if (config.rule == CurriculumRule::kVelocity) {
    promote = !outcome.failed &&
              outcome.distance_walked >= config.velocity_promote_fraction * outcome.commanded_distance;
    demote = !promote &&
             outcome.distance_walked < config.velocity_demote_fraction * outcome.commanded_distance;
  } else {
    promote = outcome.final_distance < config.promote_radius;
    if (!promote) {
      if (config.rule == CurriculumRule::kStrict) {
        demote = true;
      } else {
        const double b = level < static_cast<int>(baselines.size()) ? baselines[level]
                                                                    : kFallbackBaseline;
        demote = outcome.progress() <= b;
      }
    }
  }

  if (promote) {
    if (level < top) return level + 1;
    if (!config.max_level_reshuffle) return top;
    return std::uniform_int_distribution<int>(0, top)(rng);
  }
  if (demote) return std::max(level - 1, 0);
  return level;
}

double estimate_random_baseline(const Simulator& sim, const TerrainPool& pool,
                                const RandomizationConfig& rand, int level, int n_episodes,
                                std::uint64_t seed) {
  if (n_episodes <= 0) return kFallbackBaseline;
  std::mt19937_64 rng(seed * 6364136223846793005ULL + static_cast<std::uint64_t>(level) + 1);
  const SimConfig& c = sim.config();
  const Eigen::Vector3d lo = c.joint_low(), hi = c.joint_high();
  double total = 0.0;
  for (int e = 0; e < n_episodes; ++e) {
    EpisodeStart start = sim.reset(level, pool, rand, rng);
    RobotState& s = start.state;
    const TerrainGrid& grid = *start.grid;
    const double d0 = (s.base_position.head<2>() - start.command.target_position).norm();
    Vec12 a;
    while (true) {
      for (int f = 0; f < kNumFeet; ++f) {
        for (int k = 0; k < 3; ++k) {
          a[3 * f + k] = std::uniform_real_distribution<double>(lo[k], hi[k])(rng);
        }
      }
      sim.step(s, a, grid);
      if (sim.check_termination(s, start.command, grid).done()) break;
    }
    total += d0 - (s.base_position.head<2>() - start.command.target_position).norm();
  }
  return total / n_episodes;
}

std::vector<double> estimate_random_baselines(const Simulator& sim, const TerrainPool& pool,
                                              const RandomizationConfig& rand, int n_episodes,
                                              std::uint64_t seed) {
  std::vector<double> out(pool.max_level() + 1);
  for (int level = 0; level <= pool.max_level(); ++level) {
    out[level] = std::max(0.0, estimate_random_baseline(sim, pool, rand, level, n_episodes, seed));
  }
  return out;
}

Curriculum::Curriculum(int n_envs, CurriculumConfig config, std::vector<double> baselines,
                       std::uint64_t seed)
    : config_(config), baselines_(std::move(baselines)), rng_(seed) {
  if (n_envs <= 0) throw std::invalid_argument("curriculum: n_envs must be positive");
  config_.max_level = std::clamp(config_.max_level, 0, kMaxLevel);
  for (double& b : baselines_) b = std::max(b, 0.0);
  levels_.assign(n_envs, std::clamp(config_.initial_level, 0, config_.max_level));
}

void Curriculum::set_level(int env, int level) {
  levels_.at(env) = std::clamp(level, 0, config_.max_level);
}

int Curriculum::update(int env, const EpisodeOutcome& outcome) {
  int& l = levels_.at(env);
  l = update_level(outcome, l, config_, baselines_, rng_);
  return l;
}

std::array<int, kNumLevels> Curriculum::histogram() const {
  std::array<int, kNumLevels> h{};
  for (int l : levels_) ++h[l];
  return h;
}

}  // namespace sparsestep
