#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "sparsestep/sim.hpp"

namespace sparsestep {

enum class CurriculumRule : std::uint8_t {
  kRelaxed = 0,   // demote only when progress does not beat random actions
  kStrict = 1,    // demote whenever not promoted
  kVelocity = 2,  // distance-walked rule for velocity-command training
};

CurriculumRule curriculum_rule_from_string(std::string_view name);
std::string_view curriculum_rule_name(CurriculumRule rule);

struct CurriculumConfig {
  CurriculumRule rule = CurriculumRule::kRelaxed;
  double promote_radius = 1.0;
  int max_level = kMaxLevel;
  bool max_level_reshuffle = true;
  int initial_level = 0;
  int baseline_episodes = 1000;
  // Velocity rule: promote above this fraction of |v*| T walked, demote below the other.
  double velocity_promote_fraction = 0.8;
  double velocity_demote_fraction = 0.5;
};

inline constexpr double kFallbackBaseline = 0.25;

struct EpisodeOutcome {
  double initial_distance = 0.0;
  double final_distance = 0.0;
  bool failed = false;
  // Velocity-rule inputs.
  double distance_walked = 0.0;
  double commanded_distance = 0.0;  // |v*| * episode length

  double progress() const { return initial_distance - final_distance; }
};

/// Pure transition of one environment's level. `baselines[level]` is the random-action progress.
int update_level(const EpisodeOutcome& outcome, int level, const CurriculumConfig& config,
                 std::span<const double> baselines, std::mt19937_64& rng);

/// Mean progress toward the target of uniformly random actions on `level`, stopping at
/// failure or timeout. Returns kFallbackBaseline for n_episodes == 0.
double estimate_random_baseline(const Simulator& sim, const TerrainPool& pool,
                                const RandomizationConfig& rand, int level, int n_episodes,
                                std::uint64_t seed);
/// One entry per level in [0, pool.max_level()], clamped at zero.
std::vector<double> estimate_random_baselines(const Simulator& sim, const TerrainPool& pool,
                                              const RandomizationConfig& rand, int n_episodes,
                                              std::uint64_t seed);

/// Per-environment levels. Updated only at episode resets, by one writer.
class Curriculum {
 public:
  Curriculum(int n_envs, CurriculumConfig config, std::vector<double> baselines,
             std::uint64_t seed);

  const CurriculumConfig& config() const { return config_; }
  const std::vector<double>& baselines() const { return baselines_; }
  int n_envs() const { return static_cast<int>(levels_.size()); }
  int level(int env) const { return levels_.at(env); }
  std::span<const int> levels() const { return levels_; }
  void set_level(int env, int level);

  int update(int env, const EpisodeOutcome& outcome);
  std::array<int, kNumLevels> histogram() const;

 private:
  CurriculumConfig config_;
  std::vector<double> baselines_;
  std::vector<int> levels_;
  std::mt19937_64 rng_;
};

}  // namespace sparsestep
