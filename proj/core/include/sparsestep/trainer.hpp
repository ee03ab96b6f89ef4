#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sparsestep/checkpoint.hpp"
#include "sparsestep/curriculum.hpp"
#include "sparsestep/eval.hpp"
#include "sparsestep/ppo.hpp"
#include "sparsestep/rnd.hpp"
#include "sparsestep/vec_env.hpp"

namespace sparsestep {

/// Periodic evaluation during training; training stops early once every listed level passes.
struct ProgressEval {
  int interval = 0;  // iterations, 0 disables
  std::vector<int> levels{0};
  std::vector<double> thresholds;  // per level; empty means never stop early
  double distance = 3.0;
  int n_trials = 50;
  int n_terrains = 10;
  std::uint64_t seed = 777;
};

struct TrainConfig {
  std::string name = "run";
  std::string stage = "generalist";  // generalist | finetune
  TerrainType terrain = TerrainType::kStonesEverywhere;
  int terrain_variants = 20;
  std::string profile = "generalist";  // builtin name or JSON path
  int n_envs = 4096;
  int steps_per_iter = 48;
  int total_iterations = 8000;
  std::uint64_t seed = 1;
  int workers = 1;
  bool symmetry = true;
  bool clip_negative_rewards = false;
  PpoConfig ppo;
  PolicyConfig policy;
  RndConfig rnd;
  CurriculumConfig curriculum;
  SimConfig sim;
  VelocityCommandRange velocity_commands;
  ProgressEval progress;
  int checkpoint_interval = 500;
  std::string output_dir = "runs/run";
  // Obs-normalizer updates stop after this many iterations (0: never freeze).
  int freeze_normalizer_after = 0;
};

struct ProgressPoint {
  int iteration = 0;
  std::vector<double> success;  // per progress level
  std::vector<double> advance;  // mean max advance (m) per progress level
};

struct TrainResult {
  int iterations = 0;
  std::string final_checkpoint;
  std::vector<ProgressPoint> progress;
  bool early_stopped = false;
  double wall_seconds = 0.0;
  int faults = 0;
};

/// Called after every iteration with the metrics JSON line; return false to stop.
using IterationCallback = std::function<bool(int iteration, const std::string& metrics_line)>;

/// Full training loop. With `init`, actor, critic and normalizer start from it (finetune);
/// optimizer, curriculum and curiosity state always start fresh.
TrainResult train(const TrainConfig& config, const Policy* init = nullptr,
                  const IterationCallback& callback = {});

/// Loads the checkpoint, warns on a config-hash mismatch and trains with stage "finetune".
TrainResult finetune(const std::string& checkpoint, const TrainConfig& config,
                     const IterationCallback& callback = {});

}  // namespace sparsestep
