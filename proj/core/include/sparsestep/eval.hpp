#pragma once

#include <memory>
#include <string>
#include <vector>

#include "sparsestep/policy.hpp"
#include "sparsestep/sim.hpp"

namespace sparsestep {

struct EvalSpec {
  TerrainType terrain = TerrainType::kStonesEverywhere;
  std::vector<int> levels{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  double traverse_distance = 6.0;
  int n_trials = 1000;
  int n_terrains = 100;
  double success_threshold = 0.8;  // transfer cells
  std::uint64_t seed = 2024;
  int workers = 1;
  // Target sits this far beyond the traverse distance, straight ahead of the spawn.
  double target_margin = 0.5;
  // Episode length is the family's longest, stretched when the target is farther than trained.
  double min_episode_length = 0.0;
  double velocity_command = 0.8;  // forward command for velocity-mode policies
  std::string dump_traj;          // JSONL path, empty to skip
  SimConfig sim;                  // physics the policy was trained under

  void validate() const;
};

/// Anything that maps observations to policy samples u.
class Agent {
 public:
  virtual ~Agent() = default;
  virtual MatX<float> act(const MatX<float>& obs) = 0;
  virtual Eigen::Vector3d action_scale() const { return {0.25, 0.25, 0.25}; }
  virtual bool velocity_mode() const { return false; }
  /// Called after each physics step, before success and termination checks.
  virtual void intervene(RobotState&, const Command&, const TerrainGrid&, const Simulator&) {}
};

/// Deterministic action mean of a trained policy.
class PolicyAgent : public Agent {
 public:
  explicit PolicyAgent(Policy policy, bool velocity_mode = false)
      : policy_(std::move(policy)), velocity_mode_(velocity_mode) {}
  MatX<float> act(const MatX<float>& obs) override { return policy_.mean_action(obs); }
  Eigen::Vector3d action_scale() const override { return policy_.config.action_scale; }
  bool velocity_mode() const override { return velocity_mode_; }
  const Policy& policy() const { return policy_; }

 private:
  Policy policy_;
  bool velocity_mode_;
};

/// Holds the nominal stance forever.
class FreezeAgent : public Agent {
 public:
  MatX<float> act(const MatX<float>& obs) override {
    return MatX<float>::Zero(kJointDim, obs.cols());
  }
};

/// Moves the robot straight onto its target on the first step.
class TeleportAgent : public Agent {
 public:
  MatX<float> act(const MatX<float>& obs) override {
    return MatX<float>::Zero(kJointDim, obs.cols());
  }
  void intervene(RobotState& s, const Command& c, const TerrainGrid& g, const Simulator& sim) override;
};

struct TrialRecord {
  int level = 0;
  int terrain = 0;
  double spawn_x = 0.0;
  bool success = false;
  bool failed = false;
  double max_advance = 0.0;
  int steps = 0;
};

struct LevelEval {
  int level = 0;
  double distance = 0.0;
  double success_rate = 0.0;
  std::vector<TrialRecord> trials;
};

/// Success rate of `agent` at one level and distance. Success means the base advanced at least
/// `distance` along the course axis before any failure termination.
LevelEval evaluate_level(Agent& agent, const EvalSpec& spec, int level, double distance);

struct CurvePoint {
  double x = 0.0;  // level or distance
  double mean = 0.0;
  double std = 0.0;
  std::vector<double> per_agent;
};

std::vector<CurvePoint> eval_success_vs_level(const std::vector<Agent*>& agents,
                                              const EvalSpec& spec);
std::vector<CurvePoint> eval_success_vs_distance(const std::vector<Agent*>& agents,
                                                 const EvalSpec& spec,
                                                 const std::vector<double>& distances, int level);

struct TransferCell {
  TerrainType train;
  TerrainType test;
  int max_level_passing = -1;  // -1: none at all
  bool below_zero = false;     // level 0 success in [0.5, 0.8)
  std::string label() const;
};

/// value: highest level with success >= threshold; "<0" if level 0 lands in [0.5, threshold).
TransferCell transfer_cell(TerrainType train, TerrainType test, const std::vector<double>& rates,
                           double threshold);
std::vector<TransferCell> transfer_matrix(const std::vector<std::pair<TerrainType, Agent*>>& policies,
                                          const std::vector<TerrainType>& terrains,
                                          const EvalSpec& spec);

std::string curve_csv(const std::vector<CurvePoint>& curve, const std::string& x_name);
std::string transfer_csv(const std::vector<TransferCell>& cells,
                         const std::vector<TerrainType>& train, const std::vector<TerrainType>& test);

/// Re-derives per-trial success from a `dump_traj` file.
std::vector<TrialRecord> trials_from_trajectory(const std::string& path, double distance);

}  // namespace sparsestep
