#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "sparsestep/eval.hpp"
#include "sparsestep/trainer.hpp"

namespace sparsestep {

/// JSON text of every field that affects results (output_dir and workers excluded).
std::string config_to_json(const TrainConfig& config);
/// Missing keys keep their defaults; unknown keys are errors.
TrainConfig config_from_json(const std::string& text);
TrainConfig load_config(const std::string& path);
/// Applies SPARSESTEP_SEED and SPARSESTEP_WORKERS when set.
void apply_env_overrides(TrainConfig& config);
std::uint64_t config_hash(const TrainConfig& config);

EvalSpec eval_spec_from_json(const std::string& text);
EvalSpec load_eval_spec(const std::string& path);
std::string eval_spec_to_json(const EvalSpec& spec);

/// Ablation settings: "proposed", "wo_navigation", "wo_curriculum", "wo_curiosity",
/// "wo_augmentation". Throws std::invalid_argument for anything else.
void apply_ablation(TrainConfig& config, std::string_view setting);
inline constexpr std::string_view kAblationSettings[] = {
    "proposed", "wo_navigation", "wo_curriculum", "wo_curiosity", "wo_augmentation"};

}  // namespace sparsestep
