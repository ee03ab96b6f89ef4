#pragma once

#include <cstdint>
#include <vector>

#include "sparsestep/nn.hpp"
#include "sparsestep/normalizer.hpp"

namespace sparsestep {

struct RndConfig {
  bool enabled = true;
  int output_dim = 16;
  std::vector<int> predictor_hidden{128, 128};
  std::vector<int> target_hidden{256, 256};
  double reward_weight = 1.0;        // c_curio
  double optimization_weight = 1.0;  // scales the L1 loss
  double learning_rate = 1e-3;
};

/// Random network distillation over normalized (observation, action) inputs.
class Rnd {
 public:
  Rnd(int input_dim, const RndConfig& config, std::uint64_t seed);

  const RndConfig& config() const { return config_; }
  int input_dim() const { return predictor_.input_dim(); }

  void update_normalizer(const MatX<float>& inputs) { normalizer_.update(inputs); }
  const RunningNormalizer& normalizer() const { return normalizer_; }

  /// c_curio * mean_k |M1(x)_k - M2(x)_k| per column. Throws on non-finite input.
  VecX<float> reward(const MatX<float>& inputs) const;
  /// One gradient step of the predictor on the mean L1 error; returns the loss before the step.
  double update(const MatX<float>& inputs);

  const Mlp<float>& predictor() const { return predictor_; }
  const Mlp<float>& target() const { return target_; }
  /// FNV-1a over the frozen network's parameter bytes.
  std::uint64_t target_checksum() const;

 private:
  RndConfig config_;
  Mlp<float> predictor_;
  Mlp<float> target_;
  Adam<float> optimizer_;
  RunningNormalizer normalizer_;
};

}  // namespace sparsestep
