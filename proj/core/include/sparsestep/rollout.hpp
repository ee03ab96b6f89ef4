#pragma once

#include <cstdint>
#include <vector>

#include "sparsestep/nn.hpp"

namespace sparsestep {

/// Flat training batch, one column per transition.
struct RolloutBatch {
  MatX<float> observations;  // obs_dim x N
  MatX<float> actions;       // act_dim x N, raw policy samples
  MatX<float> old_mean;      // act_dim x N
  MatX<float> old_std;       // act_dim x N
  VecX<float> old_log_prob;
  VecX<float> values;
  VecX<float> advantages;
  VecX<float> returns;
  std::vector<std::uint8_t> original;  // 0 for mirrored copies; KL is measured on the rest

  int size() const { return static_cast<int>(observations.cols()); }
  int obs_dim() const { return static_cast<int>(observations.rows()); }
  int act_dim() const { return static_cast<int>(actions.rows()); }

  void resize(int obs_dim, int act_dim, int n);
  /// Columns `idx` of every field.
  RolloutBatch select(const std::vector<int>& idx) const;
};

}  // namespace sparsestep
