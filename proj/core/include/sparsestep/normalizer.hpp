#pragma once

#include "sparsestep/nn.hpp"

namespace sparsestep {

/// Running per-feature mean and variance, merged batch by batch.
class RunningNormalizer {
 public:
  RunningNormalizer() = default;
  explicit RunningNormalizer(int dim, double clip = 5.0, double eps = 1e-8)
      : mean_(VecX<double>::Zero(dim)), var_(VecX<double>::Ones(dim)), clip_(clip), eps_(eps) {}

  int dim() const { return static_cast<int>(mean_.size()); }
  double count() const { return count_; }
  const VecX<double>& mean() const { return mean_; }
  const VecX<double>& variance() const { return var_; }
  void set(const VecX<double>& mean, const VecX<double>& var, double count) {
    mean_ = mean;
    var_ = var;
    count_ = count;
  }

  /// Merges a features x batch matrix into the statistics.
  void update(const MatX<float>& x);
  MatX<float> normalize(const MatX<float>& x) const;

  bool frozen = false;

 private:
  VecX<double> mean_;
  VecX<double> var_;
  double count_ = 0.0;
  double clip_ = 5.0;
  double eps_ = 1e-8;
};

}  // namespace sparsestep
