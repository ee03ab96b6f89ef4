#include "sparsestep/normalizer.hpp"

#include <stdexcept>

namespace sparsestep {

void RunningNormalizer::update(const MatX<float>& x) {
  if (frozen || x.cols() == 0) return;
  if (x.rows() != dim()) throw std::invalid_argument("normalizer: dimension mismatch");
  const double n = static_cast<double>(x.cols());
  const MatX<double> xd = x.cast<double>();
  const VecX<double> batch_mean = xd.rowwise().mean();
  const VecX<double> batch_var =
      (xd.colwise() - batch_mean).array().square().rowwise().mean().matrix();
  if (count_ == 0.0) {
    mean_ = batch_mean;
    var_ = batch_var;
    count_ = n;
    return;
  }
  const double total = count_ + n;
  const VecX<double> delta = batch_mean - mean_;
  mean_ += delta * (n / total);
  var_ = (var_ * count_ + batch_var * n + delta.array().square().matrix() * (count_ * n / total)) /
         total;
  count_ = total;
}

MatX<float> RunningNormalizer::normalize(const MatX<float>& x) const {
  if (x.rows() != dim()) throw std::invalid_argument("normalizer: dimension mismatch");
  const VecX<float> mean = mean_.cast<float>();
  const VecX<float> inv =
      (var_.array() + eps_).rsqrt().matrix().cast<float>();
  MatX<float> out = (x.colwise() - mean).array().colwise() * inv.array();
  const float c = static_cast<float>(clip_);
  return out.cwiseMax(-c).cwiseMin(c);
}

}  // namespace sparsestep
