#include "sparsestep/rnd.hpp"

#include <cstring>
#include <random>
#include <stdexcept>

namespace sparsestep {

Rnd::Rnd(int input_dim, const RndConfig& config, std::uint64_t seed)
    : config_(config),
      predictor_(input_dim, config.predictor_hidden, config.output_dim, Activation::kElu),
      target_(input_dim, config.target_hidden, config.output_dim, Activation::kElu),
      normalizer_(input_dim) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  predictor_.init(rng);
  target_.init(rng);
  optimizer_ = Adam<float>(predictor_.num_params(), config.learning_rate);
}

VecX<float> Rnd::reward(const MatX<float>& inputs) const {
  if (!inputs.allFinite()) throw std::invalid_argument("rnd: non-finite input");
  if (config_.reward_weight == 0.0) return VecX<float>::Zero(inputs.cols());
  const MatX<float> x = normalizer_.normalize(inputs);
  const MatX<float> diff = predictor_.forward(x) - target_.forward(x);
  return (diff.cwiseAbs().colwise().mean() * static_cast<float>(config_.reward_weight)).transpose();
}

double Rnd::update(const MatX<float>& inputs) {
  if (inputs.cols() == 0) throw std::invalid_argument("rnd: empty batch");
  if (!inputs.allFinite()) throw std::invalid_argument("rnd: non-finite input");
  const MatX<float> x = normalizer_.normalize(inputs);
  Mlp<float>::Cache cache;
  const MatX<float> pred = predictor_.forward(x, cache);
  const MatX<float> diff = pred - target_.forward(x);
  const double scale = config_.optimization_weight / static_cast<double>(diff.size());
  const double loss = static_cast<double>(diff.cwiseAbs().sum()) * scale;
  const MatX<float> d_out = diff.unaryExpr([](float v) {
    return v > 0.0f ? 1.0f : (v < 0.0f ? -1.0f : 0.0f);
  }) * static_cast<float>(scale);
  VecX<float> grad = VecX<float>::Zero(predictor_.num_params());
  predictor_.backward(cache, d_out, grad, false);
  optimizer_.step(predictor_.params(), grad);
  return loss;
}

std::uint64_t Rnd::target_checksum() const {
  std::uint64_t h = 1469598103934665603ULL;
  const auto* bytes = reinterpret_cast<const unsigned char*>(target_.params().data());
  for (Eigen::Index i = 0; i < target_.params().size() * static_cast<Eigen::Index>(sizeof(float)); ++i) {
    h = (h ^ bytes[i]) * 1099511628211ULL;
  }
  return h;
}

}  // namespace sparsestep
