#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

namespace sparsestep {

enum class Activation : std::uint8_t { kElu = 0, kRelu = 1, kTanh = 2 };

template <typename Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Fully connected network over column batches (features x batch) with all
/// weights and biases stored in one flat parameter vector.
template <typename Scalar>
class Mlp {
 public:
  struct Cache {
    std::vector<MatX<Scalar>> pre;   // per layer, before activation
    std::vector<MatX<Scalar>> post;  // post[0] is the input
  };

  Mlp() = default;
  Mlp(int input_dim, std::vector<int> hidden, int output_dim, Activation act = Activation::kElu)
      : act_(act) {
    sizes_.push_back(input_dim);
    for (int h : hidden) sizes_.push_back(h);
    sizes_.push_back(output_dim);
    for (int s : sizes_) {
      if (s <= 0) throw std::invalid_argument("layer sizes must be positive");
    }
    int offset = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      w_offset_.push_back(offset);
      offset += sizes_[l] * sizes_[l + 1];
      b_offset_.push_back(offset);
      offset += sizes_[l + 1];
    }
    params_ = VecX<Scalar>::Zero(offset);
  }

  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  int num_layers() const { return static_cast<int>(sizes_.size()) - 1; }
  int num_params() const { return static_cast<int>(params_.size()); }
  const std::vector<int>& sizes() const { return sizes_; }
  Activation activation() const { return act_; }

  VecX<Scalar>& params() { return params_; }
  const VecX<Scalar>& params() const { return params_; }

  /// Uniform(-k, k) with k = 1/sqrt(fan_in), biases zero; last layer scaled by `output_gain`.
  void init(std::mt19937_64& rng, Scalar output_gain = Scalar(1)) {
    for (int l = 0; l < num_layers(); ++l) {
      const double k = 1.0 / std::sqrt(static_cast<double>(sizes_[l]));
      const double gain = l + 1 == num_layers() ? static_cast<double>(output_gain) : 1.0;
      auto w = weight(l);
      for (Eigen::Index i = 0; i < w.size(); ++i) {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        w.data()[i] = static_cast<Scalar>(gain * k * (2.0 * u - 1.0));
      }
      bias(l).setZero();
    }
  }

  Eigen::Map<MatX<Scalar>> weight(int l) {
    return {params_.data() + w_offset_[l], sizes_[l + 1], sizes_[l]};
  }
  Eigen::Map<const MatX<Scalar>> weight(int l) const {
    return {params_.data() + w_offset_[l], sizes_[l + 1], sizes_[l]};
  }
  Eigen::Map<VecX<Scalar>> bias(int l) { return {params_.data() + b_offset_[l], sizes_[l + 1]}; }
  Eigen::Map<const VecX<Scalar>> bias(int l) const {
    return {params_.data() + b_offset_[l], sizes_[l + 1]};
  }

  MatX<Scalar> forward(const MatX<Scalar>& x) const {
    MatX<Scalar> a = x;
    for (int l = 0; l < num_layers(); ++l) {
      MatX<Scalar> z;
      z.noalias() = weight(l) * a;
      z.colwise() += bias(l);
      if (l + 1 < num_layers()) activate(z);
      a = std::move(z);
    }
    return a;
  }

  MatX<Scalar> forward(const MatX<Scalar>& x, Cache& cache) const {
    cache.pre.resize(num_layers());
    cache.post.resize(num_layers() + 1);
    cache.post[0] = x;
    for (int l = 0; l < num_layers(); ++l) {
      cache.pre[l].noalias() = weight(l) * cache.post[l];
      cache.pre[l].colwise() += bias(l);
      cache.post[l + 1] = cache.pre[l];
      if (l + 1 < num_layers()) activate(cache.post[l + 1]);
    }
    return cache.post.back();
  }

  /// Adds dLoss/dparams to `grad` given dLoss/doutput; returns dLoss/dinput, or an empty
  /// matrix when `input_grad` is false.
  MatX<Scalar> backward(const Cache& cache, const MatX<Scalar>& d_out, VecX<Scalar>& grad,
                        bool input_grad = true) const {
    if (grad.size() != params_.size()) grad = VecX<Scalar>::Zero(params_.size());
    MatX<Scalar> dz = d_out;
    for (int l = num_layers() - 1; l >= 0; --l) {
      Eigen::Map<MatX<Scalar>> gw(grad.data() + w_offset_[l], sizes_[l + 1], sizes_[l]);
      Eigen::Map<VecX<Scalar>> gb(grad.data() + b_offset_[l], sizes_[l + 1]);
      gw.noalias() += dz * cache.post[l].transpose();
      gb += dz.rowwise().sum();
      if (l == 0 && !input_grad) return {};
      MatX<Scalar> da;
      da.noalias() = weight(l).transpose() * dz;
      if (l > 0) activate_grad(cache.pre[l - 1], cache.post[l], da);
      dz = std::move(da);
    }
    return dz;
  }

 private:
  void activate(MatX<Scalar>& z) const {
    switch (act_) {
      case Activation::kElu:
        // Branch-free so Eigen vectorizes the exponential.
        z = (z.array().max(Scalar(0)) + z.array().min(Scalar(0)).exp() - Scalar(1)).matrix();
        break;
      case Activation::kRelu:
        z = z.cwiseMax(Scalar(0));
        break;
      case Activation::kTanh:
        z = z.array().tanh().matrix();
        break;
    }
  }

  void activate_grad(const MatX<Scalar>& pre, const MatX<Scalar>& post, MatX<Scalar>& d) const {
    switch (act_) {
      case Activation::kElu:
        // 1 for positive inputs, exp(pre) = post + 1 otherwise.
        d.array() *= (post.array() + Scalar(1)).min(Scalar(1));
        break;
      case Activation::kRelu:
        d.array() *= (pre.array() > Scalar(0)).template cast<Scalar>();
        break;
      case Activation::kTanh:
        d.array() *= Scalar(1) - post.array().square();
        break;
    }
  }

  std::vector<int> sizes_;
  std::vector<int> w_offset_;
  std::vector<int> b_offset_;
  VecX<Scalar> params_;
  Activation act_ = Activation::kElu;
};

/// Adam over a flat parameter vector with optional global-norm clipping.
template <typename Scalar>
class Adam {
 public:
  Adam() = default;
  explicit Adam(int n, double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr(lr), beta1_(beta1), beta2_(beta2), eps_(eps),
        m_(VecX<Scalar>::Zero(n)), v_(VecX<Scalar>::Zero(n)) {}

  void reset() {
    m_.setZero();
    v_.setZero();
    t_ = 0;
  }

  /// Clips `grad` in place to `max_norm` (if positive) and applies one step.
  void step(VecX<Scalar>& params, VecX<Scalar>& grad, double max_norm = 0.0) {
    if (params.size() != m_.size() || grad.size() != m_.size()) {
      throw std::invalid_argument("adam: size mismatch");
    }
    if (max_norm > 0.0) {
      const double norm = static_cast<double>(grad.norm());
      if (norm > max_norm) grad *= static_cast<Scalar>(max_norm / (norm + 1e-6));
    }
    ++t_;
    const Scalar b1 = static_cast<Scalar>(beta1_), b2 = static_cast<Scalar>(beta2_);
    m_ = b1 * m_ + (Scalar(1) - b1) * grad;
    v_ = b2 * v_ + (Scalar(1) - b2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    const Scalar step = static_cast<Scalar>(lr * std::sqrt(c2) / c1);
    params.array() -= step * m_.array() /
                      (v_.array().sqrt() + static_cast<Scalar>(eps_ * std::sqrt(c2)));
  }

  long steps() const { return t_; }

  double lr = 1e-3;

 private:
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  VecX<Scalar> m_, v_;
  long t_ = 0;
};

}  // namespace sparsestep
