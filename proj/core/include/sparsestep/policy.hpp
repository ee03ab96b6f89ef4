#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "sparsestep/nn.hpp"
#include "sparsestep/normalizer.hpp"
#include "sparsestep/robot.hpp"

namespace sparsestep {

struct PolicyConfig {
  std::vector<int> actor_hidden{512, 256, 128};
  std::vector<int> critic_hidden{512, 256, 128};
  Activation activation = Activation::kElu;
  double init_std = 1.0;
  // Target joint coordinates are action_scale * u for a policy sample u.
  Eigen::Vector3d action_scale{0.25, 0.25, 0.25};
  double actor_output_gain = 0.01;
};

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;

/// Gaussian actor with state-independent log-std plus a value critic.
/// Parameters pack as [actor | log_std | critic].
template <typename Scalar>
struct ActorCriticT {
  Mlp<Scalar> actor;
  Mlp<Scalar> critic;
  VecX<Scalar> log_std;

  ActorCriticT() = default;
  ActorCriticT(int obs_dim, int act_dim, const std::vector<int>& actor_hidden,
               const std::vector<int>& critic_hidden, Activation act, double init_std)
      : actor(obs_dim, actor_hidden, act_dim, act),
        critic(obs_dim, critic_hidden, 1, act),
        log_std(VecX<Scalar>::Constant(act_dim, static_cast<Scalar>(std::log(init_std)))) {}

  int obs_dim() const { return actor.input_dim(); }
  int act_dim() const { return actor.output_dim(); }
  int num_params() const {
    return actor.num_params() + static_cast<int>(log_std.size()) + critic.num_params();
  }

  void init(std::mt19937_64& rng, Scalar actor_gain) {
    actor.init(rng, actor_gain);
    critic.init(rng, Scalar(1));
  }

  VecX<Scalar> pack() const {
    VecX<Scalar> p(num_params());
    p << actor.params(), log_std, critic.params();
    return p;
  }
  void unpack(const VecX<Scalar>& p) {
    const int na = actor.num_params(), ns = static_cast<int>(log_std.size());
    actor.params() = p.segment(0, na);
    log_std = p.segment(na, ns);
    critic.params() = p.segment(na + ns, critic.num_params());
  }

  VecX<Scalar> std_dev() const { return log_std.array().exp().matrix(); }
  VecX<Scalar> value(const MatX<Scalar>& obs) const { return critic.forward(obs).row(0).transpose(); }

  /// Sum over action dims of log N(u | mean, exp(log_std)); one entry per column.
  static VecX<Scalar> log_prob(const MatX<Scalar>& u, const MatX<Scalar>& mean,
                               const VecX<Scalar>& log_std) {
    const VecX<Scalar> inv = (-log_std.array()).exp().matrix();
    const MatX<Scalar> z = ((u - mean).array().colwise() * inv.array()).matrix();
    const Scalar norm = log_std.sum() + static_cast<Scalar>(kLogSqrt2Pi) * log_std.size();
    return (Scalar(-0.5) * z.array().square().colwise().sum() - norm).transpose();
  }

  Scalar entropy() const {
    return log_std.sum() + static_cast<Scalar>(0.5 + kLogSqrt2Pi) * static_cast<Scalar>(log_std.size());
  }

  bool finite() const {
    return actor.params().allFinite() && critic.params().allFinite() && log_std.allFinite();
  }
};

using ActorCritic = ActorCriticT<float>;

/// Network plus its observation normalizer and action scaling.
struct Policy {
  PolicyConfig config;
  ActorCritic net;
  RunningNormalizer obs_norm;

  Policy() = default;
  Policy(int obs_dim, int act_dim, const PolicyConfig& cfg, std::uint64_t seed)
      : config(cfg),
        net(obs_dim, act_dim, cfg.actor_hidden, cfg.critic_hidden, cfg.activation, cfg.init_std),
        obs_norm(obs_dim) {
    std::mt19937_64 rng(seed);
    net.init(rng, static_cast<float>(cfg.actor_output_gain));
  }

  MatX<float> normalize(const MatX<float>& obs) const { return obs_norm.normalize(obs); }
  MatX<float> mean_action(const MatX<float>& obs) const { return net.actor.forward(normalize(obs)); }

  /// Joint-coordinate targets for policy samples u (act_dim x n).
  Vec12 to_target(const float* u) const {
    Vec12 a;
    for (int i = 0; i < kJointDim; ++i) a[i] = config.action_scale[i % 3] * static_cast<double>(u[i]);
    return a;
  }
};

}  // namespace sparsestep
