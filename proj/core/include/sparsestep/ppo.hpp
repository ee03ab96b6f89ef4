#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "sparsestep/policy.hpp"
#include "sparsestep/rollout.hpp"

namespace sparsestep {

struct PpoConfig {
  double gamma = 0.99;
  double lambda = 0.95;
  double clip_ratio = 0.2;
  double entropy_coef = 0.005;
  double value_coef = 1.0;
  int epochs = 5;
  int minibatches = 4;
  double learning_rate = 1e-3;
  bool adaptive_lr = true;
  double kl_target = 0.01;
  double lr_min = 1e-5;
  double lr_max = 1e-2;
  double max_grad_norm = 1.0;
};

/// Rollout storage laid out step-major: entry t * n_envs + e.
struct RolloutStorage {
  int steps = 0;
  int n_envs = 0;
  MatX<float> observations;
  MatX<float> actions;
  MatX<float> means;
  VecX<float> log_probs;
  VecX<float> values;
  VecX<float> rewards;
  std::vector<std::uint8_t> dones;  // episode ended after this step
  VecX<float> next_values;          // used where dones[i]; V(terminal) on timeout, 0 on failure

  void resize(int obs_dim, int act_dim, int steps, int n_envs);
  int size() const { return steps * n_envs; }
};

/// Recursive generalized advantages. `last_values` bootstraps the step after the horizon.
void compute_gae(const RolloutStorage& s, const VecX<float>& last_values, double gamma,
                 double lambda, VecX<float>& advantages, VecX<float>& returns);

/// In place (x - mean) / (std + 1e-8).
void normalize_advantages(VecX<float>& adv);

template <typename Scalar>
struct PpoLoss {
  Scalar total = 0;
  Scalar surrogate = 0;
  Scalar value = 0;
  Scalar entropy = 0;
  Scalar kl = 0;
  Scalar clip_fraction = 0;
  Scalar max_ratio_deviation = 0;  // max |ratio - 1| over original samples
};

/// Clipped-surrogate + value + entropy loss on a minibatch whose observations are already
/// normalized. Adds dLoss/dparams (packed layout) to `grad` when non-null. When `original` is
/// given, KL and the ratio deviation cover only samples flagged non-zero.
template <typename Scalar>
PpoLoss<Scalar> ppo_loss(const ActorCriticT<Scalar>& net, const MatX<Scalar>& obs,
                         const MatX<Scalar>& actions, const MatX<Scalar>& old_mean,
                         const MatX<Scalar>& old_std, const VecX<Scalar>& old_log_prob,
                         const VecX<Scalar>& advantages, const VecX<Scalar>& returns,
                         const PpoConfig& cfg, VecX<Scalar>* grad,
                         const std::vector<std::uint8_t>* original = nullptr) {
  using M = MatX<Scalar>;
  using V = VecX<Scalar>;
  const Eigen::Index n = obs.cols();
  const Scalar inv_n = Scalar(1) / static_cast<Scalar>(n);
  PpoLoss<Scalar> out;

  typename Mlp<Scalar>::Cache actor_cache, critic_cache;
  const M mean = net.actor.forward(obs, actor_cache);
  const M value = net.critic.forward(obs, critic_cache);
  const V logp = ActorCriticT<Scalar>::log_prob(actions, mean, net.log_std);
  const V ratio = (logp - old_log_prob).array().exp().matrix();
  const Scalar lo = static_cast<Scalar>(1.0 - cfg.clip_ratio);
  const Scalar hi = static_cast<Scalar>(1.0 + cfg.clip_ratio);

  // dLoss/dlogp per sample.
  V d_logp(n);
  Scalar surrogate = 0, clipped = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar a = advantages[i];
    const Scalar r = ratio[i];
    const Scalar rc = std::clamp(r, lo, hi);
    const bool unclipped = r * a <= rc * a;
    surrogate += -std::min(r * a, rc * a);
    d_logp[i] = unclipped ? -a * r * inv_n : Scalar(0);
    if (r < lo || r > hi) clipped += 1;
    if (!original || original->empty() || (*original)[i]) {
      out.max_ratio_deviation = std::max(out.max_ratio_deviation, std::abs(r - Scalar(1)));
    }
  }
  out.surrogate = surrogate * inv_n;
  out.clip_fraction = clipped * inv_n;

  const V verr = value.row(0).transpose() - returns;
  out.value = verr.squaredNorm() * inv_n;
  out.entropy = net.entropy();
  out.total = out.surrogate + static_cast<Scalar>(cfg.value_coef) * out.value -
              static_cast<Scalar>(cfg.entropy_coef) * out.entropy;

  // KL(old || new) for diagonal Gaussians, averaged over the batch.
  const V std_new = net.std_dev();
  Scalar kl = 0;
  Eigen::Index kl_n = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (original && !original->empty() && !(*original)[i]) continue;
    ++kl_n;
    for (Eigen::Index k = 0; k < mean.rows(); ++k) {
      const Scalar so = old_std(k, i), sn = std_new[k];
      const Scalar dm = old_mean(k, i) - mean(k, i);
      kl += std::log(sn / so) + (so * so + dm * dm) / (Scalar(2) * sn * sn) - Scalar(0.5);
    }
  }
  out.kl = kl_n > 0 ? kl / static_cast<Scalar>(kl_n) : Scalar(0);

  if (grad) {
    if (grad->size() != net.num_params()) *grad = V::Zero(net.num_params());
    const V inv_var = (Scalar(-2) * net.log_std.array()).exp().matrix();
    const M diff = actions - mean;
    // d logp / d mean = (u - mean) / var, d logp / d log_std = z^2 - 1.
    M d_mean = (diff.array().colwise() * inv_var.array()).matrix();
    d_mean = (d_mean.array().rowwise() * d_logp.transpose().array()).matrix();
    const M z2 = (diff.array().square().colwise() * inv_var.array()).matrix();
    V d_log_std = ((z2.array() - Scalar(1)).rowwise() * d_logp.transpose().array()).rowwise().sum();
    d_log_std.array() -= static_cast<Scalar>(cfg.entropy_coef);

    const int na = net.actor.num_params();
    const int ns = static_cast<int>(net.log_std.size());
    V g_actor = V::Zero(na);
    net.actor.backward(actor_cache, d_mean, g_actor, false);
    V g_critic = V::Zero(net.critic.num_params());
    const M d_value = (Scalar(2) * static_cast<Scalar>(cfg.value_coef) * inv_n) * verr.transpose();
    net.critic.backward(critic_cache, d_value, g_critic, false);
    grad->segment(0, na) += g_actor;
    grad->segment(na, ns) += d_log_std;
    grad->segment(na + ns, net.critic.num_params()) += g_critic;
  }
  return out;
}

struct PpoStats {
  double surrogate = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double kl = 0.0;
  double clip_fraction = 0.0;
  double learning_rate = 0.0;
  double first_ratio_deviation = 0.0;  // epoch 0, minibatch 0
  int updates = 0;
  bool fault = false;
  std::string fault_message;
};

/// Epochs of shuffled minibatch steps. Observations in `batch` are raw; they are normalized with
/// the policy's current statistics. A non-finite loss restores the parameters from before the call.
PpoStats ppo_update(Policy& policy, Adam<float>& optimizer, const RolloutBatch& batch,
                    const PpoConfig& cfg, std::mt19937_64& rng);

}  // namespace sparsestep
