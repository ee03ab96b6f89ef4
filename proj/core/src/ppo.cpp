#include "sparsestep/ppo.hpp"

#include <numeric>
#include <stdexcept>

namespace sparsestep {

void RolloutStorage::resize(int obs_dim, int act_dim, int steps_, int n_envs_) {
  steps = steps_;
  n_envs = n_envs_;
  const int n = steps * n_envs;
  observations.resize(obs_dim, n);
  actions.resize(act_dim, n);
  means.resize(act_dim, n);
  log_probs.resize(n);
  values.resize(n);
  rewards.resize(n);
  dones.assign(n, 0);
  next_values = VecX<float>::Zero(n);
}

void compute_gae(const RolloutStorage& s, const VecX<float>& last_values, double gamma,
                 double lambda, VecX<float>& advantages, VecX<float>& returns) {
  if (last_values.size() != s.n_envs) throw std::invalid_argument("gae: last_values size");
  advantages.resize(s.size());
  returns.resize(s.size());
  for (int e = 0; e < s.n_envs; ++e) {
    double gae = 0.0;
    for (int t = s.steps - 1; t >= 0; --t) {
      const int i = t * s.n_envs + e;
      double next_value;
      double carry;
      if (s.dones[i]) {
        next_value = s.next_values[i];
        carry = 0.0;
      } else {
        next_value = t + 1 < s.steps ? s.values[i + s.n_envs] : last_values[e];
        carry = 1.0;
      }
      const double delta = s.rewards[i] + gamma * next_value - s.values[i];
      gae = delta + gamma * lambda * carry * gae;
      advantages[i] = static_cast<float>(gae);
      returns[i] = static_cast<float>(gae + s.values[i]);
    }
  }
}

void normalize_advantages(VecX<float>& adv) {
  if (adv.size() < 2) return;
  const double mean = adv.cast<double>().mean();
  const double var = (adv.cast<double>().array() - mean).square().mean();
  adv = ((adv.cast<double>().array() - mean) / (std::sqrt(var) + 1e-8)).cast<float>().matrix();
}

PpoStats ppo_update(Policy& policy, Adam<float>& optimizer, const RolloutBatch& batch,
                    const PpoConfig& cfg, std::mt19937_64& rng) {
  PpoStats stats;
  const int n = batch.size();
  if (n == 0) throw std::invalid_argument("ppo: empty batch");
  const int mb_count = std::max(1, std::min(cfg.minibatches, n));
  const int mb_size = n / mb_count;
  const VecX<float> backup = policy.net.pack();
  const MatX<float> obs = policy.normalize(batch.observations);

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  VecX<float> params = backup;
  VecX<float> grad;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (int mb = 0; mb < mb_count; ++mb) {
      const std::vector<int> idx(order.begin() + mb * mb_size, order.begin() + (mb + 1) * mb_size);
      const RolloutBatch sub = batch.select(idx);
      MatX<float> sub_obs(obs.rows(), mb_size);
      for (int k = 0; k < mb_size; ++k) sub_obs.col(k) = obs.col(idx[k]);
      grad = VecX<float>::Zero(params.size());
      const PpoLoss<float> loss =
          ppo_loss<float>(policy.net, sub_obs, sub.actions, sub.old_mean, sub.old_std,
                          sub.old_log_prob, sub.advantages, sub.returns, cfg, &grad,
                          &sub.original);
      if (!std::isfinite(loss.total) || !grad.allFinite()) {
        policy.net.unpack(backup);
        stats.fault = true;
        stats.fault_message = "non-finite loss at epoch " + std::to_string(epoch);
        return stats;
      }
      if (epoch == 0 && mb == 0) stats.first_ratio_deviation = loss.max_ratio_deviation;
      if (cfg.adaptive_lr) {
        if (loss.kl > 2.0 * cfg.kl_target) {
          optimizer.lr = std::max(cfg.lr_min, optimizer.lr / 1.5);
        } else if (loss.kl < 0.5 * cfg.kl_target && loss.kl > 0.0) {
          optimizer.lr = std::min(cfg.lr_max, optimizer.lr * 1.5);
        }
      }
      optimizer.step(params, grad, cfg.max_grad_norm);
      policy.net.unpack(params);
      stats.surrogate += loss.surrogate;
      stats.value_loss += loss.value;
      stats.entropy += loss.entropy;
      stats.kl += loss.kl;
      stats.clip_fraction += loss.clip_fraction;
      ++stats.updates;
    }
  }
  if (!policy.net.finite()) {
    policy.net.unpack(backup);
    stats.fault = true;
    stats.fault_message = "non-finite parameters after update";
    return stats;
  }
  const double u = stats.updates;
  stats.surrogate /= u;
  stats.value_loss /= u;
  stats.entropy /= u;
  stats.kl /= u;
  stats.clip_fraction /= u;
  stats.learning_rate = optimizer.lr;
  return stats;
}

}  // namespace sparsestep
