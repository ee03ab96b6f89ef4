#include "sparsestep/trainer.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>

#include <json.hpp>

#include "sparsestep/config.hpp"
#include "sparsestep/symmetry.hpp"

namespace sparsestep {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string checkpoint_name(int iteration) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "ckpt_%06d.bin", iteration);
  return buf;
}

ProgressPoint progress_eval(const Policy& policy, const TrainConfig& c, bool velocity_mode,
                            int iteration) {
  PolicyAgent agent(policy, velocity_mode);
  EvalSpec spec;
  spec.terrain = c.terrain;
  spec.n_trials = c.progress.n_trials;
  spec.n_terrains = c.progress.n_terrains;
  spec.seed = c.progress.seed;
  spec.workers = c.workers;
  spec.sim = c.sim;
  ProgressPoint out{iteration, {}, {}};
  for (int level : c.progress.levels) {
    const LevelEval e = evaluate_level(agent, spec, level, c.progress.distance);
    out.success.push_back(e.success_rate);
    double advance = 0.0;
    for (const TrialRecord& t : e.trials) advance += t.max_advance;
    out.advance.push_back(advance / static_cast<double>(e.trials.size()));
  }
  return out;
}

}  // namespace

TrainResult train(const TrainConfig& c, const Policy* init, const IterationCallback& callback) {
  const auto t_start = std::chrono::steady_clock::now();
  TrainResult result;
  fs::create_directories(c.output_dir);
  {
    std::ofstream cfg(fs::path(c.output_dir) / "config.json");
    cfg << config_to_json(c) << '\n';
  }

  EnvConfig env_cfg;
  env_cfg.sim = c.sim;
  env_cfg.randomization = RandomizationConfig::for_task(c.terrain);
  env_cfg.profile = load_reward_profile(c.profile);
  env_cfg.velocity_commands = c.velocity_commands;
  env_cfg.workers = c.workers;
  env_cfg.clip_negative_rewards = c.clip_negative_rewards;
  const bool velocity_mode = env_cfg.profile.velocity_mode;

  const int max_level = std::clamp(c.curriculum.max_level, 0, kMaxLevel);
  auto pool = std::make_shared<const TerrainPool>(c.terrain, c.terrain_variants, c.seed, max_level);
  const Simulator sim(c.sim);
  std::vector<double> baselines;
  if (c.curriculum.rule == CurriculumRule::kRelaxed) {
    baselines = estimate_random_baselines(sim, *pool, env_cfg.randomization,
                                          c.curriculum.baseline_episodes, c.seed);
  }
  Curriculum curriculum(c.n_envs, c.curriculum, baselines, c.seed + 1);
  VecEnv env(c.n_envs, env_cfg, pool, &curriculum, c.seed + 2);

  const int obs_dim = env.obs_dim();
  Policy policy(obs_dim, kJointDim, c.policy, c.seed + 3);
  if (init) load_weights(*init, policy);
  Adam<float> optimizer(policy.net.num_params(), c.ppo.learning_rate);
  std::optional<Rnd> rnd;
  if (c.rnd.enabled) rnd.emplace(obs_dim + kJointDim, c.rnd, c.seed + 4);
  const SymmetryMap symmetry(env_cfg.pattern, velocity_mode);
  std::mt19937_64 ppo_rng(c.seed + 5);
  std::mt19937_64 action_rng(c.seed + 6);
  std::normal_distribution<float> normal(0.0f, 1.0f);

  const std::uint64_t hash = config_hash(c);
  CheckpointMeta meta;
  meta.stage = c.stage;
  meta.seed = c.seed;
  meta.config_hash = hash;
  meta.terrain = std::string(to_string(c.terrain));
  meta.profile = env_cfg.profile.name;
  meta.velocity_mode = velocity_mode;

  std::ofstream metrics(fs::path(c.output_dir) / "metrics.jsonl");
  std::ofstream timing(fs::path(c.output_dir) / "timing.jsonl");
  {
    json head = {{"event", "start"}, {"config_hash", hash}, {"baselines", baselines},
                 {"obs_dim", obs_dim}, {"params", policy.net.num_params()}};
    metrics << head.dump() << '\n';
  }

  const int T = c.steps_per_iter;
  const int N = c.n_envs;
  RolloutStorage store;
  MatX<float> rnd_inputs;
  VecX<float> advantages, returns;
  int it = 0;
  for (; it < c.total_iterations; ++it) {
    const auto t_iter = std::chrono::steady_clock::now();
    store.resize(obs_dim, kJointDim, T, N);
    if (rnd) rnd_inputs.resize(obs_dim + kJointDim, T * N);
    env.stats().clear();
    double curiosity_sum = 0.0;
    const VecX<float> std_dev = policy.net.std_dev();

    for (int t = 0; t < T; ++t) {
      const MatX<float>& obs = env.observations();
      const MatX<float> z = policy.normalize(obs);
      const MatX<float> mean = policy.net.actor.forward(z);
      const VecX<float> value = policy.net.value(z);
      MatX<float> u(kJointDim, N);
      for (int e = 0; e < N; ++e) {
        for (int k = 0; k < kJointDim; ++k) u(k, e) = mean(k, e) + std_dev[k] * normal(action_rng);
      }
      const VecX<float> logp = ActorCritic::log_prob(u, mean, policy.net.log_std);
      const int base = t * N;
      store.observations.middleCols(base, N) = obs;
      store.actions.middleCols(base, N) = u;
      store.means.middleCols(base, N) = mean;
      store.log_probs.segment(base, N) = logp;
      store.values.segment(base, N) = value;

      VecX<float> curiosity = VecX<float>::Zero(N);
      if (rnd) {
        MatX<float> x(obs_dim + kJointDim, N);
        x.topRows(obs_dim) = obs;
        x.bottomRows(kJointDim) = u;
        curiosity = rnd->reward(x) * static_cast<float>(c.sim.dt);
        rnd_inputs.middleCols(base, N) = x;
      }

      env.step(u, policy.config.action_scale, it);
      store.rewards.segment(base, N) = env.rewards() + curiosity;
      curiosity_sum += curiosity.cast<double>().sum();

      std::vector<int> timed_out;
      for (int e = 0; e < N; ++e) {
        store.dones[base + e] = env.dones()[e];
        if (env.dones()[e] && env.timeouts()[e]) timed_out.push_back(e);
      }
      if (!timed_out.empty()) {
        MatX<float> term(obs_dim, static_cast<int>(timed_out.size()));
        for (std::size_t k = 0; k < timed_out.size(); ++k) {
          term.col(k) = env.terminal_observations().col(timed_out[k]);
        }
        const VecX<float> tv = policy.net.value(policy.normalize(term));
        for (std::size_t k = 0; k < timed_out.size(); ++k) store.next_values[base + timed_out[k]] = tv[k];
      }
    }
    const VecX<float> last_values = policy.net.value(policy.normalize(env.observations()));
    compute_gae(store, last_values, c.ppo.gamma, c.ppo.lambda, advantages, returns);
    normalize_advantages(advantages);

    RolloutBatch batch;
    batch.observations = store.observations;
    batch.actions = store.actions;
    batch.old_mean = store.means;
    batch.old_std = std_dev.replicate(1, T * N);
    batch.old_log_prob = store.log_probs;
    batch.values = store.values;
    batch.advantages = advantages;
    batch.returns = returns;
    batch.original.assign(T * N, 1);
    if (c.symmetry) batch = augment(batch, symmetry);

    const PpoStats ppo = ppo_update(policy, optimizer, batch, c.ppo, ppo_rng);
    if (ppo.fault) ++result.faults;

    double rnd_loss = 0.0;
    if (rnd) {
      rnd->update_normalizer(rnd_inputs);
      std::vector<int> order(T * N);
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), ppo_rng);
      const int mbs = std::max(1, c.ppo.minibatches);
      const int size = T * N / mbs;
      for (int m = 0; m < mbs; ++m) {
        MatX<float> sub(rnd_inputs.rows(), size);
        for (int k = 0; k < size; ++k) sub.col(k) = rnd_inputs.col(order[m * size + k]);
        rnd_loss += rnd->update(sub) / mbs;
      }
    }
    if (c.freeze_normalizer_after <= 0 || it < c.freeze_normalizer_after) {
      policy.obs_norm.update(c.symmetry ? batch.observations : store.observations);
    }

    const EnvStats& st = env.stats();
    json line;
    line["iteration"] = it;
    line["reward_mean"] = st.reward_sum / std::max<long>(1, st.steps);
    json terms;
    for (int k = 0; k < kNumRewardTerms; ++k) {
      terms[std::string(reward_term_name(k))] = st.term_sums[k] / std::max<long>(1, st.steps);
    }
    line["terms"] = terms;
    line["curiosity_mean"] = curiosity_sum / (static_cast<double>(T) * N);
    line["rnd_loss"] = rnd_loss;
    const auto hist = curriculum.histogram();
    line["level_histogram"] = std::vector<int>(hist.begin(), hist.end());
    line["episodes"] = st.episodes;
    line["success_rate"] = st.episodes > 0 ? static_cast<double>(st.successes) / st.episodes : 0.0;
    line["failures"] = st.failures;
    line["sim_faults"] = st.faults;
    line["kl"] = ppo.kl;
    line["surrogate"] = ppo.surrogate;
    line["value_loss"] = ppo.value_loss;
    line["entropy"] = ppo.entropy;
    line["clip_fraction"] = ppo.clip_fraction;
    line["learning_rate"] = ppo.learning_rate;
    line["first_ratio_deviation"] = ppo.first_ratio_deviation;
    line["action_std"] = policy.net.std_dev().cast<double>().mean();
    if (ppo.fault) line["fault"] = ppo.fault_message;

    bool stop = false;
    const int done_iters = it + 1;
    if (c.progress.interval > 0 &&
        (done_iters % c.progress.interval == 0 || done_iters == c.total_iterations)) {
      const ProgressPoint pp = progress_eval(policy, c, velocity_mode, done_iters);
      line["progress"] = pp.success;
      line["progress_advance"] = pp.advance;
      result.progress.push_back(pp);
      if (!c.progress.thresholds.empty()) {
        stop = true;
        for (std::size_t k = 0; k < pp.success.size(); ++k) {
          stop = stop && pp.success[k] >= c.progress.thresholds[k];
        }
      }
    }
    const std::string text = line.dump();
    metrics << text << '\n';
    metrics.flush();
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_iter).count();
    timing << json{{"iteration", it}, {"seconds", secs}}.dump() << '\n';

    if (c.checkpoint_interval > 0 && done_iters % c.checkpoint_interval == 0) {
      meta.iteration = done_iters;
      save_checkpoint((fs::path(c.output_dir) / checkpoint_name(done_iters)).string(), policy, meta);
    }
    if (callback && !callback(it, text)) stop = true;
    if (stop) {
      result.early_stopped = true;
      ++it;
      break;
    }
  }
  result.iterations = it;
  meta.iteration = it;
  result.final_checkpoint = (fs::path(c.output_dir) / "final.bin").string();
  save_checkpoint(result.final_checkpoint, policy, meta);
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  {
    json summary = {{"iterations", result.iterations},
                    {"early_stopped", result.early_stopped},
                    {"wall_seconds", result.wall_seconds},
                    {"faults", result.faults},
                    {"final_checkpoint", result.final_checkpoint}};
    json prog = json::array();
    for (const ProgressPoint& p : result.progress) prog.push_back({{"iteration", p.iteration}, {"success", p.success}});
    summary["progress"] = prog;
    std::ofstream out(fs::path(c.output_dir) / "summary.json");
    out << summary.dump(2) << '\n';
  }
  return result;
}

TrainResult finetune(const std::string& checkpoint, const TrainConfig& config,
                     const IterationCallback& callback) {
  Policy src;
  CheckpointMeta meta;
  load_checkpoint(checkpoint, src, meta);
  TrainConfig c = config;
  c.stage = "finetune";
  if (meta.config_hash != config_hash(c)) {
    std::cerr << "warning: checkpoint config hash " << meta.config_hash
              << " differs from finetune config hash " << config_hash(c) << '\n';
  }
  c.policy.actor_hidden = {src.net.actor.sizes().begin() + 1, src.net.actor.sizes().end() - 1};
  c.policy.critic_hidden = {src.net.critic.sizes().begin() + 1, src.net.critic.sizes().end() - 1};
  c.policy.activation = src.net.actor.activation();
  c.policy.action_scale = src.config.action_scale;
  if (src.net.obs_dim() != ObsLayout{}.size()) {
    throw CheckpointError("load error: observation dimension of checkpoint does not match");
  }
  return train(c, &src, callback);
}

}  // namespace sparsestep
