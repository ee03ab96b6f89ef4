#include "sparsestep/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "json_reader.hpp"

namespace sparsestep {

namespace {

using nlohmann::json;
using detail::JsonReader;

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::kElu: return "elu";
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
  }
  return "elu";
}

Activation activation_from(const std::string& s) {
  if (s == "elu") return Activation::kElu;
  if (s == "relu") return Activation::kRelu;
  if (s == "tanh") return Activation::kTanh;
  throw std::invalid_argument("unknown activation: " + s);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <typename Fill>
void section(JsonReader& top, const char* key, Fill&& fill) {
  if (const json* obj = top.child(key)) {
    JsonReader r(*obj, top.where() + "." + key);
    fill(r);
    r.finish();
  }
}

json sim_to_json(const SimConfig& m) {
  return {{"dt", m.dt},
          {"substeps", m.substeps},
          {"base_mass", m.base_mass},
          {"foot_mass", m.foot_mass},
          {"kp", m.kp},
          {"kd", m.kd},
          {"torque_limit", m.torque_limit},
          {"joint_velocity_limit", m.joint_velocity_limit},
          {"friction", m.friction}};
}

void read_sim(JsonReader& r, SimConfig& m) {
  r.get("dt", m.dt);
  r.get("substeps", m.substeps);
  r.get("base_mass", m.base_mass);
  r.get("foot_mass", m.foot_mass);
  r.get("kp", m.kp);
  r.get("kd", m.kd);
  r.get("torque_limit", m.torque_limit);
  r.get("joint_velocity_limit", m.joint_velocity_limit);
  r.get("friction", m.friction);
}

json to_json_full(const TrainConfig& c) {
  json j;
  j["name"] = c.name;
  j["stage"] = c.stage;
  j["terrain"] = std::string(to_string(c.terrain));
  j["terrain_variants"] = c.terrain_variants;
  j["profile"] = c.profile;
  j["n_envs"] = c.n_envs;
  j["steps_per_iter"] = c.steps_per_iter;
  j["total_iterations"] = c.total_iterations;
  j["seed"] = c.seed;
  j["symmetry"] = {{"enabled", c.symmetry}};
  const PpoConfig& p = c.ppo;
  j["ppo"] = {{"gamma", p.gamma},
              {"lambda", p.lambda},
              {"clip_ratio", p.clip_ratio},
              {"entropy_coef", p.entropy_coef},
              {"value_coef", p.value_coef},
              {"epochs", p.epochs},
              {"minibatches", p.minibatches},
              {"learning_rate", p.learning_rate},
              {"adaptive_lr", p.adaptive_lr},
              {"kl_target", p.kl_target},
              {"lr_min", p.lr_min},
              {"lr_max", p.lr_max},
              {"max_grad_norm", p.max_grad_norm}};
  const PolicyConfig& q = c.policy;
  j["policy"] = {{"actor_hidden", q.actor_hidden},
                 {"critic_hidden", q.critic_hidden},
                 {"activation", activation_name(q.activation)},
                 {"init_std", q.init_std},
                 {"action_scale", {q.action_scale.x(), q.action_scale.y(), q.action_scale.z()}},
                 {"actor_output_gain", q.actor_output_gain}};
  const RndConfig& r = c.rnd;
  j["rnd"] = {{"enabled", r.enabled},
              {"output_dim", r.output_dim},
              {"predictor_hidden", r.predictor_hidden},
              {"target_hidden", r.target_hidden},
              {"reward_weight", r.reward_weight},
              {"optimization_weight", r.optimization_weight},
              {"learning_rate", r.learning_rate}};
  const CurriculumConfig& u = c.curriculum;
  j["curriculum"] = {{"rule", std::string(curriculum_rule_name(u.rule))},
                     {"promote_radius", u.promote_radius},
                     {"max_level", u.max_level},
                     {"max_level_reshuffle", u.max_level_reshuffle},
                     {"initial_level", u.initial_level},
                     {"baseline_episodes", u.baseline_episodes},
                     {"velocity_promote_fraction", u.velocity_promote_fraction},
                     {"velocity_demote_fraction", u.velocity_demote_fraction}};
  const VelocityCommandRange& v = c.velocity_commands;
  j["velocity_commands"] = {{"vx", {v.vx.first, v.vx.second}},
                            {"vy", {v.vy.first, v.vy.second}},
                            {"yaw_rate", {v.yaw_rate.first, v.yaw_rate.second}}};
  const ProgressEval& e = c.progress;
  j["progress"] = {{"interval", e.interval},   {"levels", e.levels},
                   {"thresholds", e.thresholds}, {"distance", e.distance},
                   {"n_trials", e.n_trials},   {"n_terrains", e.n_terrains},
                   {"seed", e.seed}};
  j["sim"] = sim_to_json(c.sim);
  j["checkpoint_interval"] = c.checkpoint_interval;
  j["freeze_normalizer_after"] = c.freeze_normalizer_after;
  j["clip_negative_rewards"] = c.clip_negative_rewards;
  return j;
}

void read_range(JsonReader& r, const char* key, std::pair<double, double>& out) {
  std::vector<double> v;
  r.get(key, v);
  if (v.empty()) return;
  if (v.size() != 2) throw std::invalid_argument(std::string(key) + ": expected [lo, hi]");
  out = {v[0], v[1]};
}

}  // namespace

std::string config_to_json(const TrainConfig& c) { return to_json_full(c).dump(2); }

TrainConfig config_from_json(const std::string& text) {
  const json j = json::parse(text);
  TrainConfig c;
  JsonReader top(j, "config");
  top.get("name", c.name);
  top.get("stage", c.stage);
  std::string terrain;
  top.get("terrain", terrain);
  if (!terrain.empty()) c.terrain = terrain_type_from_string(terrain);
  top.get("terrain_variants", c.terrain_variants);
  top.get("profile", c.profile);
  top.get("n_envs", c.n_envs);
  top.get("steps_per_iter", c.steps_per_iter);
  top.get("total_iterations", c.total_iterations);
  top.get("seed", c.seed);
  top.get("workers", c.workers);
  top.get("checkpoint_interval", c.checkpoint_interval);
  top.get("output_dir", c.output_dir);
  top.get("freeze_normalizer_after", c.freeze_normalizer_after);
  top.get("clip_negative_rewards", c.clip_negative_rewards);
  section(top, "symmetry", [&](JsonReader& r) { r.get("enabled", c.symmetry); });
  section(top, "sim", [&](JsonReader& r) { read_sim(r, c.sim); });
  section(top, "ppo", [&](JsonReader& r) {
    PpoConfig& p = c.ppo;
    r.get("gamma", p.gamma);
    r.get("lambda", p.lambda);
    r.get("clip_ratio", p.clip_ratio);
    r.get("entropy_coef", p.entropy_coef);
    r.get("value_coef", p.value_coef);
    r.get("epochs", p.epochs);
    r.get("minibatches", p.minibatches);
    r.get("learning_rate", p.learning_rate);
    r.get("adaptive_lr", p.adaptive_lr);
    r.get("kl_target", p.kl_target);
    r.get("lr_min", p.lr_min);
    r.get("lr_max", p.lr_max);
    r.get("max_grad_norm", p.max_grad_norm);
  });
  section(top, "policy", [&](JsonReader& r) {
    PolicyConfig& q = c.policy;
    r.get("actor_hidden", q.actor_hidden);
    r.get("critic_hidden", q.critic_hidden);
    std::string act;
    r.get("activation", act);
    if (!act.empty()) q.activation = activation_from(act);
    r.get("init_std", q.init_std);
    std::vector<double> scale;
    r.get("action_scale", scale);
    if (!scale.empty()) {
      if (scale.size() != 3) throw std::invalid_argument("policy.action_scale: expected 3 values");
      q.action_scale = {scale[0], scale[1], scale[2]};
    }
    r.get("actor_output_gain", q.actor_output_gain);
  });
  section(top, "rnd", [&](JsonReader& r) {
    RndConfig& d = c.rnd;
    r.get("enabled", d.enabled);
    r.get("output_dim", d.output_dim);
    r.get("predictor_hidden", d.predictor_hidden);
    r.get("target_hidden", d.target_hidden);
    r.get("reward_weight", d.reward_weight);
    r.get("optimization_weight", d.optimization_weight);
    r.get("learning_rate", d.learning_rate);
  });
  section(top, "curriculum", [&](JsonReader& r) {
    CurriculumConfig& u = c.curriculum;
    std::string rule;
    r.get("rule", rule);
    if (!rule.empty()) u.rule = curriculum_rule_from_string(rule);
    r.get("promote_radius", u.promote_radius);
    r.get("max_level", u.max_level);
    r.get("max_level_reshuffle", u.max_level_reshuffle);
    r.get("initial_level", u.initial_level);
    r.get("baseline_episodes", u.baseline_episodes);
    r.get("velocity_promote_fraction", u.velocity_promote_fraction);
    r.get("velocity_demote_fraction", u.velocity_demote_fraction);
  });
  section(top, "velocity_commands", [&](JsonReader& r) {
    read_range(r, "vx", c.velocity_commands.vx);
    read_range(r, "vy", c.velocity_commands.vy);
    read_range(r, "yaw_rate", c.velocity_commands.yaw_rate);
  });
  section(top, "progress", [&](JsonReader& r) {
    ProgressEval& e = c.progress;
    r.get("interval", e.interval);
    r.get("levels", e.levels);
    r.get("thresholds", e.thresholds);
    r.get("distance", e.distance);
    r.get("n_trials", e.n_trials);
    r.get("n_terrains", e.n_terrains);
    r.get("seed", e.seed);
  });
  top.finish();
  if (c.stage != "generalist" && c.stage != "finetune") {
    throw std::invalid_argument("config.stage must be generalist or finetune");
  }
  if (c.n_envs <= 0 || c.steps_per_iter <= 0 || c.total_iterations < 0) {
    throw std::invalid_argument("config: n_envs and steps_per_iter must be positive");
  }
  if (!c.progress.thresholds.empty() && c.progress.thresholds.size() != c.progress.levels.size()) {
    throw std::invalid_argument("config.progress: one threshold per level");
  }
  return c;
}

TrainConfig load_config(const std::string& path) { return config_from_json(read_file(path)); }

void apply_env_overrides(TrainConfig& c) {
  if (const char* s = std::getenv("SPARSESTEP_SEED"); s && *s) c.seed = std::stoull(s);
  if (const char* w = std::getenv("SPARSESTEP_WORKERS"); w && *w) c.workers = std::max(1, std::stoi(w));
}

std::uint64_t config_hash(const TrainConfig& c) {
  const std::string text = to_json_full(c).dump();
  return fnv1a(reinterpret_cast<const std::uint8_t*>(text.data()), text.size());
}

std::string eval_spec_to_json(const EvalSpec& s) {
  json j = {{"terrain", std::string(to_string(s.terrain))},
            {"levels", s.levels},
            {"traverse_distance", s.traverse_distance},
            {"n_trials", s.n_trials},
            {"n_terrains", s.n_terrains},
            {"success_threshold", s.success_threshold},
            {"seed", s.seed},
            {"target_margin", s.target_margin},
            {"min_episode_length", s.min_episode_length},
            {"velocity_command", s.velocity_command},
            {"sim", sim_to_json(s.sim)}};
  return j.dump(2);
}

EvalSpec eval_spec_from_json(const std::string& text) {
  const json j = json::parse(text);
  EvalSpec s;
  JsonReader r(j, "eval");
  std::string terrain;
  r.get("terrain", terrain);
  if (!terrain.empty()) s.terrain = terrain_type_from_string(terrain);
  r.get("levels", s.levels);
  r.get("traverse_distance", s.traverse_distance);
  r.get("n_trials", s.n_trials);
  r.get("n_terrains", s.n_terrains);
  r.get("success_threshold", s.success_threshold);
  r.get("seed", s.seed);
  r.get("workers", s.workers);
  r.get("target_margin", s.target_margin);
  r.get("min_episode_length", s.min_episode_length);
  r.get("velocity_command", s.velocity_command);
  r.get("dump_traj", s.dump_traj);
  section(r, "sim", [&](JsonReader& sr) { read_sim(sr, s.sim); });
  r.finish();
  s.validate();
  return s;
}

EvalSpec load_eval_spec(const std::string& path) { return eval_spec_from_json(read_file(path)); }

void apply_ablation(TrainConfig& c, std::string_view setting) {
  if (setting == "proposed") {
    c.rnd.enabled = true;
    c.symmetry = true;
    c.curriculum.rule = CurriculumRule::kRelaxed;
  } else if (setting == "wo_navigation") {
    c.profile = "velocity_ablation";
    c.curriculum.rule = CurriculumRule::kVelocity;
    c.rnd.enabled = true;
    c.symmetry = true;
  } else if (setting == "wo_curriculum") {
    c.rnd.enabled = true;
    c.symmetry = true;
    c.curriculum.rule = CurriculumRule::kStrict;
  } else if (setting == "wo_curiosity") {
    c.rnd.enabled = false;
    c.symmetry = true;
    c.curriculum.rule = CurriculumRule::kRelaxed;
  } else if (setting == "wo_augmentation") {
    c.rnd.enabled = true;
    c.symmetry = false;
    c.curriculum.rule = CurriculumRule::kRelaxed;
  } else {
    throw std::invalid_argument("unknown ablation setting: " + std::string(setting));
  }
  c.name = c.name + "_" + std::string(setting);
}

}  // namespace sparsestep
