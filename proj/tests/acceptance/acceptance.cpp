// Acceptance checks, one PASS/FAIL line per criterion. Thresholds are pinned below.
//
// The two learning criteria score training artifacts under --runs (default: <source>/runs).
// tools/run_desk_experiments.sh produces them; --live trains them in-process instead.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sparsestep/config.hpp"
#include "sparsestep/curriculum.hpp"
#include "sparsestep/eval.hpp"
#include "sparsestep/ppo.hpp"
#include "sparsestep/symmetry.hpp"
#include "sparsestep/trainer.hpp"
#include "support/curriculum_scripts.hpp"
#include "support/ppo_toys.hpp"
#include "support/random_states.hpp"
#include "support/reward_fixtures.hpp"
#include "support/rnd_probe.hpp"
#include "support/terrain_probe.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sparsestep;
using namespace sparsestep::testing;

namespace {

// Terrain
constexpr double kSparsityTol = 0.002;
constexpr double kMonteCarloTol = 0.01;
constexpr int kMonteCarloSamples = 1'000'000;
constexpr double kTerrainSeconds = 60.0;
// Rewards
constexpr double kRewardTol = 1e-9;
constexpr std::size_t kMinFixtures = 20;
// Curiosity
constexpr double kRndDrop = 0.9;
constexpr double kRndHeldOutRatio = 5.0;
constexpr int kRndSteps = 2000;
constexpr int kRndPairs = 1024;
constexpr double kRndSeconds = 120.0;
// Symmetry
constexpr double kSymmetryTol = 1e-6;
constexpr int kSymmetryTransitions = 1000;
// Optimizer
constexpr double kGradientTol = 1e-4;
constexpr double kRatioTol = 1e-6;
constexpr double kGaeTol = 1e-5;  // float storage
// Desk learning
constexpr int kDeskIterations = 1500;
constexpr double kDeskSeconds = 45.0 * 60.0;
constexpr double kLevel0Success = 0.8;
constexpr double kLevel2Success = 0.5;
constexpr double kDeskDistance = 3.0;
constexpr int kDeskSeedsNeeded = 2;
constexpr int kDeskEvalTrials = 200;
constexpr int kDeskEvalTerrains = 20;
constexpr std::uint64_t kDeskEvalSeed = 9001;
// Finetune vs scratch
constexpr double kFinetuneMark = 0.5;
constexpr int kPairsNeeded = 2;
const std::vector<std::uint64_t> kSeeds{1, 2, 3};

struct Result {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

Result terrain_fidelity() {
  const auto t0 = std::chrono::steady_clock::now();
  const double table[3][2] = {{0, 0.154}, {5, 0.448}, {9, 0.811}};
  bool ok = true;
  std::ostringstream d;
  for (const auto& row : table) {
    const double s = sparsity(level_params(TerrainType::kStonesEverywhere, static_cast<int>(row[0])));
    ok = ok && std::abs(s - row[1]) <= kSparsityTol;
    d << "L" << row[0] << "=" << fmt("%.4f", s) << " ";
  }
  double worst = 0.0;
  for (int l = 0; l < kNumLevels; ++l) {
    const TerrainParams p = level_params(TerrainType::kStonesEverywhere, l);
    const TerrainGrid grid = generate(p, 500 + l);
    const double mc = 1.0 - monte_carlo_steppable(grid, kMonteCarloSamples, 77 + l);
    worst = std::max(worst, std::abs(mc - sparsity(p)));
  }
  const double secs = seconds_since(t0);
  ok = ok && worst <= kMonteCarloTol && secs < kTerrainSeconds;
  d << "max |MC - analytic|=" << fmt("%.4f", worst) << " time=" << fmt("%.1fs", secs);
  return {ok, d.str()};
}

Result reward_exactness() {
  const auto fx = fixtures::reward_fixtures();
  double worst = 0.0;
  std::string worst_name;
  bool have_target = false, have_one_meter = false, have_termination = false, have_clip = false;
  for (const auto& f : fx) {
    fixtures::RewardScene scene;
    f.setup(scene);
    const double got = scene.evaluate()[f.term];
    const double err = std::abs(got - f.expected);
    if (err > worst) {
      worst = err;
      worst_name = f.name;
    }
    have_target |= f.name == "position_at_target" && f.expected == 5.0;
    have_one_meter |= f.name == "position_one_meter_away" && f.expected == 2.5;
    have_termination |= f.name == "termination_constant" && f.expected == -200.0;
    have_clip |= f.name == "contact_force_at_clip_boundary";
  }
  const bool ok = fx.size() >= kMinFixtures && worst <= kRewardTol && have_target &&
                  have_one_meter && have_termination && have_clip;
  return {ok, std::to_string(fx.size()) + " fixtures, max error " + fmt("%.2e", worst) +
                  (worst_name.empty() ? "" : " (" + worst_name + ")")};
}

Result rnd_behavior() {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  std::ostringstream d;
  for (std::uint64_t s : kSeeds) {
    const RndProbe p = run_rnd_probe(s, kRndSteps, kRndPairs);
    ok = ok && p.drop() >= kRndDrop && p.ratio() >= kRndHeldOutRatio;
    d << "seed" << s << " drop=" << fmt("%.3f", p.drop()) << " ratio=" << fmt("%.1f", p.ratio()) << " ";
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < kRndSeconds;
  d << "time=" << fmt("%.1fs", secs);
  return {ok, d.str()};
}

Mirror compose(Mirror a, Mirror b) {
  const bool lr = (a == Mirror::kLeftRight || a == Mirror::kBoth) != (b == Mirror::kLeftRight || b == Mirror::kBoth);
  const bool fb = (a == Mirror::kFrontBack || a == Mirror::kBoth) != (b == Mirror::kFrontBack || b == Mirror::kBoth);
  if (lr && fb) return Mirror::kBoth;
  if (lr) return Mirror::kLeftRight;
  if (fb) return Mirror::kFrontBack;
  return Mirror::kIdentity;
}

Result symmetry_suite() {
  bool group = true;
  for (bool velocity : {false, true}) {
    const SymmetryMap map({}, velocity);
    for (Mirror a : kAllMirrors) {
      group = group && map.observation(a).then(map.observation(a)) == SignedPermutation::identity(map.obs_dim());
      group = group && map.action(a).then(map.action(a)) == SignedPermutation::identity(kJointDim);
      for (Mirror b : kAllMirrors) {
        group = group && map.observation(a).then(map.observation(b)) == map.observation(b).then(map.observation(a));
        group = group && map.observation(a).then(map.observation(b)) == map.observation(compose(a, b));
        group = group && map.action(a).then(map.action(b)) == map.action(compose(a, b));
      }
    }
  }

  const Simulator sim;
  const TerrainGrid g = flat_world();
  std::mt19937_64 rng(2718);
  const RewardProfile profiles[] = {builtin_profile("generalist"), builtin_profile("s2"),
                                    builtin_profile("bb")};
  double dyn = 0.0, rew = 0.0;
  for (int i = 0; i < kSymmetryTransitions; ++i) {
    const Transition t = random_transition(sim, g, rng);
    const RewardBreakdown base = evaluate(t, g, profiles[i % 3], sim.config());
    for (Mirror m : {Mirror::kLeftRight, Mirror::kFrontBack, Mirror::kBoth}) {
      const Reflection r = Reflection::about(t.prev, m);
      Transition mt;
      mt.prev = mirror_state(t.prev, r);
      mt.action = mirror_joint_vector(t.action, m);
      mt.next = mt.prev;
      sim.step(mt.next, mt.action, g);
      mt.command = mirror_command(t.command, r);
      dyn = std::max(dyn, max_state_diff(mirror_state(t.next, r), mt.next));
      const RewardBreakdown mb = evaluate(mt, g, profiles[i % 3], sim.config());
      for (int k = 0; k < kNumRewardTerms; ++k) rew = std::max(rew, std::abs(mb.terms[k] - base.terms[k]));
    }
  }

  double obs_err = 0.0;
  for (bool velocity : {false, true}) {
    ObservationContext ctx;
    ctx.grid = &g;
    ctx.velocity_mode = velocity;
    const SymmetryMap omap(ctx.pattern, velocity);
    for (int i = 0; i < kSymmetryTransitions; ++i) {
      RobotState st = random_state(sim, rng);
      st.time = 3.0;
      const Command c = random_command(st, rng);
      const std::vector<float> obs = build_observation(st, c, ctx);
      for (Mirror m : kAllMirrors) {
        const Reflection r = Reflection::about(st, m);
        const std::vector<float> direct = build_observation(mirror_state(st, r), mirror_command(c, r), ctx);
        const std::vector<float> mapped = omap.mirror_observation(obs, m);
        for (std::size_t k = 0; k < obs.size(); ++k) {
          obs_err = std::max(obs_err, static_cast<double>(std::abs(direct[k] - mapped[k])));
        }
      }
    }
  }

  const SymmetryMap map;
  RolloutBatch b;
  const int n = 257;
  b.resize(map.obs_dim(), kJointDim, n);
  for (auto* m : {&b.observations, &b.actions, &b.old_mean, &b.old_std}) m->setRandom();
  for (auto* v : {&b.old_log_prob, &b.values, &b.advantages, &b.returns}) v->setRandom();
  const RolloutBatch a = augment(b, map);
  bool tiled = a.size() == 4 * n;
  for (int c = 0; c < 4 && tiled; ++c) {
    tiled = a.advantages.segment(c * n, n) == b.advantages && a.returns.segment(c * n, n) == b.returns &&
            a.values.segment(c * n, n) == b.values && a.old_log_prob.segment(c * n, n) == b.old_log_prob;
  }
  const bool ok = group && dyn <= kSymmetryTol && obs_err <= kSymmetryTol && rew <= kSymmetryTol && tiled;
  return {ok, std::string("group laws ") + (group ? "exact" : "BROKEN") + ", dynamics " +
                  fmt("%.1e", dyn) + ", observations " + fmt("%.1e", obs_err) + ", rewards " + fmt("%.1e", rew) + ", augment " +
                  (tiled ? "4x tiled" : "BROKEN")};
}

Result curriculum_machine() {
  const AlwaysSucceedResult a = run_always_succeed(64, 10'000, 11);
  const AlwaysSucceedResult a2 = run_always_succeed(64, 10'000, 11);
  const bool uniform = a.chi2 < kChi2Crit9;
  const DemotionResult z = run_fixed_progress(0.0, true, 50, 12);
  const DemotionResult e = run_fixed_progress(1e-9, false, 2000, 13);
  const bool det = a.reshuffle_counts == a2.reshuffle_counts;
  const bool ok = a.reached_top_in_ten && a.stayed_in_range && uniform && z.monotone &&
                  z.ended_at_zero && !e.ever_demoted && det;
  std::ostringstream d;
  d << "always-succeed reaches 9: " << (a.reached_top_in_ten ? "yes" : "no") << ", reshuffle chi2="
    << fmt("%.2f", a.chi2) << "; zero progress ends at 0: " << (z.monotone && z.ended_at_zero ? "yes" : "no")
    << "; baseline+eps demoted: " << (e.ever_demoted ? "yes" : "no") << "; deterministic: " << (det ? "yes" : "no");
  return {ok, d.str()};
}

Result optimizer_correctness() {
  double grad_err = 0.0;
  for (Activation act : {Activation::kElu, Activation::kTanh}) {
    for (std::uint64_t seed : kSeeds) {
      const Net net = toy_net(act, seed);
      std::mt19937_64 rng(seed + 100);
      const PpoConfig cfg;
      const ToyBatch b = toy_batch(net, 32, cfg.clip_ratio, rng);
      VecX<double> grad;
      ppo_loss<double>(net, b.obs, b.actions, b.old_mean, b.old_std, b.old_logp, b.adv, b.ret, cfg, &grad);
      grad_err = std::max(grad_err, rel_error(grad, fd_gradient(net, b, cfg)));
    }
  }

  PpoStats st;
  double ratio = 0.0;
  for (std::uint64_t seed : kSeeds) {
    Policy policy = small_policy(40, seed);
    std::mt19937_64 rng(seed + 200);
    const RolloutBatch batch = policy_batch(policy, 1024, rng);
    Adam<float> adam(policy.net.num_params(), 1e-3);
    st = ppo_update(policy, adam, batch, PpoConfig{}, rng);
    ratio = std::max(ratio, st.fault ? 1.0 : st.first_ratio_deviation);
  }

  RolloutStorage s;
  s.resize(1, 1, 48, 1);
  s.rewards.setOnes();
  s.values.setZero();
  const double gamma = 0.99;
  VecX<float> adv, ret;
  compute_gae(s, VecX<float>::Zero(1), gamma, 1.0, adv, ret);
  double gae_err = 0.0;
  for (int t = 0; t < 48; ++t) {
    const double series = (1.0 - std::pow(gamma, 48 - t)) / (1.0 - gamma);
    gae_err = std::max(gae_err, std::abs(adv[t] - series) / series);
  }
  const bool ok = grad_err < kGradientTol && ratio <= kRatioTol && gae_err < kGaeTol;
  return {ok, "gradient rel err vs finite differences " + fmt("%.1e", grad_err) +
                  ", first-minibatch |ratio-1| " + fmt("%.1e", ratio) + ", GAE vs geometric series " +
                  fmt("%.1e", gae_err)};
}

// Artifacts of one training run.
struct RunRecord {
  bool present = false;
  int iterations = 0;
  double wall_seconds = 0.0;
  std::vector<std::pair<int, std::vector<double>>> progress;
};

RunRecord read_run(const fs::path& dir) {
  RunRecord r;
  const fs::path summary = dir / "summary.json";
  if (!fs::exists(summary) || !fs::exists(dir / "metrics.jsonl")) return r;
  std::ifstream in(summary);
  const json s = json::parse(in);
  r.present = true;
  r.iterations = s.at("iterations");
  r.wall_seconds = s.at("wall_seconds");
  std::ifstream m(dir / "metrics.jsonl");
  for (std::string line; std::getline(m, line);) {
    const json j = json::parse(line);
    if (j.contains("progress")) r.progress.emplace_back(j["iteration"].get<int>() + 1, j["progress"]);
  }
  return r;
}

std::vector<double> fresh_eval(const fs::path& run, TerrainType terrain, const std::vector<int>& levels,
                               double distance) {
  const std::string ckpt = (run / "final.bin").string();
  Policy policy;
  CheckpointMeta meta;
  load_checkpoint(ckpt, policy, meta);
  PolicyAgent agent(policy, meta.velocity_mode);
  EvalSpec spec;
  spec.terrain = terrain;
  spec.n_trials = kDeskEvalTrials;
  spec.n_terrains = kDeskEvalTerrains;
  spec.seed = kDeskEvalSeed;
  spec.sim = load_config((run / "config.json").string()).sim;
  std::vector<double> out;
  for (int l : levels) out.push_back(evaluate_level(agent, spec, l, distance).success_rate);
  return out;
}

fs::path generalist_dir(const fs::path& runs, std::uint64_t seed) {
  return runs / ("desk_generalist_s" + std::to_string(seed));
}
fs::path s2_dir(const fs::path& runs, const std::string& kind, std::uint64_t seed) {
  return runs / ("desk_s2_" + kind + "_s" + std::to_string(seed));
}

Result desk_learning(const fs::path& runs) {
  int passing = 0;
  std::ostringstream d;
  for (std::uint64_t seed : kSeeds) {
    const fs::path dir = generalist_dir(runs, seed);
    const RunRecord r = read_run(dir);
    d << "seed" << seed << ": ";
    if (!r.present) {
      d << "missing; ";
      continue;
    }
    const std::vector<double> sr = fresh_eval(dir, TerrainType::kStonesEverywhere, {0, 2}, kDeskDistance);
    const bool ok = r.iterations <= kDeskIterations && r.wall_seconds <= kDeskSeconds &&
                    sr[0] >= kLevel0Success && sr[1] >= kLevel2Success;
    passing += ok;
    d << "L0=" << fmt("%.2f", sr[0]) << " L2=" << fmt("%.2f", sr[1]) << " iters=" << r.iterations
      << " wall=" << fmt("%.0fs", r.wall_seconds) << (ok ? " ok; " : " short; ");
  }
  d << passing << "/3 seeds pass";
  return {passing >= kDeskSeedsNeeded, d.str()};
}

// First iteration whose progress evaluation reaches `mark`; budget + 1 if never.
int iterations_to_mark(const RunRecord& r, double mark, int budget) {
  for (const auto& [it, s] : r.progress) {
    if (!s.empty() && s[0] >= mark) return it;
  }
  return budget + 1;
}

Result finetune_vs_scratch(const fs::path& runs) {
  int wins = 0;
  std::ostringstream d;
  for (std::uint64_t seed : kSeeds) {
    const RunRecord ft = read_run(s2_dir(runs, "finetune", seed));
    const RunRecord sc = read_run(s2_dir(runs, "scratch", seed));
    d << "pair" << seed << ": ";
    if (!ft.present || !sc.present) {
      d << "missing; ";
      continue;
    }
    const int budget = std::max(ft.iterations, sc.iterations);
    const int a = iterations_to_mark(ft, kFinetuneMark, budget);
    const int b = iterations_to_mark(sc, kFinetuneMark, budget);
    auto show = [&](int v) { return v > budget ? std::string(">") + std::to_string(budget) : std::to_string(v); };
    wins += a < b;
    d << "finetune " << show(a) << " vs scratch " << show(b) << "; ";
  }
  d << wins << "/3 pairs favour finetuning";
  return {wins >= kPairsNeeded, d.str()};
}

TrainConfig repro_config(const fs::path& dir) {
  TrainConfig c;
  c.name = "repro";
  c.terrain_variants = 2;
  c.n_envs = 16;
  c.steps_per_iter = 8;
  c.total_iterations = 4;
  c.seed = 31;
  c.workers = 1;
  c.policy.actor_hidden = {32};
  c.policy.critic_hidden = {32};
  c.rnd.predictor_hidden = {16};
  c.rnd.target_hidden = {16};
  c.curriculum.max_level = 3;
  c.curriculum.baseline_episodes = 8;
  c.checkpoint_interval = 2;
  c.output_dir = dir.string();
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Result reproducibility() {
  const fs::path root = fs::temp_directory_path() / "sparsestep_acceptance_repro";
  fs::remove_all(root);
  train(repro_config(root / "a"));
  train(repro_config(root / "b"));
  const bool metrics = slurp(root / "a" / "metrics.jsonl") == slurp(root / "b" / "metrics.jsonl");
  const bool ckpt = slurp(root / "a" / "final.bin") == slurp(root / "b" / "final.bin") &&
                    slurp(root / "a" / "ckpt_000002.bin") == slurp(root / "b" / "ckpt_000002.bin");
  const bool nonempty = !slurp(root / "a" / "final.bin").empty();
  fs::remove_all(root);
  return {metrics && ckpt && nonempty, std::string("metrics ") + (metrics ? "identical" : "DIFFER") +
                                           ", checkpoints " + (ckpt ? "identical" : "DIFFER")};
}

void run_live(fs::path runs, const fs::path& root) {
  runs = fs::absolute(runs);
  fs::current_path(root);  // configs name profiles by relative path
  const fs::path configs = root / "configs";
  for (std::uint64_t seed : kSeeds) {
    TrainConfig g = load_config((configs / "desk_generalist.json").string());
    g.seed = seed;
    g.name += "_s" + std::to_string(seed);
    g.output_dir = generalist_dir(runs, seed).string();
    const TrainResult gen = train(g);

    TrainConfig ft = load_config((configs / "desk_s2.json").string());
    ft.seed = seed;
    TrainConfig sc = ft;
    ft.output_dir = s2_dir(runs, "finetune", seed).string();
    ft.name += "_finetune_s" + std::to_string(seed);
    finetune(gen.final_checkpoint, ft);
    sc.output_dir = s2_dir(runs, "scratch", seed).string();
    sc.name += "_scratch_s" + std::to_string(seed);
    train(sc);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparsestep acceptance checks"};
  std::string runs = std::string(SPARSESTEP_SOURCE_DIR) + "/runs";
  bool live = false;
  std::string only;
  app.add_option("--runs", runs, "directory holding the desk training artifacts");
  app.add_flag("--live", live, "train the desk experiments first (hours on one core)");
  app.add_option("--only", only, "run a single criterion by name");
  CLI11_PARSE(app, argc, argv);

  if (live) run_live(runs, SPARSESTEP_SOURCE_DIR);

  const std::vector<std::pair<std::string, std::function<Result()>>> criteria{
      {"terrain_fidelity", terrain_fidelity},
      {"reward_exactness", reward_exactness},
      {"rnd_behavior", rnd_behavior},
      {"symmetry_suite", symmetry_suite},
      {"curriculum_state_machine", curriculum_machine},
      {"optimizer_correctness", optimizer_correctness},
      {"desk_learning", [&] { return desk_learning(runs); }},
      {"finetune_vs_scratch", [&] { return finetune_vs_scratch(runs); }},
      {"reproducibility", reproducibility},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    if (!only.empty() && name != only) continue;
    Result r;
    try {
      r = check();
    } catch (const std::exception& e) {
      r = {false, std::string("error: ") + e.what()};
    }
    failures += !r.pass;
    std::printf("%s %s: %s\n", r.pass ? "PASS" : "FAIL", name.c_str(), r.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
