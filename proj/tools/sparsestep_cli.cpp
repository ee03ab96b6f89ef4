#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sparsestep/config.hpp"
#include "sparsestep/eval.hpp"
#include "sparsestep/terrain.hpp"
#include "sparsestep/trainer.hpp"

using namespace sparsestep;

namespace {

struct TrainArgs {
  std::string config;
  std::string output;
  int iterations = -1;
  bool quiet = false;
};

TrainConfig resolve(const TrainArgs& a) {
  TrainConfig c = a.config.empty() ? TrainConfig{} : load_config(a.config);
  apply_env_overrides(c);
  if (!a.output.empty()) c.output_dir = a.output;
  if (a.iterations >= 0) c.total_iterations = a.iterations;
  return c;
}

IterationCallback printer(bool quiet) {
  if (quiet) return {};
  return [](int it, const std::string& line) {
    std::cout << line << '\n';
    (void)it;
    return true;
  };
}

void add_train_options(CLI::App* app, TrainArgs& a) {
  app->add_option("--config", a.config, "training config JSON");
  app->add_option("--output", a.output, "run directory (overrides config)");
  app->add_option("--iterations", a.iterations, "iteration budget (overrides config)");
  app->add_flag("--quiet", a.quiet, "do not echo metrics");
}

void write_or_print(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

std::vector<std::unique_ptr<PolicyAgent>> load_agents(const std::vector<std::string>& paths) {
  std::vector<std::unique_ptr<PolicyAgent>> out;
  for (const std::string& p : paths) {
    Policy policy;
    CheckpointMeta meta;
    load_checkpoint(p, policy, meta);
    out.push_back(std::make_unique<PolicyAgent>(std::move(policy), meta.velocity_mode));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparsestep: legged locomotion on sparse footholds"};
  app.require_subcommand(1);

  TrainArgs train_args;
  CLI::App* train_cmd = app.add_subcommand("train", "train a policy from scratch");
  add_train_options(train_cmd, train_args);
  train_cmd->get_option("--config")->required();

  TrainArgs ft_args;
  std::string from;
  CLI::App* ft_cmd = app.add_subcommand("finetune", "finetune a checkpoint on a new terrain");
  add_train_options(ft_cmd, ft_args);
  ft_cmd->get_option("--config")->required();
  ft_cmd->add_option("--from", from, "generalist checkpoint")->required();

  TrainArgs abl_args;
  std::string setting;
  CLI::App* abl_cmd = app.add_subcommand("ablation", "train one ablation setting");
  add_train_options(abl_cmd, abl_args);
  abl_cmd->add_option("--setting", setting, "proposed|wo_navigation|wo_curriculum|wo_curiosity|wo_augmentation")
      ->required();

  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate checkpoints");
  eval_cmd->require_subcommand(1);
  std::vector<std::string> checkpoints;
  std::string spec_path, out_path, dump_traj, physics_from;
  std::vector<double> distances{0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
  int distance_level = kMaxLevel;
  std::vector<std::string> train_terrains;
  auto add_eval_common = [&](CLI::App* sub) {
    sub->add_option("--checkpoint,--checkpoints", checkpoints, "checkpoint files")->required();
    sub->add_option("--spec", spec_path, "evaluation spec JSON");
    sub->add_option("--out", out_path, "CSV output path (stdout if omitted)");
    sub->add_option("--dump-traj", dump_traj, "append per-step trajectory JSONL");
    sub->add_option("--physics-from", physics_from, "training config whose sim section to evaluate under");
  };
  CLI::App* level_cmd = eval_cmd->add_subcommand("level-curve", "success vs level");
  add_eval_common(level_cmd);
  CLI::App* dist_cmd = eval_cmd->add_subcommand("distance-curve", "success vs distance");
  add_eval_common(dist_cmd);
  dist_cmd->add_option("--distances", distances, "traverse distances (m)");
  dist_cmd->add_option("--level", distance_level, "terrain level");
  CLI::App* transfer_cmd = eval_cmd->add_subcommand("transfer", "transfer matrix");
  add_eval_common(transfer_cmd);
  transfer_cmd->add_option("--train-terrains", train_terrains,
                           "training terrain of each checkpoint (default: from metadata)");

  CLI::App* terrain_cmd = app.add_subcommand("terrain", "terrain utilities");
  terrain_cmd->require_subcommand(1);
  std::string terrain_type = "stones_everywhere", stem = "terrain";
  int level = 0;
  std::uint64_t seed = 1;
  CLI::App* export_cmd = terrain_cmd->add_subcommand("export", "write heights CSV, mask PGM, params JSON");
  export_cmd->add_option("--type", terrain_type, "terrain family");
  export_cmd->add_option("--level", level, "difficulty 0..9");
  export_cmd->add_option("--seed", seed, "generation seed");
  export_cmd->add_option("--out", stem, "output stem");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) {
      const TrainConfig c = resolve(train_args);
      const TrainResult r = train(c, nullptr, printer(train_args.quiet));
      std::cerr << "trained " << r.iterations << " iterations in " << r.wall_seconds << " s -> "
                << r.final_checkpoint << '\n';
    } else if (*ft_cmd) {
      const TrainConfig c = resolve(ft_args);
      const TrainResult r = finetune(from, c, printer(ft_args.quiet));
      std::cerr << "finetuned " << r.iterations << " iterations -> " << r.final_checkpoint << '\n';
    } else if (*abl_cmd) {
      TrainConfig c = resolve(abl_args);
      apply_ablation(c, setting);
      if (abl_args.output.empty()) c.output_dir += "_" + setting;
      const TrainResult r = train(c, nullptr, printer(abl_args.quiet));
      std::cerr << "ablation " << setting << ": " << r.iterations << " iterations -> "
                << r.final_checkpoint << '\n';
    } else if (*eval_cmd) {
      EvalSpec spec = spec_path.empty() ? EvalSpec{} : load_eval_spec(spec_path);
      if (!dump_traj.empty()) spec.dump_traj = dump_traj;
      if (!physics_from.empty()) spec.sim = load_config(physics_from).sim;
      if (const char* w = std::getenv("SPARSESTEP_WORKERS"); w && *w) spec.workers = std::stoi(w);
      auto agents = load_agents(checkpoints);
      std::vector<Agent*> ptrs;
      for (auto& a : agents) ptrs.push_back(a.get());
      if (*level_cmd) {
        write_or_print(out_path, curve_csv(eval_success_vs_level(ptrs, spec), "level"));
      } else if (*dist_cmd) {
        write_or_print(out_path,
                       curve_csv(eval_success_vs_distance(ptrs, spec, distances, distance_level), "distance"));
      } else {
        std::vector<TerrainType> train_types;
        for (std::size_t i = 0; i < checkpoints.size(); ++i) {
          if (i < train_terrains.size()) {
            train_types.push_back(terrain_type_from_string(train_terrains[i]));
          } else {
            Policy p;
            CheckpointMeta m;
            load_checkpoint(checkpoints[i], p, m);
            train_types.push_back(terrain_type_from_string(m.terrain));
          }
        }
        std::vector<std::pair<TerrainType, Agent*>> pairs;
        for (std::size_t i = 0; i < ptrs.size(); ++i) pairs.emplace_back(train_types[i], ptrs[i]);
        const std::vector<TerrainType> tests(kAllTerrainTypes.begin(), kAllTerrainTypes.end());
        write_or_print(out_path, transfer_csv(transfer_matrix(pairs, tests, spec), train_types, tests));
      }
    } else if (*terrain_cmd) {
      const TerrainType t = terrain_type_from_string(terrain_type);
      const TerrainGrid g = generate(level_params(t, level), seed, default_layout(t));
      export_terrain(g, stem);
      std::cerr << "wrote " << stem << "_heights.csv, " << stem << "_steppable.pgm, " << stem
                << "_params.json\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
