#include "sparsestep/eval.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "sparsestep/observation.hpp"

namespace sparsestep {

void EvalSpec::validate() const {
  if (n_trials <= 0 || n_terrains <= 0) throw std::invalid_argument("eval: trials and terrains must be positive");
  if (n_trials % n_terrains != 0) throw std::invalid_argument("eval: n_trials must be divisible by n_terrains");
  if (traverse_distance < 0.0) throw std::invalid_argument("eval: negative traverse distance");
  for (int l : levels) {
    if (l < 0 || l > kMaxLevel) throw std::invalid_argument("eval: level out of range");
  }
}

void TeleportAgent::intervene(RobotState& s, const Command& c, const TerrainGrid& g,
                              const Simulator& sim) {
  if (s.step_count != 1) return;
  const RobotState moved = sim.standing_state(g, c.target_position, s.yaw(), s.com_bias);
  const double t = s.time;
  const int k = s.step_count;
  s = moved;
  s.time = t;
  s.step_count = k;
}

namespace {

double episode_length_for(const RandomizationConfig& rand, double reach, double floor) {
  const double t_hi = rand.episode_length_range.second;
  const double d_hi = rand.target_distance_range.second;
  return std::max({t_hi, floor, t_hi * reach / d_hi});
}

}  // namespace

LevelEval evaluate_level(Agent& agent, const EvalSpec& spec, int level, double distance) {
  spec.validate();
  if (level < 0 || level > kMaxLevel) throw std::invalid_argument("eval: level out of range");
  const Simulator sim(spec.sim);
  const TerrainParams params = level_params(spec.terrain, level);
  const TerrainLayout layout = default_layout(spec.terrain);
  std::vector<TerrainGrid> grids;
  grids.reserve(spec.n_terrains);
  for (int k = 0; k < spec.n_terrains; ++k) {
    const std::uint64_t s = spec.seed * 1315423911ULL + static_cast<std::uint64_t>(level) * 104729ULL + k;
    grids.push_back(generate(params, s, layout));
  }
  const RandomizationConfig rand = RandomizationConfig::for_task(spec.terrain);
  const double reach = distance + spec.target_margin;

  const int n = spec.n_trials;
  std::vector<RobotState> states(n);
  std::vector<Command> commands(n);
  std::vector<const TerrainGrid*> grid_ptr(n);
  LevelEval out;
  out.level = level;
  out.distance = distance;
  out.trials.resize(n);
  for (int i = 0; i < n; ++i) {
    const int k = i % spec.n_terrains;
    const TerrainGrid& g = grids[k];
    grid_ptr[i] = &g;
    states[i] = sim.standing_state(g, g.spawn, 0.0);
    Command& c = commands[i];
    c.target_position = g.spawn + Eigen::Vector2d(reach, 0.0);
    c.target_heading = 0.0;
    c.episode_length = episode_length_for(rand, reach, spec.min_episode_length);
    if (agent.velocity_mode()) c.velocity = {spec.velocity_command, 0.0};
    TrialRecord& r = out.trials[i];
    r.level = level;
    r.terrain = k;
    r.spawn_x = states[i].base_position.x();
  }

  std::ofstream traj;
  if (!spec.dump_traj.empty()) {
    traj.open(spec.dump_traj, std::ios::app);
    if (!traj) throw std::runtime_error("cannot open trajectory file " + spec.dump_traj);
    for (int i = 0; i < n; ++i) {
      nlohmann::json j = {{"trial", i}, {"level", level}, {"terrain", out.trials[i].terrain},
                          {"spawn_x", out.trials[i].spawn_x}, {"distance", distance}};
      traj << j.dump() << '\n';
    }
  }

  ObsLayout layout_obs;
  std::vector<char> active(n, 1);
  int remaining = n;
  MatX<float> obs;
  std::vector<int> idx;
  std::vector<Vec12> actions;
  std::vector<StepEvents> events;
  std::vector<RobotState> batch_states;
  std::vector<const TerrainGrid*> batch_grids;
  while (remaining > 0) {
    idx.clear();
    for (int i = 0; i < n; ++i) {
      if (active[i]) idx.push_back(i);
    }
    const int m = static_cast<int>(idx.size());
    obs.resize(layout_obs.size(), m);
    for (int j = 0; j < m; ++j) {
      ObservationContext ctx;
      ctx.grid = grid_ptr[idx[j]];
      ctx.velocity_mode = agent.velocity_mode();
      build_observation(states[idx[j]], commands[idx[j]], ctx,
                        std::span<float>(obs.col(j).data(), obs.rows()));
    }
    const MatX<float> u = agent.act(obs);
    const Eigen::Vector3d scale = agent.action_scale();
    actions.resize(m);
    events.assign(m, StepEvents{});
    batch_states.resize(m);
    batch_grids.resize(m);
    for (int j = 0; j < m; ++j) {
      for (int a = 0; a < kJointDim; ++a) {
        actions[j][a] = scale[a % 3] * static_cast<double>(u(a, j));
      }
      batch_states[j] = states[idx[j]];
      batch_grids[j] = grid_ptr[idx[j]];
    }
    sim.batch_step(batch_states, actions, batch_grids, events, spec.workers);
    for (int j = 0; j < m; ++j) {
      const int i = idx[j];
      RobotState& s = states[i];
      s = batch_states[j];
      agent.intervene(s, commands[i], *grid_ptr[i], sim);
      TrialRecord& r = out.trials[i];
      r.max_advance = std::max(r.max_advance, s.base_position.x() - r.spawn_x);
      ++r.steps;
      const TerminationFlags term = sim.check_termination(s, commands[i], *grid_ptr[i]);
      if (traj.is_open()) {
        nlohmann::json j2 = {{"trial", i}, {"step", r.steps}, {"x", s.base_position.x()},
                             {"failure", term.failure()}, {"done", term.done()}};
        traj << j2.dump() << '\n';
      }
      if (term.done()) {
        r.failed = term.failure();
        active[i] = 0;
        --remaining;
      }
    }
  }
  int successes = 0;
  for (TrialRecord& r : out.trials) {
    r.success = r.max_advance >= distance;
    successes += r.success ? 1 : 0;
  }
  out.success_rate = static_cast<double>(successes) / n;
  return out;
}

namespace {

CurvePoint summarize(double x, const std::vector<double>& v) {
  CurvePoint p;
  p.x = x;
  p.per_agent = v;
  for (double r : v) p.mean += r;
  p.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double r : v) ss += (r - p.mean) * (r - p.mean);
    p.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return p;
}

}  // namespace

std::vector<CurvePoint> eval_success_vs_level(const std::vector<Agent*>& agents,
                                              const EvalSpec& spec) {
  if (agents.empty()) throw std::invalid_argument("eval: no agents");
  std::vector<CurvePoint> out;
  for (int level : spec.levels) {
    std::vector<double> rates;
    for (Agent* a : agents) rates.push_back(evaluate_level(*a, spec, level, spec.traverse_distance).success_rate);
    out.push_back(summarize(level, rates));
  }
  return out;
}

std::vector<CurvePoint> eval_success_vs_distance(const std::vector<Agent*>& agents,
                                                 const EvalSpec& spec,
                                                 const std::vector<double>& distances, int level) {
  if (agents.empty()) throw std::invalid_argument("eval: no agents");
  if (distances.empty()) return {};
  const double far = *std::max_element(distances.begin(), distances.end());
  // One run per agent with the farthest target; nearer distances read the same trials.
  std::vector<LevelEval> runs;
  for (Agent* a : agents) runs.push_back(evaluate_level(*a, spec, level, far));
  std::vector<CurvePoint> out;
  for (double d : distances) {
    std::vector<double> rates;
    for (const LevelEval& run : runs) {
      int ok = 0;
      for (const TrialRecord& r : run.trials) ok += r.max_advance >= d ? 1 : 0;
      rates.push_back(static_cast<double>(ok) / static_cast<double>(run.trials.size()));
    }
    out.push_back(summarize(d, rates));
  }
  return out;
}

std::string TransferCell::label() const {
  if (max_level_passing >= 0) return std::to_string(max_level_passing);
  return below_zero ? "<0" : "none";
}

TransferCell transfer_cell(TerrainType train, TerrainType test, const std::vector<double>& rates,
                           double threshold) {
  TransferCell c{train, test};
  for (int l = 0; l < static_cast<int>(rates.size()); ++l) {
    if (rates[l] >= threshold) c.max_level_passing = l;
  }
  if (c.max_level_passing < 0 && !rates.empty()) c.below_zero = rates[0] >= 0.5 && rates[0] < threshold;
  return c;
}

std::vector<TransferCell> transfer_matrix(const std::vector<std::pair<TerrainType, Agent*>>& policies,
                                          const std::vector<TerrainType>& terrains,
                                          const EvalSpec& spec) {
  std::vector<TransferCell> out;
  for (const auto& [train, agent] : policies) {
    for (TerrainType test : terrains) {
      EvalSpec s = spec;
      s.terrain = test;
      std::vector<double> rates(kNumLevels, 0.0);
      for (int l = 0; l < kNumLevels; ++l) {
        rates[l] = evaluate_level(*agent, s, l, spec.traverse_distance).success_rate;
      }
      out.push_back(transfer_cell(train, test, rates, spec.success_threshold));
    }
  }
  return out;
}

std::string curve_csv(const std::vector<CurvePoint>& curve, const std::string& x_name) {
  std::ostringstream os;
  os << x_name << ",mean,std\n";
  for (const CurvePoint& p : curve) os << p.x << ',' << p.mean << ',' << p.std << '\n';
  return os.str();
}

std::string transfer_csv(const std::vector<TransferCell>& cells,
                         const std::vector<TerrainType>& train, const std::vector<TerrainType>& test) {
  std::ostringstream os;
  os << "train\\test";
  for (TerrainType t : test) os << ',' << to_string(t);
  os << '\n';
  for (TerrainType tr : train) {
    os << to_string(tr);
    for (TerrainType te : test) {
      std::string label = "";
      for (const TransferCell& c : cells) {
        if (c.train == tr && c.test == te) label = c.label();
      }
      os << ',' << label;
    }
    os << '\n';
  }
  return os.str();
}

std::vector<TrialRecord> trials_from_trajectory(const std::string& path, double distance) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trajectory file " + path);
  std::vector<TrialRecord> out;
  std::map<int, std::size_t> current;  // trial id -> index of its latest header
  std::string line;
  while (std::getline(in, line)) {
    const nlohmann::json j = nlohmann::json::parse(line);
    const int trial = j.at("trial").get<int>();
    if (j.contains("spawn_x")) {
      TrialRecord r;
      r.level = j.at("level").get<int>();
      r.terrain = j.at("terrain").get<int>();
      r.spawn_x = j.at("spawn_x").get<double>();
      current[trial] = out.size();
      out.push_back(r);
      continue;
    }
    TrialRecord& r = out.at(current.at(trial));
    r.max_advance = std::max(r.max_advance, j.at("x").get<double>() - r.spawn_x);
    r.steps = j.at("step").get<int>();
    if (j.at("done").get<bool>()) r.failed = j.at("failure").get<bool>();
  }
  for (TrialRecord& r : out) r.success = r.max_advance >= distance;
  return out;
}

}  // namespace sparsestep
