#include "sparsestep/sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace sparsestep {

namespace {

double uniform(std::mt19937_64& rng, std::pair<double, double> range) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return range.first + (range.second - range.first) * u;
}

Eigen::Vector3d gravity_vector(const SimConfig& c) { return {0.0, 0.0, -c.gravity}; }

Eigen::Quaterniond exp_map(const Eigen::Vector3d& rotation) {
  const double angle = rotation.norm();
  if (angle < 1e-12) {
    Eigen::Quaterniond q(1.0, 0.5 * rotation.x(), 0.5 * rotation.y(), 0.5 * rotation.z());
    return q.normalized();
  }
  return Eigen::Quaterniond(Eigen::AngleAxisd(angle, rotation / angle));
}

}  // namespace

double RobotState::yaw() const {
  const Eigen::Matrix3d r = rotation();
  return std::atan2(r(1, 0), r(0, 0));
}

double RobotState::pitch() const {
  const Eigen::Matrix3d r = rotation();
  return std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
}

double RobotState::roll() const {
  const Eigen::Matrix3d r = rotation();
  return std::atan2(r(2, 1), r(2, 2));
}

Eigen::Vector3d RobotState::base_linear_velocity_body() const {
  return orientation.conjugate() * base_linear_velocity;
}

Eigen::Vector3d RobotState::base_angular_velocity_body() const {
  return orientation.conjugate() * base_angular_velocity;
}

Eigen::Vector3d SimConfig::hip(int foot) const {
  const double sx = (foot == kLF || foot == kRF) ? 1.0 : -1.0;
  const double sy = (foot == kLF || foot == kLH) ? 1.0 : -1.0;
  return {sx * hip_x, sy * hip_y, 0.0};
}

Eigen::Vector3d SimConfig::nominal_foot(int foot) const {
  return hip(foot) + Eigen::Vector3d(0.0, 0.0, -nominal_height);
}

Eigen::Vector3d SimConfig::joint_low() const {
  return {-workspace_horizontal, -workspace_horizontal, workspace_low + nominal_height};
}

Eigen::Vector3d SimConfig::joint_high() const {
  return {workspace_horizontal, workspace_horizontal, workspace_high + nominal_height};
}

RandomizationConfig RandomizationConfig::for_task(TerrainType type) {
  RandomizationConfig r;
  switch (type) {
    case TerrainType::kStonesEverywhere:
      r.episode_length_range = {5.0, 7.0};
      r.target_distance_range = {1.5, 4.9};
      r.lateral_offset_range = {-0.5, 0.5};
      r.random_heading = true;
      break;
    case TerrainType::kStones2Rows:
      r.episode_length_range = {6.0, 8.0};
      r.target_distance_range = {3.5, 4.5};
      r.lateral_offset_range = {-0.1, 0.1};
      r.scan_drift_range = {-0.05, 0.05};
      r.random_heading = false;
      break;
    case TerrainType::kBalanceBeams:
      r.episode_length_range = {8.0, 10.0};
      r.target_distance_range = {3.5, 4.5};
      r.lateral_offset_range = {-0.1, 0.1};
      r.scan_drift_range = {-0.025, 0.025};
      r.com_bias_x = {-0.15, 0.15};
      r.com_bias_y = {-0.05, 0.05};
      r.com_bias_z = {-0.1, 0.2};
      r.random_heading = false;
      break;
    case TerrainType::kSteppingBeams:
      r.episode_length_range = {5.0, 7.0};
      r.target_distance_range = {2.5, 4.0};
      r.lateral_offset_range = {-0.1, 0.1};
      r.random_heading = false;
      break;
  }
  return r;
}

TerrainPool::TerrainPool(TerrainType type, int variants, std::uint64_t seed, int max_level)
    : TerrainPool(type, variants, seed, max_level, default_layout(type)) {}

TerrainPool::TerrainPool(TerrainType type, int variants, std::uint64_t seed, int max_level,
                         const TerrainLayout& layout)
    : type_(type), variants_(variants), max_level_(max_level) {
  if (variants <= 0) throw std::invalid_argument("terrain pool needs at least one variant");
  if (max_level < 0 || max_level > kMaxLevel) throw std::invalid_argument("bad pool max level");
  grids_.reserve(static_cast<std::size_t>(variants) * (max_level + 1));
  for (int level = 0; level <= max_level; ++level) {
    const TerrainParams params = level_params(type, level);
    for (int v = 0; v < variants; ++v) {
      const std::uint64_t grid_seed = seed * 1000003ULL + static_cast<std::uint64_t>(level) * 7919 + v;
      grids_.push_back(std::make_shared<const TerrainGrid>(generate(params, grid_seed, layout)));
    }
  }
}

const std::shared_ptr<const TerrainGrid>& TerrainPool::get(int level, int variant) const {
  if (level < 0 || level > max_level_ || variant < 0 || variant >= variants_) {
    throw std::out_of_range("terrain pool index out of range");
  }
  return grids_[static_cast<std::size_t>(level) * variants_ + variant];
}

Simulator::Simulator(SimConfig config) : config_(std::move(config)) {
  if (config_.substeps <= 0 || config_.dt <= 0.0) throw std::invalid_argument("bad sim timing");
}

Vec12 Simulator::clip_action(const Vec12& action) const {
  const Eigen::Vector3d lo = config_.joint_low();
  const Eigen::Vector3d hi = config_.joint_high();
  Vec12 out;
  for (int f = 0; f < kNumFeet; ++f) {
    for (int k = 0; k < 3; ++k) out[3 * f + k] = std::clamp(action[3 * f + k], lo[k], hi[k]);
  }
  return out;
}

RobotState Simulator::standing_state(const TerrainGrid& grid, const Eigen::Vector2d& xy,
                                     double yaw, const Eigen::Vector3d& com_bias) const {
  RobotState s;
  s.orientation = Eigen::Quaterniond(Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()));
  s.com_bias = com_bias;
  const Eigen::Matrix3d r = s.rotation();
  double ground = 0.0;
  for (int f = 0; f < kNumFeet; ++f) {
    const Eigen::Vector3d foot = r * config_.nominal_foot(f);
    ground = std::max(ground, grid.height_at(xy.x() + foot.x(), xy.y() + foot.y()).height);
  }
  s.base_position = {xy.x(), xy.y(), ground + config_.nominal_height - config_.standing_sag()};
  for (int f = 0; f < kNumFeet; ++f) {
    Eigen::Vector3d foot = s.base_position + r * config_.nominal_foot(f);
    const TerrainSample support = grid.height_at(foot.x(), foot.y());
    if (support.steppable) {
      foot.z() = support.height;
      s.contact_flags[f] = true;
    }
    s.foot_positions[f] = foot;
    s.foot_velocities[f].setZero();
  }
  refresh_kinematics(s);
  return s;
}

EpisodeStart Simulator::reset(int level, const TerrainPool& pool, const RandomizationConfig& rand,
                              std::mt19937_64& rng) const {
  EpisodeStart start;
  level = std::clamp(level, 0, pool.max_level());
  const int variant = static_cast<int>(rng() % static_cast<std::uint64_t>(pool.variants()));
  start.grid = pool.get(level, variant);
  const TerrainGrid& grid = *start.grid;

  const Eigen::Vector3d bias(uniform(rng, rand.com_bias_x), uniform(rng, rand.com_bias_y),
                             uniform(rng, rand.com_bias_z));
  start.state = standing_state(grid, grid.spawn, 0.0, bias);

  Command& cmd = start.command;
  cmd.episode_length = uniform(rng, rand.episode_length_range);
  const double distance = uniform(rng, rand.target_distance_range);
  const double lateral = uniform(rng, rand.lateral_offset_range);
  cmd.target_position = grid.spawn + Eigen::Vector2d(distance, lateral);
  if (rand.random_heading) {
    // (-pi, pi]
    cmd.target_heading = M_PI - uniform(rng, {0.0, 2.0 * M_PI});
  } else {
    cmd.target_heading = 0.0;
  }
  start.scan_drift = {uniform(rng, rand.scan_drift_range), uniform(rng, rand.scan_drift_range)};
  return start;
}

void Simulator::refresh_kinematics(RobotState& s) const {
  const Eigen::Matrix3d r = s.rotation();
  const Eigen::Matrix3d rt = r.transpose();
  for (int f = 0; f < kNumFeet; ++f) {
    const Eigen::Vector3d hip_offset = r * config_.hip(f);
    const Eigen::Vector3d rel = s.foot_positions[f] - s.base_position - hip_offset;
    const Eigen::Vector3d hip_velocity =
        s.base_linear_velocity + s.base_angular_velocity.cross(hip_offset);
    const Eigen::Vector3d q =
        rt * rel - Eigen::Vector3d(0.0, 0.0, -config_.nominal_height);
    const Eigen::Vector3d qd =
        rt * (s.foot_velocities[f] - hip_velocity - s.base_angular_velocity.cross(rel));
    s.joint_coords.segment<3>(3 * f) = q;
    s.joint_velocities.segment<3>(3 * f) = qd;
  }
  s.projected_gravity = rt * Eigen::Vector3d(0.0, 0.0, -1.0);
}

void Simulator::substep(RobotState& s, const Vec12& target, const TerrainGrid& grid, double h,
                        StepEvents& events) const {
  const SimConfig& c = config_;
  const Eigen::Vector3d g = gravity_vector(c);
  const Eigen::Matrix3d r = s.rotation();
  const Eigen::Matrix3d rt = r.transpose();
  const Eigen::Vector3d bias_w = r * s.com_bias;
  const Eigen::Vector3d com = s.base_position + bias_w;
  Eigen::Vector3d com_velocity = s.base_linear_velocity + s.base_angular_velocity.cross(bias_w);
  const Eigen::Vector3d& omega = s.base_angular_velocity;

  Eigen::Vector3d force = c.base_mass * g;
  Eigen::Vector3d torque = -c.angular_damping * omega;
  std::array<Eigen::Vector3d, kNumFeet> foot_accel{};
  std::array<bool, kNumFeet> sliding{};

  for (int f = 0; f < kNumFeet; ++f) {
    const Eigen::Vector3d hip_offset = r * c.hip(f);
    const Eigen::Vector3d hip_w = s.base_position + hip_offset;
    const Eigen::Vector3d rel = s.foot_positions[f] - hip_w;
    const Eigen::Vector3d hip_velocity = s.base_linear_velocity + omega.cross(hip_offset);
    const Eigen::Vector3d q = rt * rel + Eigen::Vector3d(0.0, 0.0, c.nominal_height);
    const Eigen::Vector3d qd = rt * (s.foot_velocities[f] - hip_velocity - omega.cross(rel));
    Eigen::Vector3d tau = c.kp * (target.segment<3>(3 * f) - q) - c.kd * qd;
    tau = tau.cwiseMax(-c.torque_limit).cwiseMin(c.torque_limit);
    s.actuator_forces.segment<3>(3 * f) = tau;

    // Actuator pushes the foot with f_w and the base with -f_w at the hip.
    const Eigen::Vector3d f_w = r * tau;
    force -= f_w;
    torque += (hip_w - com).cross(-f_w);

    s.contact_forces[f] = 0.0;
    foot_accel[f] = f_w / c.foot_mass + g;
    if (s.contact_flags[f]) {
      Eigen::Vector3d reaction = -f_w - c.foot_mass * g;
      if (reaction.z() <= 0.0) {
        s.contact_flags[f] = false;
        events.liftoff[f] = true;
        continue;
      }
      const double tangential = reaction.head<2>().norm();
      const double limit = c.friction * reaction.z();
      if (tangential > limit) {
        reaction.head<2>() *= limit / tangential;
        sliding[f] = true;
        foot_accel[f] = (f_w + c.foot_mass * g + reaction) / c.foot_mass;
        foot_accel[f].z() = 0.0;
      } else {
        foot_accel[f].setZero();
      }
      s.contact_forces[f] = reaction.norm();
    }
  }

  // Semi-implicit Euler; the constant gravity term is integrated exactly.
  com_velocity += (force / c.base_mass) * h;
  const Eigen::Matrix3d inertia_w = r * c.base_inertia.asDiagonal() * rt;
  const Eigen::Vector3d angular_momentum_rate = torque - omega.cross(inertia_w * omega);
  s.base_angular_velocity += inertia_w.ldlt().solve(angular_momentum_rate) * h;
  const Eigen::Vector3d new_com = com + com_velocity * h - 0.5 * h * h * g;
  s.orientation = (exp_map(s.base_angular_velocity * h) * s.orientation).normalized();
  const Eigen::Matrix3d r_new = s.rotation();
  const Eigen::Vector3d bias_new = r_new * s.com_bias;
  s.base_position = new_com - bias_new;
  s.base_linear_velocity = com_velocity - s.base_angular_velocity.cross(bias_new);

  for (int f = 0; f < kNumFeet; ++f) {
    Eigen::Vector3d& p = s.foot_positions[f];
    Eigen::Vector3d& v = s.foot_velocities[f];
    if (s.contact_flags[f] && !sliding[f]) {
      v.setZero();
    } else if (s.contact_flags[f]) {
      v.head<2>() += foot_accel[f].head<2>() * h;
      v.z() = 0.0;
      p.head<2>() += v.head<2>() * h;
      const TerrainSample support = grid.height_at(p.x(), p.y());
      if (support.steppable && support.height >= p.z() - c.contact_tolerance) {
        p.z() = support.height;
      } else {
        s.contact_flags[f] = false;
        events.liftoff[f] = true;
      }
    } else {
      v += foot_accel[f] * h;
      p += v * h - 0.5 * h * h * g;
      const TerrainSample support = grid.height_at(p.x(), p.y());
      if (support.steppable && p.z() <= support.height + c.contact_tolerance) {
        p.z() = support.height;
        v.setZero();
        s.contact_flags[f] = true;
        events.touchdown[f] = true;
      }
    }

    // Leg workspace: a foot outside its box is dragged along with the base.
    const Eigen::Vector3d hip_offset = r_new * c.hip(f);
    const Eigen::Vector3d rel_b = r_new.transpose() * (p - s.base_position - hip_offset);
    const Eigen::Vector3d lo(-c.workspace_horizontal, -c.workspace_horizontal, c.workspace_low);
    const Eigen::Vector3d hi(c.workspace_horizontal, c.workspace_horizontal, c.workspace_high);
    const Eigen::Vector3d clamped = rel_b.cwiseMax(lo).cwiseMin(hi);
    if (clamped != rel_b) {
      if (s.contact_flags[f]) {
        s.contact_flags[f] = false;
        events.liftoff[f] = true;
      }
      const Eigen::Vector3d rel_w = r_new * clamped + hip_offset;
      p = s.base_position + rel_w;
      v = s.base_linear_velocity + s.base_angular_velocity.cross(rel_w);
    }
  }
}

StepEvents Simulator::step(RobotState& state, const Vec12& action, const TerrainGrid& grid) const {
  StepEvents events;
  if (!action.allFinite()) {
    state.fault = true;
    events.fault = true;
    return events;
  }
  const Vec12 target = clip_action(action);
  const double h = config_.dt / config_.substeps;
  for (int i = 0; i < config_.substeps; ++i) substep(state, target, grid, h, events);
  refresh_kinematics(state);
  state.previous_action = target;
  state.step_count += 1;
  state.time = state.step_count * config_.dt;
  if (!state.base_position.allFinite() || !state.base_linear_velocity.allFinite()) {
    state.fault = true;
    events.fault = true;
  }
  return events;
}

std::pair<RobotState, StepEvents> Simulator::step(const RobotState& state, const Vec12& action,
                                                  const TerrainGrid& grid) const {
  RobotState next = state;
  StepEvents events = step(next, action, grid);
  return {std::move(next), events};
}

TerminationFlags Simulator::check_termination(const RobotState& s, const Command& command,
                                              const TerrainGrid& grid) const {
  TerminationFlags t;
  const Eigen::Vector3d& p = s.base_position;
  t.fault = s.fault || !p.allFinite();
  if (!t.fault) {
    t.out_of_bounds = !grid.contains(p.x(), p.y());
    t.tilt = std::abs(s.roll()) > config_.max_tilt || std::abs(s.pitch()) > config_.max_tilt;
    const TerrainSample under = grid.height_at(p.x(), p.y());
    t.collision = under.steppable && p.z() < under.height;
    const double support = grid.max_support_height(p.x(), p.y(), config_.support_radius);
    t.fall = p.z() < support - config_.fall_depth;
  }
  if (t.fault || t.out_of_bounds || t.tilt || t.collision || t.fall) {
    t.kind = TerminationKind::kFailure;
  } else if (s.time >= command.episode_length - 1e-9) {
    t.kind = TerminationKind::kTimeout;
  }
  return t;
}

void Simulator::batch_step(std::span<RobotState> states, std::span<const Vec12> actions,
                           std::span<const TerrainGrid* const> grids,
                           std::span<StepEvents> events, int workers) const {
  const std::size_t n = states.size();
  if (actions.size() != n || grids.size() != n || events.size() != n) {
    throw std::invalid_argument("batch_step: batch lengths differ");
  }
  auto run = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) events[i] = step(states[i], actions[i], *grids[i]);
  };
  workers = std::max(1, workers);
  if (workers == 1 || n < 2) {
    run(0, n);
    return;
  }
  std::vector<std::jthread> pool;
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t begin = 0; begin < n; begin += chunk) {
    pool.emplace_back(run, begin, std::min(n, begin + chunk));
  }
}

Mirror mirror_from_string(std::string_view tag) {
  if (tag == "id" || tag == "identity") return Mirror::kIdentity;
  if (tag == "LR" || tag == "lr") return Mirror::kLeftRight;
  if (tag == "FB" || tag == "fb") return Mirror::kFrontBack;
  if (tag == "LRFB" || tag == "lrfb") return Mirror::kBoth;
  throw std::invalid_argument("unknown mirror tag: " + std::string(tag));
}

std::array<int, kNumFeet> foot_permutation(Mirror m) {
  switch (m) {
    case Mirror::kIdentity: return {kLF, kRF, kLH, kRH};
    case Mirror::kLeftRight: return {kRF, kLF, kRH, kLH};
    case Mirror::kFrontBack: return {kLH, kRH, kLF, kRF};
    case Mirror::kBoth: return {kRH, kLH, kRF, kLF};
  }
  throw std::invalid_argument("bad mirror");
}

Eigen::Vector3d mirror_signs(Mirror m) {
  switch (m) {
    case Mirror::kIdentity: return {1.0, 1.0, 1.0};
    case Mirror::kLeftRight: return {1.0, -1.0, 1.0};
    case Mirror::kFrontBack: return {-1.0, 1.0, 1.0};
    case Mirror::kBoth: return {-1.0, -1.0, 1.0};
  }
  throw std::invalid_argument("bad mirror");
}

Vec12 mirror_joint_vector(const Vec12& v, Mirror m) {
  const auto perm = foot_permutation(m);
  const Eigen::Vector3d sign = mirror_signs(m);
  Vec12 out;
  for (int f = 0; f < kNumFeet; ++f) {
    out.segment<3>(3 * perm[f]) = v.segment<3>(3 * f).cwiseProduct(sign);
  }
  return out;
}

Reflection Reflection::about(const RobotState& s, Mirror m) {
  return {s.base_position, s.yaw(), m};
}

Eigen::Matrix3d Reflection::body() const { return mirror_signs(mirror).asDiagonal(); }

Eigen::Matrix3d Reflection::world() const {
  const Eigen::Matrix3d rz = Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  return rz * body() * rz.transpose();
}

RobotState mirror_state(const RobotState& s, const Reflection& refl) {
  const Eigen::Matrix3d mw = refl.world();
  const Eigen::Matrix3d mb = refl.body();
  const double det = mb.determinant();
  const auto perm = foot_permutation(refl.mirror);
  auto point = [&](const Eigen::Vector3d& p) -> Eigen::Vector3d {
    return refl.pivot + mw * (p - refl.pivot);
  };

  RobotState out = s;
  out.base_position = point(s.base_position);
  out.orientation = Eigen::Quaterniond(mw * s.rotation() * mb).normalized();
  out.base_linear_velocity = mw * s.base_linear_velocity;
  out.base_angular_velocity = det * (mw * s.base_angular_velocity);
  out.projected_gravity = mb * s.projected_gravity;
  out.com_bias = mb * s.com_bias;
  for (int f = 0; f < kNumFeet; ++f) {
    const int g = perm[f];
    out.foot_positions[g] = point(s.foot_positions[f]);
    out.foot_velocities[g] = mw * s.foot_velocities[f];
    out.contact_forces[g] = s.contact_forces[f];
    out.contact_flags[g] = s.contact_flags[f];
  }
  out.joint_coords = mirror_joint_vector(s.joint_coords, refl.mirror);
  out.joint_velocities = mirror_joint_vector(s.joint_velocities, refl.mirror);
  out.actuator_forces = mirror_joint_vector(s.actuator_forces, refl.mirror);
  out.previous_action = mirror_joint_vector(s.previous_action, refl.mirror);
  return out;
}

Command mirror_command(const Command& c, const Reflection& refl) {
  const Eigen::Matrix3d mw = refl.world();
  const Eigen::Matrix3d mb = refl.body();
  Command out = c;
  const Eigen::Vector3d target(c.target_position.x(), c.target_position.y(), refl.pivot.z());
  out.target_position = (refl.pivot + mw * (target - refl.pivot)).head<2>();
  // The target pose mirrors like the base frame, front-back relabelled.
  const Eigen::Matrix3d target_frame =
      Eigen::AngleAxisd(c.target_heading, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  const Eigen::Vector3d mirrored = mw * target_frame * mb.col(0);
  out.target_heading = std::atan2(mirrored.y(), mirrored.x());
  out.velocity = (mb * Eigen::Vector3d(c.velocity.x(), c.velocity.y(), 0.0)).head<2>();
  out.yaw_rate = mb.determinant() * c.yaw_rate;
  return out;
}

}  // namespace sparsestep
