#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "sparsestep/rewards.hpp"
#include "json_reader.hpp"

namespace sparsestep {

namespace {

using nlohmann::json;

json mask_json(double weight, const MaskParams& m) {
  json j = {{"weight", weight}};
  if (m.window > 0.0) j["window"] = m.window;
  if (m.radius > 0.0) j["radius"] = m.radius;
  if (m.heading > 0.0) j["heading"] = m.heading;
  return j;
}

class Reader : public detail::JsonReader {
 public:
  using JsonReader::JsonReader;
  void mask(MaskParams& m) {
    get("window", m.window);
    get("radius", m.radius);
    get("heading", m.heading);
  }
};

}  // namespace

std::string profile_to_json(const RewardProfile& p) {
  json j;
  j["name"] = p.name;
  j["task"] = p.task;
  j["velocity_mode"] = p.velocity_mode;
  j["position_tracking"] = mask_json(p.position_tracking, p.position_tracking_mask);
  j["heading_tracking"] = mask_json(p.heading_tracking, p.heading_tracking_mask);
  j["termination"] = {{"weight", p.termination}};
  j["collision"] = {{"weight", p.collision}};
  j["joint_velocity"] = {{"weight", p.joint_velocity}};
  j["joint_velocity_limit"] = {{"weight", p.joint_velocity_limit},
                               {"fraction", p.joint_velocity_limit_fraction}};
  j["base_accel"] = {{"weight", p.base_accel}, {"angular_scale", p.base_accel_angular_scale}};
  j["feet_accel"] = {{"weight", p.feet_accel}};
  j["action_rate"] = {{"weight", p.action_rate}};
  j["torque"] = {{"weight", p.torque}};
  j["torque_limit"] = {{"weight", p.torque_limit}, {"fraction", p.torque_limit_fraction}};
  j["contact_force"] = {{"weight", p.contact_force}, {"threshold", p.contact_force_threshold}};
  j["dont_wait"] = {{"weight", p.dont_wait}, {"radius", p.dont_wait_radius},
                    {"speed", p.dont_wait_speed}};
  j["move_in_direction"] = {{"weight", p.move_in_direction},
                            {"iterations", p.move_in_direction_iterations}};
  j["stand_still"] = mask_json(p.stand_still, p.stand_still_mask);
  j["aggressive_motion"] = {{"weight", p.aggressive_motion}, {"speed", p.aggressive_speed}};
  j["stand_pose"] = mask_json(p.stand_pose, p.stand_pose_mask);
  j["stand_pose"]["height"] = p.stand_pose_height;
  j["linear_velocity_tracking"] = {{"weight", p.linear_velocity_tracking},
                                   {"sigma", p.tracking_sigma}};
  j["yaw_rate_tracking"] = {{"weight", p.yaw_rate_tracking}};
  return j.dump(2);
}

RewardProfile profile_from_json(const std::string& text) {
  const json j = json::parse(text);
  RewardProfile p;
  Reader top(j, "profile");
  top.get("name", p.name);
  top.get("task", p.task);
  top.get("velocity_mode", p.velocity_mode);

  auto term = [&](const char* key, auto&& fill) {
    json dummy = json::object();
    const json& obj = j.contains(key) ? j.at(key) : dummy;
    Reader r(obj, key);
    fill(r);
    r.finish();
    top.get(key, dummy);
  };
  term("position_tracking", [&](Reader& r) {
    r.get("weight", p.position_tracking);
    r.mask(p.position_tracking_mask);
  });
  term("heading_tracking", [&](Reader& r) {
    r.get("weight", p.heading_tracking);
    r.mask(p.heading_tracking_mask);
  });
  term("termination", [&](Reader& r) { r.get("weight", p.termination); });
  term("collision", [&](Reader& r) { r.get("weight", p.collision); });
  term("joint_velocity", [&](Reader& r) { r.get("weight", p.joint_velocity); });
  term("joint_velocity_limit", [&](Reader& r) {
    r.get("weight", p.joint_velocity_limit);
    r.get("fraction", p.joint_velocity_limit_fraction);
  });
  term("base_accel", [&](Reader& r) {
    r.get("weight", p.base_accel);
    r.get("angular_scale", p.base_accel_angular_scale);
  });
  term("feet_accel", [&](Reader& r) { r.get("weight", p.feet_accel); });
  term("action_rate", [&](Reader& r) { r.get("weight", p.action_rate); });
  term("torque", [&](Reader& r) { r.get("weight", p.torque); });
  term("torque_limit", [&](Reader& r) {
    r.get("weight", p.torque_limit);
    r.get("fraction", p.torque_limit_fraction);
  });
  term("contact_force", [&](Reader& r) {
    r.get("weight", p.contact_force);
    r.get("threshold", p.contact_force_threshold);
  });
  term("dont_wait", [&](Reader& r) {
    r.get("weight", p.dont_wait);
    r.get("radius", p.dont_wait_radius);
    r.get("speed", p.dont_wait_speed);
  });
  term("move_in_direction", [&](Reader& r) {
    r.get("weight", p.move_in_direction);
    r.get("iterations", p.move_in_direction_iterations);
  });
  term("stand_still", [&](Reader& r) {
    r.get("weight", p.stand_still);
    r.mask(p.stand_still_mask);
  });
  term("aggressive_motion", [&](Reader& r) {
    r.get("weight", p.aggressive_motion);
    r.get("speed", p.aggressive_speed);
  });
  term("stand_pose", [&](Reader& r) {
    r.get("weight", p.stand_pose);
    r.mask(p.stand_pose_mask);
    r.get("height", p.stand_pose_height);
  });
  term("linear_velocity_tracking", [&](Reader& r) {
    r.get("weight", p.linear_velocity_tracking);
    r.get("sigma", p.tracking_sigma);
  });
  term("yaw_rate_tracking", [&](Reader& r) { r.get("weight", p.yaw_rate_tracking); });
  top.finish();
  return p;
}

RewardProfile builtin_profile(std::string_view name) {
  RewardProfile p;
  if (name == "generalist") return p;
  p.name = std::string(name);
  p.task = std::string(name);
  if (name == "stepping_beams") return p;
  if (name == "velocity_ablation") {
    p.task = "generalist";
    p.velocity_mode = true;
    p.position_tracking = 0.0;
    p.heading_tracking = 0.0;
    p.dont_wait = 0.0;
    p.move_in_direction = 0.0;
    p.stand_still = 0.0;
    return p;
  }
  if (name == "s2" || name == "bb") {
    p.position_tracking = 25.0;
    p.position_tracking_mask = {4.0, 0.0, 0.0};
    p.heading_tracking = 12.0;
    p.heading_tracking_mask = {4.0, 2.5, 0.0};
    p.aggressive_motion = -5.0;
    p.stand_pose = -5.0;
    if (name == "bb") {
      p.torque = -2e-5;
      p.torque_limit = -0.5;
      p.torque_limit_fraction = 0.8;
    }
    return p;
  }
  throw std::invalid_argument("unknown reward profile: " + std::string(name));
}

RewardProfile load_reward_profile(const std::string& name_or_path) {
  if (std::filesystem::is_regular_file(name_or_path)) {
    std::ifstream in(name_or_path);
    std::stringstream ss;
    ss << in.rdbuf();
    return profile_from_json(ss.str());
  }
  return builtin_profile(name_or_path);
}

void save_reward_profile(const RewardProfile& profile, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << profile_to_json(profile) << '\n';
}

}  // namespace sparsestep
