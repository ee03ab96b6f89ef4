#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "sparsestep/rewards.hpp"
#include "support/random_states.hpp"
#include "support/reward_fixtures.hpp"

using namespace sparsestep;
using namespace sparsestep::testing;

TEST(Masks, DurationHandValues) {
  EXPECT_DOUBLE_EQ(mask_duration(5.5, 6.0, 2.0), 0.5);
  EXPECT_DOUBLE_EQ(mask_duration(3.0, 6.0, 2.0), 0.0);
  EXPECT_DOUBLE_EQ(mask_duration(6.0, 6.0, 1.0), 1.0);
  EXPECT_THROW(mask_duration(1.0, 6.0, 0.0), std::invalid_argument);
  EXPECT_THROW(mask_duration(1.0, 6.0, -1.0), std::invalid_argument);
}

TEST(Masks, RangesOnRandomInputs) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    const double t0 = 0.1 + 4.0 * u(rng);
    const double T = 5.0 + 3.0 * u(rng);
    const double d = mask_duration(T * u(rng), T, t0);
    EXPECT_TRUE(d == 0.0 || (d > 0.0 && d <= 1.0 / t0));
    const double p = mask_position({u(rng), u(rng)}, {u(rng), u(rng)}, 0.5);
    EXPECT_TRUE(p == 0.0 || p == 1.0);
    const double h = mask_heading(6.0 * u(rng), 6.0 * u(rng), 0.5);
    EXPECT_TRUE(h == 0.0 || h == 1.0);
  }
}

TEST(Masks, HeadingWraps) {
  EXPECT_DOUBLE_EQ(mask_heading(M_PI - 0.1, -M_PI + 0.1, 0.5), 1.0);
}

TEST(TaskReward, HandValues) {
  EXPECT_DOUBLE_EQ(task_reward(Eigen::Vector2d(1, 2), Eigen::Vector2d(1, 2), 5.0, 6.0, 2.0, 10.0), 5.0);
  EXPECT_DOUBLE_EQ(task_reward(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 0), 5.0, 6.0, 2.0, 10.0), 2.5);
  EXPECT_DOUBLE_EQ(task_reward(Eigen::Vector2d(0, 0), Eigen::Vector2d(0, 0), 4.0, 6.0, 2.0, 10.0), 0.0);
  EXPECT_DOUBLE_EQ(task_reward_heading(M_PI - 0.5, -M_PI + 0.5, 5.0, 6.0, 2.0, 10.0),
                   5.0 / (1.0 + 1.0));
}

TEST(TaskReward, MaximizedAtTarget) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 1.0);
  const Eigen::Vector2d target(1.0, -0.5);
  const double best = task_reward(target, target, 5.5, 6.0, 2.0, 10.0);
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Vector2d chi = target + Eigen::Vector2d(n(rng), n(rng));
    EXPECT_LT(task_reward(chi, target, 5.5, 6.0, 2.0, 10.0), best);
  }
}

TEST(Fixtures, EveryHandValue) {
  for (const auto& f : fixtures::reward_fixtures()) {
    fixtures::RewardScene scene;
    f.setup(scene);
    const RewardBreakdown b = scene.evaluate();
    EXPECT_NEAR(b[f.term], f.expected, 1e-9) << f.name;
  }
}

TEST(Fixtures, AtLeastTwenty) { EXPECT_GE(fixtures::reward_fixtures().size(), 20u); }


TEST(Breakdown, TotalIsExactSum) {
  const Simulator sim;
  const TerrainGrid g = flat_world();
  std::mt19937_64 rng(3);
  const RewardProfile profiles[] = {builtin_profile("generalist"), builtin_profile("bb"),
                                    builtin_profile("velocity_ablation")};
  for (int i = 0; i < 100000; ++i) {
    const Transition t = random_transition(sim, g, rng);
    const RewardBreakdown b = evaluate(t, g, profiles[i % 3], sim.config(), i % 7 == 0);
    double sum = 0.0;
    for (double v : b.terms) sum += v;
    ASSERT_EQ(sum, b.total);
  }
}

TEST(Breakdown, GeneralistHasNoAggressiveOrPoseTerm) {
  const Simulator sim;
  const TerrainGrid g = flat_world();
  std::mt19937_64 rng(4);
  const RewardProfile p = builtin_profile("generalist");
  for (int i = 0; i < 2000; ++i) {
    Transition t = random_transition(sim, g, rng);
    t.next.base_linear_velocity *= 5.0;
    const RewardBreakdown b = evaluate(t, g, p, sim.config());
    EXPECT_EQ(b[RewardTerm::kAggressiveMotion], 0.0);
    EXPECT_EQ(b[RewardTerm::kStandPose], 0.0);
  }
}

TEST(Breakdown, VelocityModeSharesRegularizers) {
  const Simulator sim;
  const TerrainGrid g = flat_world();
  std::mt19937_64 rng(5);
  const RewardProfile nav = builtin_profile("generalist");
  const RewardProfile vel = builtin_profile("velocity_ablation");
  for (int i = 0; i < 500; ++i) {
    const Transition t = random_transition(sim, g, rng);
    const RewardBreakdown a = evaluate(t, g, nav, sim.config());
    const RewardBreakdown b = evaluate(t, g, vel, sim.config());
    for (RewardTerm term : {RewardTerm::kTermination, RewardTerm::kCollision,
                            RewardTerm::kJointVelocity, RewardTerm::kJointVelocityLimit,
                            RewardTerm::kBaseAccel, RewardTerm::kFeetAccel,
                            RewardTerm::kActionRate, RewardTerm::kTorque,
                            RewardTerm::kTorqueLimit, RewardTerm::kContactForce}) {
      EXPECT_EQ(a[term], b[term]) << reward_term_name(term);
    }
    EXPECT_EQ(b[RewardTerm::kPositionTracking], 0.0);
    EXPECT_EQ(a[RewardTerm::kLinearVelocityTracking], 0.0);
  }
}

TEST(Breakdown, VelocityTrackingHandValues) {
  RobotState s;
  Command c;
  c.velocity = {0.8, 0.0};
  s.base_linear_velocity = {0.8, 0.0, 0.0};
  const RewardProfile p = builtin_profile("velocity_ablation");
  EXPECT_DOUBLE_EQ(velocity_tracking_rewards(s, c, p)[RewardTerm::kLinearVelocityTracking], 1.0);
  s.base_linear_velocity = {0.0, 0.8, 0.0};
  EXPECT_NEAR(velocity_tracking_rewards(s, c, p)[RewardTerm::kLinearVelocityTracking],
              std::exp(-1.28 / 0.25), 1e-12);
  c.yaw_rate = 0.5;
  s.base_angular_velocity = {0.0, 0.0, 0.5};
  EXPECT_DOUBLE_EQ(velocity_tracking_rewards(s, c, p)[RewardTerm::kYawRateTracking], 0.5);
}

TEST(Invariance, MirroredTransitionsKeepEveryTerm) {
  const Simulator sim;
  const TerrainGrid g = flat_world();
  std::mt19937_64 rng(6);
  const RewardProfile profiles[] = {builtin_profile("generalist"), builtin_profile("s2"),
                                    builtin_profile("bb")};
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Transition t = random_transition(sim, g, rng);
    const RewardProfile& p = profiles[i % 3];
    const RewardBreakdown base = evaluate(t, g, p, sim.config());
    for (Mirror m : {Mirror::kLeftRight, Mirror::kFrontBack, Mirror::kBoth}) {
      const Reflection r = Reflection::about(t.prev, m);
      Transition mt;
      mt.prev = mirror_state(t.prev, r);
      mt.action = mirror_joint_vector(t.action, m);
      mt.next = mt.prev;
      sim.step(mt.next, mt.action, g);
      mt.command = mirror_command(t.command, r);
      const RewardBreakdown mb = evaluate(mt, g, p, sim.config());
      for (int k = 0; k < kNumRewardTerms; ++k) {
        worst = std::max(worst, std::abs(mb.terms[k] - base.terms[k]));
        EXPECT_NEAR(mb.terms[k], base.terms[k], 1e-6) << reward_term_name(k);
      }
    }
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(Profiles, BuiltinsMatchTableRows) {
  const RewardProfile g = builtin_profile("generalist");
  EXPECT_EQ(g.position_tracking, 10.0);
  EXPECT_EQ(g.position_tracking_mask.window, 2.0);
  EXPECT_EQ(g.heading_tracking, 5.0);
  EXPECT_EQ(g.heading_tracking_mask.radius, 2.0);
  EXPECT_EQ(g.heading_tracking_mask.window, 4.0);
  EXPECT_EQ(g.termination, -200.0);
  EXPECT_EQ(g.aggressive_motion, 0.0);
  EXPECT_EQ(g.stand_pose, 0.0);

  const RewardProfile s2 = builtin_profile("s2");
  EXPECT_EQ(s2.position_tracking, 25.0);
  EXPECT_EQ(s2.position_tracking_mask.window, 4.0);
  EXPECT_EQ(s2.heading_tracking, 12.0);
  EXPECT_EQ(s2.heading_tracking_mask.radius, 2.5);
  EXPECT_EQ(s2.aggressive_motion, -5.0);
  EXPECT_EQ(s2.stand_pose, -5.0);
  EXPECT_EQ(s2.torque, -1e-5);

  const RewardProfile bb = builtin_profile("bb");
  EXPECT_EQ(bb.torque, -2e-5);
  EXPECT_EQ(bb.torque_limit, -0.5);
  EXPECT_EQ(bb.torque_limit_fraction, 0.8);
  EXPECT_THROW(builtin_profile("nope"), std::invalid_argument);
}

TEST(Profiles, ShippedFilesEqualBuiltins) {
  for (const char* name : {"generalist", "s2", "bb", "stepping_beams", "velocity_ablation"}) {
    const std::string path = std::string(SPARSESTEP_SOURCE_DIR) + "/profiles/" + name + ".json";
    ASSERT_TRUE(std::filesystem::exists(path)) << path;
    EXPECT_EQ(load_reward_profile(path), builtin_profile(name)) << name;
  }
}

TEST(Profiles, JsonRoundTripAndUnknownKeys) {
  const RewardProfile bb = builtin_profile("bb");
  EXPECT_EQ(profile_from_json(profile_to_json(bb)), bb);
  EXPECT_THROW(profile_from_json(R"({"torque": {"weight": 1, "typo": 2}})"), std::invalid_argument);
  EXPECT_THROW(profile_from_json(R"({"torq": {"weight": 1}})"), std::invalid_argument);
  const RewardProfile partial = profile_from_json(R"({"name": "x", "torque": {"weight": -3}})");
  EXPECT_EQ(partial.torque, -3.0);
  EXPECT_EQ(partial.position_tracking, 10.0);
}
