#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "sparsestep/checkpoint.hpp"

namespace sparsestep {
namespace {

namespace fs = std::filesystem;

Policy make_policy(std::uint64_t seed, std::vector<int> hidden = {16, 8}) {
  PolicyConfig pc;
  pc.actor_hidden = hidden;
  pc.critic_hidden = {12};
  pc.action_scale = {0.2, 0.25, 0.3};
  Policy p(30, kJointDim, pc, seed);
  p.net.log_std.setConstant(-0.3f);
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g(0.0f, 1.0f);
  MatX<float> x(30, 40);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
  p.obs_norm.update(x);
  return p;
}

CheckpointMeta make_meta() {
  CheckpointMeta m;
  m.stage = "finetune";
  m.iteration = 1234;
  m.seed = 42;
  m.config_hash = 0xDEADBEEFCAFEULL;
  m.terrain = "stones_2rows";
  m.profile = "s2";
  m.velocity_mode = true;
  return m;
}

TEST(Checkpoint, RoundTripIsByteIdentical) {
  const Policy p = make_policy(1);
  const CheckpointMeta meta = make_meta();
  const auto bytes = encode_checkpoint(p, meta);
  Policy q;
  CheckpointMeta m2;
  decode_checkpoint(bytes, q, m2);
  EXPECT_EQ(m2, meta);
  EXPECT_EQ(q.net.pack(), p.net.pack());
  EXPECT_EQ(q.net.actor.sizes(), p.net.actor.sizes());
  EXPECT_EQ(q.config.action_scale, p.config.action_scale);
  EXPECT_EQ(q.obs_norm.count(), p.obs_norm.count());
  EXPECT_EQ(encode_checkpoint(q, m2), bytes);
}

TEST(Checkpoint, FileRoundTrip) {
  const fs::path path = fs::temp_directory_path() / "sparsestep_ckpt_test.bin";
  const Policy p = make_policy(2);
  save_checkpoint(path.string(), p, make_meta());
  Policy q;
  CheckpointMeta m;
  load_checkpoint(path.string(), q, m);
  save_checkpoint(path.string() + ".2", q, m);
  std::ifstream a(path, std::ios::binary), b(path.string() + ".2", std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(a)), {});
  const std::string sb((std::istreambuf_iterator<char>(b)), {});
  EXPECT_EQ(sa, sb);
  fs::remove(path);
  fs::remove(path.string() + ".2");
}

TEST(Checkpoint, NormalizedOutputsAgreeAfterLoad) {
  const Policy p = make_policy(3);
  Policy q;
  CheckpointMeta m;
  decode_checkpoint(encode_checkpoint(p, make_meta()), q, m);
  MatX<float> x = MatX<float>::Random(30, 5);
  EXPECT_EQ(q.mean_action(x), p.mean_action(x));
}

TEST(Checkpoint, EveryTruncationFails) {
  const auto bytes = encode_checkpoint(make_policy(4), make_meta());
  Policy untouched = make_policy(5);
  const VecX<float> before = untouched.net.pack();
  for (std::size_t n : {std::size_t{0}, std::size_t{3}, std::size_t{8}, bytes.size() / 2,
                        bytes.size() - 1}) {
    std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + n);
    CheckpointMeta m;
    try {
      decode_checkpoint(cut, untouched, m);
      FAIL() << "truncated at " << n;
    } catch (const CheckpointError& e) {
      EXPECT_NE(std::string(e.what()).find("truncated"), std::string::npos) << e.what();
    }
    EXPECT_EQ(untouched.net.pack(), before);
  }
}

TEST(Checkpoint, BadMagicVersionAndChecksum) {
  const auto good = encode_checkpoint(make_policy(6), make_meta());
  Policy q;
  CheckpointMeta m;
  auto bad = good;
  bad[0] = 'X';
  EXPECT_THROW(decode_checkpoint(bad, q, m), CheckpointError);
  bad = good;
  bad[4] = 99;
  EXPECT_THROW(decode_checkpoint(bad, q, m), CheckpointError);
  bad = good;
  bad[good.size() / 2] ^= 0x10;
  EXPECT_THROW(decode_checkpoint(bad, q, m), CheckpointError);
}

TEST(Checkpoint, MissingFileFails) {
  Policy q;
  CheckpointMeta m;
  EXPECT_THROW(load_checkpoint("/nonexistent/ckpt.bin", q, m), CheckpointError);
}

TEST(Checkpoint, LoadWeightsNamesMismatch) {
  const Policy src = make_policy(7, {16, 8});
  Policy dst = make_policy(8, {16, 4});
  try {
    load_weights(src, dst);
    FAIL();
  } catch (const std::exception& e) {
    EXPECT_NE(std::string(e.what()).find("actor"), std::string::npos) << e.what();
  }
  Policy same = make_policy(9, {16, 8});
  load_weights(src, same);
  EXPECT_EQ(same.net.pack(), src.net.pack());
}

}  // namespace
}  // namespace sparsestep
