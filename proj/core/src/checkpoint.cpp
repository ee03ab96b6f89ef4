#include "sparsestep/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace sparsestep {

std::uint64_t fnv1a(const std::uint8_t* data, std::size_t n, std::uint64_t h) {
  for (std::size_t i = 0; i < n; ++i) h = (h ^ data[i]) * 1099511628211ULL;
  return h;
}

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { buf.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    buf.insert(buf.end(), s.begin(), s.end());
  }
  template <typename V>
  void f32s(const V& v) {
    u32(static_cast<std::uint32_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) f32(v[i]);
  }
  template <typename V>
  void f64s(const V& v) {
    u32(static_cast<std::uint32_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) f64(v[i]);
  }
  void ints(const std::vector<int>& v) {
    u32(static_cast<std::uint32_t>(v.size()));
    for (int x : v) u32(static_cast<std::uint32_t>(x));
  }
  std::vector<std::uint8_t> buf;
};

class Reader {
 public:
  Reader(const std::uint8_t* data, std::size_t n) : data_(data), n_(n) {}
  void need(std::size_t k) const {
    if (pos_ + k > n_) throw CheckpointError("checkpoint truncated (version/format error)");
  }
  std::uint8_t u8() {
    need(1);
    return data_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data_[pos_++]) << (8 * i);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint32_t len = u32();
    need(len);
    std::string s(reinterpret_cast<const char*>(data_ + pos_), len);
    pos_ += len;
    return s;
  }
  VecX<float> f32s() {
    const std::uint32_t len = u32();
    need(4ull * len);
    VecX<float> v(len);
    for (std::uint32_t i = 0; i < len; ++i) v[i] = f32();
    return v;
  }
  VecX<double> f64s() {
    const std::uint32_t len = u32();
    need(8ull * len);
    VecX<double> v(len);
    for (std::uint32_t i = 0; i < len; ++i) v[i] = f64();
    return v;
  }
  std::vector<int> ints() {
    const std::uint32_t len = u32();
    need(4ull * len);
    std::vector<int> v(len);
    for (auto& x : v) x = static_cast<int>(u32());
    return v;
  }
  std::size_t pos() const { return pos_; }

 private:
  const std::uint8_t* data_;
  std::size_t n_;
  std::size_t pos_ = 0;
};

std::vector<int> hidden_of(const Mlp<float>& m) {
  return {m.sizes().begin() + 1, m.sizes().end() - 1};
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Policy& p, const CheckpointMeta& meta) {
  Writer w;
  for (char c : kCheckpointMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u32(kCheckpointVersion);
  w.str(meta.stage);
  w.u64(meta.iteration);
  w.u64(meta.seed);
  w.u64(meta.config_hash);
  w.str(meta.terrain);
  w.str(meta.profile);
  w.u8(meta.velocity_mode ? 1 : 0);

  w.u32(static_cast<std::uint32_t>(p.net.obs_dim()));
  w.u32(static_cast<std::uint32_t>(p.net.act_dim()));
  w.u8(static_cast<std::uint8_t>(p.net.actor.activation()));
  w.ints(hidden_of(p.net.actor));
  w.ints(hidden_of(p.net.critic));
  for (int k = 0; k < 3; ++k) w.f64(p.config.action_scale[k]);
  w.f64(p.config.init_std);
  w.f64(p.config.actor_output_gain);

  w.f32s(p.net.actor.params());
  w.f32s(p.net.log_std);
  w.f32s(p.net.critic.params());

  w.f64(p.obs_norm.count());
  w.f64s(p.obs_norm.mean());
  w.f64s(p.obs_norm.variance());
  w.u64(fnv1a(w.buf.data(), w.buf.size()));
  return w.buf;
}

void decode_checkpoint(const std::vector<std::uint8_t>& bytes, Policy& policy,
                       CheckpointMeta& meta_out) {
  Reader r(bytes.data(), bytes.size());
  char magic[4];
  for (char& c : magic) c = static_cast<char>(r.u8());
  if (std::memcmp(magic, kCheckpointMagic, 4) != 0) throw CheckpointError("bad checkpoint magic");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  CheckpointMeta meta;
  meta.stage = r.str();
  meta.iteration = r.u64();
  meta.seed = r.u64();
  meta.config_hash = r.u64();
  meta.terrain = r.str();
  meta.profile = r.str();
  meta.velocity_mode = r.u8() != 0;

  const int obs_dim = static_cast<int>(r.u32());
  const int act_dim = static_cast<int>(r.u32());
  const std::uint8_t act = r.u8();
  if (act > 2) throw CheckpointError("bad activation tag");
  PolicyConfig cfg;
  cfg.activation = static_cast<Activation>(act);
  cfg.actor_hidden = r.ints();
  cfg.critic_hidden = r.ints();
  for (int k = 0; k < 3; ++k) cfg.action_scale[k] = r.f64();
  cfg.init_std = r.f64();
  cfg.actor_output_gain = r.f64();
  for (int h : cfg.actor_hidden) if (h <= 0 || h > 1 << 16) throw CheckpointError("bad actor shape");
  for (int h : cfg.critic_hidden) if (h <= 0 || h > 1 << 16) throw CheckpointError("bad critic shape");
  if (obs_dim <= 0 || act_dim <= 0 || obs_dim > 1 << 20) throw CheckpointError("bad dimensions");

  Policy p;
  p.config = cfg;
  p.net = ActorCritic(obs_dim, act_dim, cfg.actor_hidden, cfg.critic_hidden, cfg.activation,
                      cfg.init_std);
  const VecX<float> actor = r.f32s();
  const VecX<float> log_std = r.f32s();
  const VecX<float> critic = r.f32s();
  if (actor.size() != p.net.actor.num_params()) throw CheckpointError("actor shape mismatch");
  if (log_std.size() != act_dim) throw CheckpointError("log_std shape mismatch");
  if (critic.size() != p.net.critic.num_params()) throw CheckpointError("critic shape mismatch");
  p.net.actor.params() = actor;
  p.net.log_std = log_std;
  p.net.critic.params() = critic;

  const double count = r.f64();
  const VecX<double> mean = r.f64s();
  const VecX<double> var = r.f64s();
  if (mean.size() != obs_dim || var.size() != obs_dim) {
    throw CheckpointError("normalizer shape mismatch");
  }
  p.obs_norm = RunningNormalizer(obs_dim);
  p.obs_norm.set(mean, var, count);
  const std::size_t body = r.pos();
  const std::uint64_t checksum = r.u64();
  if (checksum != fnv1a(bytes.data(), body)) throw CheckpointError("checkpoint checksum mismatch");
  if (r.pos() != bytes.size()) throw CheckpointError("trailing bytes after checkpoint");

  policy = std::move(p);
  meta_out = meta;
}

void save_checkpoint(const std::string& path, const Policy& policy, const CheckpointMeta& meta) {
  const std::vector<std::uint8_t> bytes = encode_checkpoint(policy, meta);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void load_checkpoint(const std::string& path, Policy& policy, CheckpointMeta& meta) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path);
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  decode_checkpoint(bytes, policy, meta);
}

void load_weights(const Policy& src, Policy& dst) {
  if (src.net.obs_dim() != dst.net.obs_dim()) {
    throw CheckpointError("load error: observation dimension differs (" +
                          std::to_string(src.net.obs_dim()) + " vs " +
                          std::to_string(dst.net.obs_dim()) + ")");
  }
  if (src.net.act_dim() != dst.net.act_dim()) throw CheckpointError("load error: action dimension differs");
  if (src.net.actor.sizes() != dst.net.actor.sizes()) throw CheckpointError("load error: actor shape differs");
  if (src.net.critic.sizes() != dst.net.critic.sizes()) throw CheckpointError("load error: critic shape differs");
  dst.net.actor.params() = src.net.actor.params();
  dst.net.critic.params() = src.net.critic.params();
  dst.net.log_std = src.net.log_std;
  dst.obs_norm = src.obs_norm;
}

}  // namespace sparsestep
