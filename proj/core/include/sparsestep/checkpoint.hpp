#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sparsestep/policy.hpp"

namespace sparsestep {

inline constexpr char kCheckpointMagic[4] = {'S', 'S', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointMeta {
  std::string stage = "generalist";  // generalist | finetune
  std::uint64_t iteration = 0;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  std::string terrain;
  std::string profile;
  bool velocity_mode = false;
  bool operator==(const CheckpointMeta&) const = default;
};

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Little-endian container: magic, version, metadata, shapes, float32 parameters,
/// float64 normalizer statistics, trailing FNV-1a checksum.
std::vector<std::uint8_t> encode_checkpoint(const Policy& policy, const CheckpointMeta& meta);
/// Throws CheckpointError on bad magic, version, truncation, checksum or shapes; `policy`
/// and `meta` are only written after the whole buffer parsed.
void decode_checkpoint(const std::vector<std::uint8_t>& bytes, Policy& policy, CheckpointMeta& meta);

void save_checkpoint(const std::string& path, const Policy& policy, const CheckpointMeta& meta);
void load_checkpoint(const std::string& path, Policy& policy, CheckpointMeta& meta);

/// Copies actor, critic, log-std and normalizer from `src` into `dst`, naming the first
/// component whose shape differs.
void load_weights(const Policy& src, Policy& dst);

std::uint64_t fnv1a(const std::uint8_t* data, std::size_t n,
                    std::uint64_t h = 1469598103934665603ULL);

}  // namespace sparsestep
