#pragma once

#include <span>
#include <vector>

#include "sparsestep/observation.hpp"
#include "sparsestep/rollout.hpp"
#include "sparsestep/sim.hpp"

namespace sparsestep {

/// out[i] = sign[i] * in[source[i]].
struct SignedPermutation {
  std::vector<int> source;
  std::vector<float> sign;

  static SignedPermutation identity(int n);
  int size() const { return static_cast<int>(source.size()); }
  void apply(std::span<const float> in, std::span<float> out) const;
  void apply(const MatX<float>& in, MatX<float>& out) const;  // column-wise
  /// (a.then(b)) x = b(a(x)).
  SignedPermutation then(const SignedPermutation& b) const;
  bool operator==(const SignedPermutation&) const = default;
};

/// Sign/permutation tables of the left-right and front-back mirrors for the
/// observation and action vectors.
class SymmetryMap {
 public:
  explicit SymmetryMap(const ScanPattern& pattern = {}, bool velocity_mode = false);

  const SignedPermutation& observation(Mirror m) const { return obs_[static_cast<int>(m)]; }
  const SignedPermutation& action(Mirror m) const { return act_[static_cast<int>(m)]; }
  int obs_dim() const { return obs_[0].size(); }

  std::vector<float> mirror_observation(std::span<const float> obs, Mirror m) const;
  std::vector<float> mirror_action(std::span<const float> action, Mirror m) const;

 private:
  SignedPermutation build_obs(Mirror m, const ScanPattern& pattern, bool velocity_mode) const;
  SignedPermutation build_action(Mirror m) const;

  std::array<SignedPermutation, 4> obs_;
  std::array<SignedPermutation, 4> act_;
};

inline constexpr std::array<Mirror, 4> kAllMirrors = {Mirror::kIdentity, Mirror::kLeftRight,
                                                      Mirror::kFrontBack, Mirror::kBoth};

/// Four copies {id, LR, FB, LRFB}: observations, actions and old policy
/// means/stds mirrored; log-probs, values, advantages and returns copied.
RolloutBatch augment(const RolloutBatch& batch, const SymmetryMap& map);

}  // namespace sparsestep
