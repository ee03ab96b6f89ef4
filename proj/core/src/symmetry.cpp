#include "sparsestep/symmetry.hpp"

#include <numeric>
#include <stdexcept>

namespace sparsestep {

void RolloutBatch::resize(int obs_dim, int act_dim, int n) {
  observations.resize(obs_dim, n);
  actions.resize(act_dim, n);
  old_mean.resize(act_dim, n);
  old_std.resize(act_dim, n);
  old_log_prob.resize(n);
  values.resize(n);
  advantages.resize(n);
  returns.resize(n);
  original.assign(n, 1);
}

RolloutBatch RolloutBatch::select(const std::vector<int>& idx) const {
  RolloutBatch out;
  out.resize(obs_dim(), act_dim(), static_cast<int>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const int i = idx[k];
    out.observations.col(k) = observations.col(i);
    out.actions.col(k) = actions.col(i);
    out.old_mean.col(k) = old_mean.col(i);
    out.old_std.col(k) = old_std.col(i);
    out.old_log_prob[k] = old_log_prob[i];
    out.values[k] = values[i];
    out.advantages[k] = advantages[i];
    out.returns[k] = returns[i];
    out.original[k] = original.empty() ? 1 : original[i];
  }
  return out;
}

SignedPermutation SignedPermutation::identity(int n) {
  SignedPermutation p;
  p.source.resize(n);
  std::iota(p.source.begin(), p.source.end(), 0);
  p.sign.assign(n, 1.0f);
  return p;
}

void SignedPermutation::apply(std::span<const float> in, std::span<float> out) const {
  if (static_cast<int>(in.size()) != size() || static_cast<int>(out.size()) != size()) {
    throw std::invalid_argument("signed permutation: size mismatch");
  }
  for (int i = 0; i < size(); ++i) out[i] = sign[i] * in[source[i]];
}

void SignedPermutation::apply(const MatX<float>& in, MatX<float>& out) const {
  if (in.rows() != size()) throw std::invalid_argument("signed permutation: row mismatch");
  out.resize(in.rows(), in.cols());
  for (int i = 0; i < size(); ++i) out.row(i) = sign[i] * in.row(source[i]);
}

SignedPermutation SignedPermutation::then(const SignedPermutation& b) const {
  if (b.size() != size()) throw std::invalid_argument("signed permutation: size mismatch");
  // b(a(x))[i] = b.sign[i] * a(x)[b.source[i]] = b.sign[i] * a.sign[j] * x[a.source[j]].
  SignedPermutation out;
  out.source.resize(size());
  out.sign.resize(size());
  for (int i = 0; i < size(); ++i) {
    const int j = b.source[i];
    out.source[i] = source[j];
    out.sign[i] = b.sign[i] * sign[j];
  }
  return out;
}

SymmetryMap::SymmetryMap(const ScanPattern& pattern, bool velocity_mode) {
  for (Mirror m : kAllMirrors) {
    obs_[static_cast<int>(m)] = build_obs(m, pattern, velocity_mode);
    act_[static_cast<int>(m)] = build_action(m);
  }
}

SignedPermutation SymmetryMap::build_action(Mirror m) const {
  SignedPermutation p = SignedPermutation::identity(kJointDim);
  const auto perm = foot_permutation(m);
  const Eigen::Vector3d s = mirror_signs(m);
  for (int f = 0; f < kNumFeet; ++f) {
    for (int k = 0; k < 3; ++k) {
      p.source[3 * perm[f] + k] = 3 * f + k;
      p.sign[3 * perm[f] + k] = static_cast<float>(s[k]);
    }
  }
  return p;
}

SignedPermutation SymmetryMap::build_obs(Mirror m, const ScanPattern& pattern,
                                         bool velocity_mode) const {
  ObsLayout layout;
  layout.scan_size = pattern.size();
  SignedPermutation p = SignedPermutation::identity(layout.size());
  const bool lr = m == Mirror::kLeftRight || m == Mirror::kBoth;
  const bool fb = m == Mirror::kFrontBack || m == Mirror::kBoth;
  const Eigen::Vector3d polar = mirror_signs(m);
  const double det = polar.prod();
  const Eigen::Vector3d axial = det * polar;

  for (int k = 0; k < 3; ++k) {
    p.sign[ObsLayout::kLinearVelocity + k] = static_cast<float>(polar[k]);
    p.sign[ObsLayout::kAngularVelocity + k] = static_cast<float>(axial[k]);
    p.sign[ObsLayout::kGravity + k] = static_cast<float>(polar[k]);
  }
  const SignedPermutation joints = build_action(m);
  for (int base : {ObsLayout::kJointCoords, ObsLayout::kJointVelocities,
                   ObsLayout::kPreviousAction}) {
    for (int i = 0; i < kJointDim; ++i) {
      p.source[base + i] = base + joints.source[i];
      p.sign[base + i] = joints.sign[i];
    }
  }
  for (int il = 0; il < pattern.n_longitudinal; ++il) {
    for (int it = 0; it < pattern.n_lateral; ++it) {
      const int src_l = fb ? pattern.n_longitudinal - 1 - il : il;
      const int src_t = lr ? pattern.n_lateral - 1 - it : it;
      p.source[ObsLayout::kScan + il * pattern.n_lateral + it] =
          ObsLayout::kScan + src_l * pattern.n_lateral + src_t;
    }
  }
  const int t = layout.target();
  const int h = layout.heading();
  p.sign[t] = fb ? -1.0f : 1.0f;
  p.sign[t + 1] = lr ? -1.0f : 1.0f;
  if (velocity_mode) {
    // Yaw-rate command is axial about z.
    p.sign[h] = static_cast<float>(axial.z());
  } else {
    // The target heading is a body orientation, so each single mirror flips
    // the heading error and the combined one keeps it.
    p.sign[h + 1] = static_cast<float>(det);
  }
  return p;
}

std::vector<float> SymmetryMap::mirror_observation(std::span<const float> obs, Mirror m) const {
  std::vector<float> out(obs.size());
  observation(m).apply(obs, out);
  return out;
}

std::vector<float> SymmetryMap::mirror_action(std::span<const float> a, Mirror m) const {
  std::vector<float> out(a.size());
  action(m).apply(a, out);
  return out;
}

RolloutBatch augment(const RolloutBatch& batch, const SymmetryMap& map) {
  const int n = batch.size();
  if (batch.obs_dim() != map.obs_dim()) throw std::invalid_argument("augment: obs dim mismatch");
  RolloutBatch out;
  out.resize(batch.obs_dim(), batch.act_dim(), 4 * n);
  MatX<float> tmp;
  for (int c = 0; c < 4; ++c) {
    const Mirror m = kAllMirrors[c];
    const SignedPermutation& po = map.observation(m);
    const SignedPermutation& pa = map.action(m);
    po.apply(batch.observations, tmp);
    out.observations.middleCols(c * n, n) = tmp;
    pa.apply(batch.actions, tmp);
    out.actions.middleCols(c * n, n) = tmp;
    pa.apply(batch.old_mean, tmp);
    out.old_mean.middleCols(c * n, n) = tmp;
    for (int i = 0; i < batch.act_dim(); ++i) {
      out.old_std.row(i).segment(c * n, n) = batch.old_std.row(pa.source[i]);
    }
    out.old_log_prob.segment(c * n, n) = batch.old_log_prob;
    out.values.segment(c * n, n) = batch.values;
    out.advantages.segment(c * n, n) = batch.advantages;
    out.returns.segment(c * n, n) = batch.returns;
    for (int i = 0; i < n; ++i) out.original[c * n + i] = c == 0 && (batch.original.empty() || batch.original[i]);
  }
  return out;
}

}  // namespace sparsestep
