#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace sparsestep {

enum class TerrainType : std::uint8_t {
  kStonesEverywhere = 0,
  kStones2Rows = 1,
  kBalanceBeams = 2,
  kSteppingBeams = 3,
};

inline constexpr int kNumLevels = 10;
inline constexpr int kMaxLevel = kNumLevels - 1;
inline constexpr std::array<TerrainType, 4> kAllTerrainTypes = {
    TerrainType::kStonesEverywhere, TerrainType::kStones2Rows,
    TerrainType::kBalanceBeams, TerrainType::kSteppingBeams};

std::string_view to_string(TerrainType type);
// Accepts snake_case names ("stones_everywhere") and the short tags se/s2/bb/sb.
TerrainType terrain_type_from_string(std::string_view name);

/// Generation parameters for one terrain family at one difficulty level.
///
/// The four common fields keep their stepping-stone meaning for every family
/// where it makes sense; the extras are only read by the family that owns them.
struct TerrainParams {
  TerrainType type = TerrainType::kStonesEverywhere;
  int level = 0;
  double stone_size = 0.92;  // w_stone, square side (BB: segment length, SB: beam lateral length)
  double stone_gap = 0.08;   // w_gap, grid pitch minus stone size
  double max_shift = 0.036;  // s_max, per-stone X/Y shift bound
  double max_height = 0.01;  // h_max, per-stone height bound

  int row_count = 0;               // S2: 1..3, or 0 to draw per instance
  double beam_width = 0.0;         // BB: row width; SB: narrowest beam width along x
  double beam_gap_length = 0.0;    // BB: largest random extra gap between segments
  double beam_spacing = 0.0;       // BB: initial row separation; SB: largest beam pitch
  double beam_height_delta = 0.0;  // SB: largest vertical beam offset
  double merge_distance = 0.0;     // BB: distance along the course where the rows meet
};

/// Spatial layout of a generated world: start platform, course, goal platform.
struct TerrainLayout {
  double cell_size = 0.02;
  double platform_length = 1.5;
  double course_length = 6.5;
  double width = 4.0;
  double fall_height = -1.0;
};

TerrainLayout default_layout(TerrainType type);

/// Interpolated level parameters. Throws std::invalid_argument for levels outside 0..9.
TerrainParams level_params(TerrainType type, int level);

/// Non-steppable area fraction of an unshifted stone grid, 1 - (w/(w+g))^2.
double sparsity(const TerrainParams& params);

struct TerrainSample {
  double height;
  bool steppable;
};

/// Heightfield plus steppability mask. Immutable once generated.
class TerrainGrid {
 public:
  TerrainGrid(int nx, int ny, double cell_size, Eigen::Vector2d origin, double fall_height);

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double cell_size() const { return cell_size_; }
  const Eigen::Vector2d& origin() const { return origin_; }
  double fall_height() const { return fall_height_; }
  double x_min() const { return origin_.x(); }
  double x_max() const { return origin_.x() + nx_ * cell_size_; }
  double y_min() const { return origin_.y(); }
  double y_max() const { return origin_.y() + ny_ * cell_size_; }
  bool contains(double x, double y) const;

  // Row-major with y as the row index: index = iy * nx + ix.
  std::span<const float> heights() const { return heights_; }
  std::span<const std::uint8_t> steppable_mask() const { return steppable_; }
  float cell_height(int ix, int iy) const { return heights_[index(ix, iy)]; }
  bool cell_steppable(int ix, int iy) const { return steppable_[index(ix, iy)] != 0; }
  Eigen::Vector2d cell_center(int ix, int iy) const;

  void set_cell(int ix, int iy, float height, bool steppable);

  /// Height and steppability at a world point; gaps and out-of-bounds give fall_height.
  TerrainSample height_at(double x, double y) const;

  /// Highest steppable surface within `radius` of (x, y); fall_height when none.
  double max_support_height(double x, double y, double radius) const;

  // Metadata set by the generator.
  TerrainParams params;
  TerrainLayout layout;
  std::uint64_t seed = 0;
  int row_count = 0;         // realized S2 row count
  Eigen::Vector2d spawn{0.0, 0.0};
  double course_start = 0.0;  // x where the start platform ends
  double course_end = 0.0;    // x where the goal platform begins

  bool operator==(const TerrainGrid& other) const;

 private:
  std::size_t index(int ix, int iy) const { return static_cast<std::size_t>(iy) * nx_ + ix; }

  int nx_;
  int ny_;
  double cell_size_;
  Eigen::Vector2d origin_;
  double fall_height_;
  std::vector<float> heights_;
  std::vector<std::uint8_t> steppable_;
};

/// Pure function of (params, seed, layout).
TerrainGrid generate(const TerrainParams& params, std::uint64_t seed);
TerrainGrid generate(const TerrainParams& params, std::uint64_t seed, const TerrainLayout& layout);

/// A flat fully steppable world at height `height`.
TerrainGrid make_flat(const TerrainLayout& layout, double height = 0.0);

/// Body-frame sampling grid of the height scan. The grid is symmetric about the
/// base in both axes so the front-back and left-right mirrors map it onto itself.
struct ScanPattern {
  int n_longitudinal = 13;
  int n_lateral = 9;
  double spacing_longitudinal = 0.1;
  double spacing_lateral = 0.1;

  int size() const { return n_longitudinal * n_lateral; }
  // index = i_long * n_lateral + i_lat; i_long grows forward, i_lat grows to the left.
  Eigen::Vector2d point(int i_long, int i_lat) const;
};

inline constexpr double kScanClip = 1.0;

/// Heights relative to base height at the rotated, drifted pattern, clipped to +-1 m.
void height_scan(const TerrainGrid& grid, const Eigen::Vector3d& base_position, double base_yaw,
                 const Eigen::Vector2d& drift, const ScanPattern& pattern, std::span<double> out);
std::vector<double> height_scan(const TerrainGrid& grid, const Eigen::Vector3d& base_position,
                                double base_yaw, const Eigen::Vector2d& drift,
                                const ScanPattern& pattern = {});

/// Writes <stem>_heights.csv, <stem>_steppable.pgm and <stem>_params.json.
void export_terrain(const TerrainGrid& grid, const std::string& stem);

}  // namespace sparsestep
