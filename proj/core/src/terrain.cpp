#include "sparsestep/terrain.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace sparsestep {

namespace {

struct LevelAnchors {
  double stone_size[2];
  double stone_gap[2];
  double max_shift[2];
  double max_height[2];
  double beam_width[2];
  double beam_gap_length[2];
  double beam_spacing[2];
  double beam_height_delta[2];
  double merge_distance[2];
};

// Level 0 and level 9 values; everything in between is linear in the level.
// Stones-Everywhere comes straight from the published table. The other three
// families are only shown pictorially, so their endpoints are chosen to look
// like the level 0 / level 9 builds and should be read as extrapolations.
constexpr LevelAnchors kStonesEverywhere{
    {0.92, 0.20}, {0.08, 0.26}, {0.036, 0.118}, {0.01, 0.10},
    {0.0, 0.0},   {0.0, 0.0},   {0.0, 0.0},     {0.0, 0.0},  {0.0, 0.0}};
constexpr LevelAnchors kStones2Rows{
    {0.50, 0.30}, {0.05, 0.30}, {0.01, 0.04}, {0.0, 0.08},
    {0.0, 0.0},   {0.0, 0.0},   {0.0, 0.0},   {0.0, 0.0}, {0.0, 0.0}};
constexpr LevelAnchors kBalanceBeams{
    {0.60, 0.40}, {0.02, 0.10}, {0.01, 0.03}, {0.0, 0.03},
    {0.30, 0.20}, {0.05, 0.25}, {0.50, 0.40}, {0.0, 0.0}, {12.0, 1.0}};
constexpr LevelAnchors kSteppingBeams{
    {2.0, 1.0},   {0.13, 0.13}, {0.02, 0.10}, {0.0, 0.20},
    {0.17, 0.12}, {0.0, 0.0},   {0.30, 0.60}, {0.0, 0.20}, {0.0, 0.0}};

constexpr double kBeamMaxWidth = 0.17;
constexpr double kBeamMinPitch = 0.30;

double lerp(const double (&anchor)[2], int level) {
  const double t = static_cast<double>(level) / kMaxLevel;
  return anchor[0] + (anchor[1] - anchor[0]) * t;
}

const LevelAnchors& anchors(TerrainType type) {
  switch (type) {
    case TerrainType::kStonesEverywhere: return kStonesEverywhere;
    case TerrainType::kStones2Rows: return kStones2Rows;
    case TerrainType::kBalanceBeams: return kBalanceBeams;
    case TerrainType::kSteppingBeams: return kSteppingBeams;
  }
  throw std::invalid_argument("unknown terrain type");
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  // 53 random mantissa bits; independent of the standard library's distributions.
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

int first_cell(double a, double origin, double cell) {
  return static_cast<int>(std::ceil((a - origin) / cell - 0.5));
}

class Rasterizer {
 public:
  Rasterizer(TerrainGrid& grid, double x0, double x1, double y0, double y1)
      : grid_(grid), clip_x0_(x0), clip_x1_(x1), clip_y0_(y0), clip_y1_(y1) {}

  // Marks every cell whose center lies in [x0,x1) x [y0,y1) as steppable at
  // `height`; overlapping stones keep the higher surface.
  void fill(double x0, double x1, double y0, double y1, double height) {
    x0 = std::max(x0, clip_x0_);
    x1 = std::min(x1, clip_x1_);
    y0 = std::max(y0, clip_y0_);
    y1 = std::min(y1, clip_y1_);
    if (x0 >= x1 || y0 >= y1) return;
    const double cs = grid_.cell_size();
    const int ix0 = std::max(0, first_cell(x0, grid_.origin().x(), cs));
    const int ix1 = std::min(grid_.nx(), first_cell(x1, grid_.origin().x(), cs));
    const int iy0 = std::max(0, first_cell(y0, grid_.origin().y(), cs));
    const int iy1 = std::min(grid_.ny(), first_cell(y1, grid_.origin().y(), cs));
    const auto h = static_cast<float>(height);
    for (int iy = iy0; iy < iy1; ++iy) {
      for (int ix = ix0; ix < ix1; ++ix) {
        if (grid_.cell_steppable(ix, iy) && grid_.cell_height(ix, iy) >= h) continue;
        grid_.set_cell(ix, iy, h, true);
      }
    }
  }

 private:
  TerrainGrid& grid_;
  double clip_x0_, clip_x1_, clip_y0_, clip_y1_;
};

TerrainGrid make_world(const TerrainParams& params, std::uint64_t seed,
                       const TerrainLayout& layout) {
  const double length = 2.0 * layout.platform_length + layout.course_length;
  const int nx = static_cast<int>(std::lround(length / layout.cell_size));
  const int ny = static_cast<int>(std::lround(layout.width / layout.cell_size));
  TerrainGrid grid(nx, ny, layout.cell_size, {0.0, -0.5 * layout.width}, layout.fall_height);
  grid.params = params;
  grid.layout = layout;
  grid.seed = seed;
  grid.course_start = layout.platform_length;
  grid.course_end = layout.platform_length + layout.course_length;
  grid.spawn = {0.5 * layout.platform_length, 0.0};

  Rasterizer platforms(grid, grid.x_min(), grid.x_max(), grid.y_min(), grid.y_max());
  platforms.fill(grid.x_min(), grid.course_start, grid.y_min(), grid.y_max(), 0.0);
  platforms.fill(grid.course_end, grid.x_max(), grid.y_min(), grid.y_max(), 0.0);
  return grid;
}

void fill_stones_everywhere(TerrainGrid& grid, const TerrainParams& p, std::mt19937_64& rng) {
  Rasterizer raster(grid, grid.course_start, grid.course_end, grid.y_min(), grid.y_max());
  const double pitch = p.stone_size + p.stone_gap;
  const int n_long = static_cast<int>(std::ceil((grid.course_end - grid.course_start) / pitch));
  const int n_lat = static_cast<int>(std::ceil((grid.y_max() - grid.y_min()) / pitch)) + 1;
  // Laterally centred so that a stone column runs along y = 0.
  const double y_start = -0.5 * n_lat * pitch;
  const double half = 0.5 * p.stone_size;
  for (int i = 0; i < n_long; ++i) {
    for (int j = 0; j < n_lat; ++j) {
      const double sx = uniform(rng, -p.max_shift, p.max_shift);
      const double sy = uniform(rng, -p.max_shift, p.max_shift);
      const double h = uniform(rng, -p.max_height, p.max_height);
      const double cx = grid.course_start + (i + 0.5) * pitch + sx;
      const double cy = y_start + (j + 0.5) * pitch + sy;
      raster.fill(cx - half, cx + half, cy - half, cy + half, h);
    }
  }
}

void fill_stones_rows(TerrainGrid& grid, const TerrainParams& p, std::mt19937_64& rng) {
  int rows = p.row_count;
  if (rows <= 0) rows = 1 + static_cast<int>(rng() % 3);
  grid.row_count = rows;
  Rasterizer raster(grid, grid.course_start, grid.course_end, grid.y_min(), grid.y_max());
  const double pitch = p.stone_size + p.stone_gap;
  const int n_long = static_cast<int>(std::ceil((grid.course_end - grid.course_start) / pitch));
  const double half = 0.5 * p.stone_size;
  for (int r = 0; r < rows; ++r) {
    const double row_y = (r - 0.5 * (rows - 1)) * pitch;
    for (int i = 0; i < n_long; ++i) {
      const double sx = uniform(rng, -p.max_shift, p.max_shift);
      const double sy = uniform(rng, -p.max_shift, p.max_shift);
      const double h = uniform(rng, -p.max_height, p.max_height);
      const double cx = grid.course_start + p.stone_gap + half + i * pitch + sx;
      const double cy = row_y + sy;
      raster.fill(cx - half, cx + half, cy - half, cy + half, h);
    }
  }
}

void fill_balance_beams(TerrainGrid& grid, const TerrainParams& p, std::mt19937_64& rng) {
  Rasterizer raster(grid, grid.course_start, grid.course_end, grid.y_min(), grid.y_max());
  const double cs = grid.cell_size();
  const double half_width = 0.5 * p.beam_width;
  auto separation = [&](double along) {
    return p.beam_spacing * std::max(0.0, 1.0 - along / p.merge_distance);
  };
  for (int side : {-1, 1}) {
    double cursor = grid.course_start + p.stone_gap;
    while (cursor < grid.course_end) {
      const double seg_end = std::min(cursor + p.stone_size, grid.course_end);
      const double h = uniform(rng, -p.max_height, p.max_height);
      const double jitter = uniform(rng, -p.max_shift, p.max_shift);
      // Rasterize column by column so the row centre follows the merge taper.
      for (double x = cursor; x < seg_end; x += cs) {
        const double x_hi = std::min(x + cs, seg_end);
        const double yc = side * 0.5 * separation(0.5 * (x + x_hi) - grid.course_start) + jitter;
        raster.fill(x, x_hi, yc - half_width, yc + half_width, h);
      }
      cursor = seg_end + p.stone_gap + uniform(rng, 0.0, p.beam_gap_length);
    }
  }
}

void fill_stepping_beams(TerrainGrid& grid, const TerrainParams& p, std::mt19937_64& rng) {
  Rasterizer raster(grid, grid.course_start, grid.course_end, grid.y_min(), grid.y_max());
  const double half_length = 0.5 * p.stone_size;
  double center = grid.course_start;
  for (;;) {
    const double pitch = uniform(rng, kBeamMinPitch, std::max(kBeamMinPitch, p.beam_spacing));
    const double width = uniform(rng, p.beam_width, kBeamMaxWidth);
    const double h = uniform(rng, 0.0, p.beam_height_delta);
    const double shift = uniform(rng, -p.max_shift, p.max_shift);
    center += pitch;
    if (center + 0.5 * width > grid.course_end - p.stone_gap) break;
    raster.fill(center - 0.5 * width, center + 0.5 * width, shift - half_length,
                shift + half_length, h);
  }
}

}  // namespace

std::string_view to_string(TerrainType type) {
  switch (type) {
    case TerrainType::kStonesEverywhere: return "stones_everywhere";
    case TerrainType::kStones2Rows: return "stones_2rows";
    case TerrainType::kBalanceBeams: return "balance_beams";
    case TerrainType::kSteppingBeams: return "stepping_beams";
  }
  return "unknown";
}

TerrainType terrain_type_from_string(std::string_view name) {
  if (name == "stones_everywhere" || name == "se") return TerrainType::kStonesEverywhere;
  if (name == "stones_2rows" || name == "s2") return TerrainType::kStones2Rows;
  if (name == "balance_beams" || name == "bb") return TerrainType::kBalanceBeams;
  if (name == "stepping_beams" || name == "sb") return TerrainType::kSteppingBeams;
  throw std::invalid_argument("unknown terrain type: " + std::string(name));
}

TerrainLayout default_layout(TerrainType type) {
  TerrainLayout layout;
  switch (type) {
    case TerrainType::kStonesEverywhere: layout.course_length = 6.5; break;
    case TerrainType::kStones2Rows:
    case TerrainType::kBalanceBeams: layout.course_length = 3.0; break;
    case TerrainType::kSteppingBeams: layout.course_length = 2.5; break;
  }
  return layout;
}

TerrainParams level_params(TerrainType type, int level) {
  if (level < 0 || level > kMaxLevel) {
    throw std::invalid_argument("terrain level must be in 0..9, got " + std::to_string(level));
  }
  const LevelAnchors& a = anchors(type);
  TerrainParams p;
  p.type = type;
  p.level = level;
  p.stone_size = lerp(a.stone_size, level);
  p.stone_gap = lerp(a.stone_gap, level);
  p.max_shift = lerp(a.max_shift, level);
  p.max_height = lerp(a.max_height, level);
  p.beam_width = lerp(a.beam_width, level);
  p.beam_gap_length = lerp(a.beam_gap_length, level);
  p.beam_spacing = lerp(a.beam_spacing, level);
  p.beam_height_delta = lerp(a.beam_height_delta, level);
  p.merge_distance = lerp(a.merge_distance, level);
  if (type == TerrainType::kSteppingBeams) p.max_height = p.beam_height_delta;
  return p;
}

double sparsity(const TerrainParams& params) {
  const double covered = params.stone_size / (params.stone_size + params.stone_gap);
  return 1.0 - covered * covered;
}

TerrainGrid::TerrainGrid(int nx, int ny, double cell_size, Eigen::Vector2d origin,
                         double fall_height)
    : nx_(nx),
      ny_(ny),
      cell_size_(cell_size),
      origin_(std::move(origin)),
      fall_height_(fall_height),
      heights_(static_cast<std::size_t>(nx) * ny, static_cast<float>(fall_height)),
      steppable_(static_cast<std::size_t>(nx) * ny, 0) {
  if (nx <= 0 || ny <= 0 || cell_size <= 0.0) {
    throw std::invalid_argument("terrain grid needs positive dimensions");
  }
}

bool TerrainGrid::contains(double x, double y) const {
  return x >= x_min() && x < x_max() && y >= y_min() && y < y_max();
}

Eigen::Vector2d TerrainGrid::cell_center(int ix, int iy) const {
  return origin_ + Eigen::Vector2d((ix + 0.5) * cell_size_, (iy + 0.5) * cell_size_);
}

void TerrainGrid::set_cell(int ix, int iy, float height, bool steppable) {
  const auto i = index(ix, iy);
  heights_[i] = steppable ? height : static_cast<float>(fall_height_);
  steppable_[i] = steppable ? 1 : 0;
}

TerrainSample TerrainGrid::height_at(double x, double y) const {
  const double fx = std::floor((x - origin_.x()) / cell_size_);
  const double fy = std::floor((y - origin_.y()) / cell_size_);
  if (!(fx >= 0.0 && fx < nx_ && fy >= 0.0 && fy < ny_)) return {fall_height_, false};
  const auto i = index(static_cast<int>(fx), static_cast<int>(fy));
  if (!steppable_[i]) return {fall_height_, false};
  return {heights_[i], true};
}

double TerrainGrid::max_support_height(double x, double y, double radius) const {
  const int ix0 = std::max(0, static_cast<int>(std::floor((x - radius - origin_.x()) / cell_size_)));
  const int ix1 = std::min(nx_ - 1, static_cast<int>(std::floor((x + radius - origin_.x()) / cell_size_)));
  const int iy0 = std::max(0, static_cast<int>(std::floor((y - radius - origin_.y()) / cell_size_)));
  const int iy1 = std::min(ny_ - 1, static_cast<int>(std::floor((y + radius - origin_.y()) / cell_size_)));
  double best = fall_height_;
  const double r2 = radius * radius;
  for (int iy = iy0; iy <= iy1; ++iy) {
    for (int ix = ix0; ix <= ix1; ++ix) {
      const auto i = index(ix, iy);
      if (!steppable_[i] || heights_[i] <= best) continue;
      if ((cell_center(ix, iy) - Eigen::Vector2d(x, y)).squaredNorm() > r2) continue;
      best = heights_[i];
    }
  }
  return best;
}

bool TerrainGrid::operator==(const TerrainGrid& other) const {
  return nx_ == other.nx_ && ny_ == other.ny_ && cell_size_ == other.cell_size_ &&
         origin_ == other.origin_ && fall_height_ == other.fall_height_ &&
         heights_ == other.heights_ && steppable_ == other.steppable_;
}

TerrainGrid generate(const TerrainParams& params, std::uint64_t seed) {
  return generate(params, seed, default_layout(params.type));
}

TerrainGrid generate(const TerrainParams& params, std::uint64_t seed,
                     const TerrainLayout& layout) {
  if (params.level < 0 || params.level > kMaxLevel) {
    throw std::invalid_argument("terrain level must be in 0..9");
  }
  TerrainGrid grid = make_world(params, seed, layout);
  std::mt19937_64 rng(seed);
  switch (params.type) {
    case TerrainType::kStonesEverywhere: fill_stones_everywhere(grid, params, rng); break;
    case TerrainType::kStones2Rows: fill_stones_rows(grid, params, rng); break;
    case TerrainType::kBalanceBeams: fill_balance_beams(grid, params, rng); break;
    case TerrainType::kSteppingBeams: fill_stepping_beams(grid, params, rng); break;
  }
  return grid;
}

TerrainGrid make_flat(const TerrainLayout& layout, double height) {
  TerrainParams params;
  TerrainGrid grid = make_world(params, 0, layout);
  for (int iy = 0; iy < grid.ny(); ++iy) {
    for (int ix = 0; ix < grid.nx(); ++ix) grid.set_cell(ix, iy, static_cast<float>(height), true);
  }
  return grid;
}

Eigen::Vector2d ScanPattern::point(int i_long, int i_lat) const {
  return {(i_long - 0.5 * (n_longitudinal - 1)) * spacing_longitudinal,
          (i_lat - 0.5 * (n_lateral - 1)) * spacing_lateral};
}

void height_scan(const TerrainGrid& grid, const Eigen::Vector3d& base_position, double base_yaw,
                 const Eigen::Vector2d& drift, const ScanPattern& pattern, std::span<double> out) {
  if (out.size() != static_cast<std::size_t>(pattern.size())) {
    throw std::invalid_argument("height_scan output size does not match the scan pattern");
  }
  const double c = std::cos(base_yaw);
  const double s = std::sin(base_yaw);
  std::size_t k = 0;
  for (int i = 0; i < pattern.n_longitudinal; ++i) {
    for (int j = 0; j < pattern.n_lateral; ++j) {
      const Eigen::Vector2d local = pattern.point(i, j);
      const double x = base_position.x() + c * local.x() - s * local.y() + drift.x();
      const double y = base_position.y() + s * local.x() + c * local.y() + drift.y();
      const double h = grid.height_at(x, y).height - base_position.z();
      out[k++] = std::clamp(h, -kScanClip, kScanClip);
    }
  }
}

std::vector<double> height_scan(const TerrainGrid& grid, const Eigen::Vector3d& base_position,
                                double base_yaw, const Eigen::Vector2d& drift,
                                const ScanPattern& pattern) {
  std::vector<double> out(pattern.size());
  height_scan(grid, base_position, base_yaw, drift, pattern, out);
  return out;
}

}  // namespace sparsestep
