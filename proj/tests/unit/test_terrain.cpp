#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <queue>
#include <random>
#include <set>

#include <gtest/gtest.h>
#include <json.hpp>

#include "sparsestep/terrain.hpp"
#include "support/terrain_probe.hpp"

using namespace sparsestep;
using sparsestep::testing::monte_carlo_steppable;

TEST(LevelParams, StonesEverywhereAnchors) {
  const auto l0 = level_params(TerrainType::kStonesEverywhere, 0);
  EXPECT_NEAR(l0.stone_size, 0.92, 1e-12);
  EXPECT_NEAR(l0.stone_gap, 0.08, 1e-12);
  EXPECT_NEAR(l0.max_shift, 0.036, 1e-12);
  EXPECT_NEAR(l0.max_height, 0.01, 1e-12);

  const auto l5 = level_params(TerrainType::kStonesEverywhere, 5);
  EXPECT_NEAR(l5.stone_size, 0.52, 1e-12);
  EXPECT_NEAR(l5.stone_gap, 0.18, 1e-12);
  // The table rounds the shift to 0.082.
  EXPECT_NEAR(l5.max_shift, 0.082, 5e-4);
  EXPECT_NEAR(l5.max_height, 0.06, 1e-12);

  const auto l9 = level_params(TerrainType::kStonesEverywhere, 9);
  EXPECT_NEAR(l9.stone_size, 0.20, 1e-12);
  EXPECT_NEAR(l9.stone_gap, 0.26, 1e-12);
  EXPECT_NEAR(l9.max_shift, 0.118, 1e-12);
  EXPECT_NEAR(l9.max_height, 0.10, 1e-12);
}

TEST(LevelParams, LevelThreeIsLinearInterpolant) {
  const auto a = level_params(TerrainType::kStonesEverywhere, 0);
  const auto b = level_params(TerrainType::kStonesEverywhere, 9);
  const auto l3 = level_params(TerrainType::kStonesEverywhere, 3);
  auto lerp = [](double x, double y) { return x + (y - x) * 3.0 / 9.0; };
  EXPECT_NEAR(l3.stone_size, 0.68, 1e-12);
  EXPECT_NEAR(l3.stone_gap, 0.14, 1e-12);
  EXPECT_NEAR(l3.max_shift, 0.0633, 1e-4);
  EXPECT_NEAR(l3.max_shift, lerp(a.max_shift, b.max_shift), 1e-12);
  EXPECT_NEAR(l3.max_height, 0.04, 1e-12);
}

TEST(LevelParams, MonotoneInLevel) {
  for (int l = 1; l < kNumLevels; ++l) {
    const auto lo = level_params(TerrainType::kStonesEverywhere, l - 1);
    const auto hi = level_params(TerrainType::kStonesEverywhere, l);
    EXPECT_LT(hi.stone_size, lo.stone_size);
    EXPECT_GT(hi.stone_gap, lo.stone_gap);
    EXPECT_GT(hi.max_shift, lo.max_shift);
    EXPECT_GT(hi.max_height, lo.max_height);
  }
}

TEST(LevelParams, RejectsOutOfRange) {
  for (TerrainType t : kAllTerrainTypes) {
    EXPECT_THROW(level_params(t, -1), std::invalid_argument);
    EXPECT_THROW(level_params(t, 10), std::invalid_argument);
  }
}

TEST(LevelParams, AllFamiliesPositiveLengths) {
  for (TerrainType t : kAllTerrainTypes) {
    for (int l = 0; l < kNumLevels; ++l) {
      const auto p = level_params(t, l);
      EXPECT_EQ(p.level, l);
      EXPECT_GT(p.stone_size, 0.0);
      EXPECT_GT(p.stone_gap, 0.0);
      EXPECT_GT(p.max_shift, 0.0);
      EXPECT_GE(p.max_height, 0.0);
    }
  }
}

TEST(LevelParams, SteppingBeamWidthsWithinRange) {
  for (int l = 0; l < kNumLevels; ++l) {
    const auto p = level_params(TerrainType::kSteppingBeams, l);
    EXPECT_GE(p.beam_width, 0.12 - 1e-12);
    EXPECT_LE(p.beam_width, 0.17 + 1e-12);
    EXPECT_LE(p.beam_spacing, 0.60 + 1e-12);
    EXPECT_GE(p.beam_spacing, 0.30 - 1e-12);
    EXPECT_LE(p.beam_height_delta, 0.20 + 1e-12);
  }
}

TEST(TerrainTypeNames, RoundTrip) {
  for (TerrainType t : kAllTerrainTypes) EXPECT_EQ(terrain_type_from_string(to_string(t)), t);
  EXPECT_EQ(terrain_type_from_string("s2"), TerrainType::kStones2Rows);
  EXPECT_THROW(terrain_type_from_string("lava"), std::invalid_argument);
}

TEST(Sparsity, TableValues) {
  EXPECT_NEAR(sparsity(level_params(TerrainType::kStonesEverywhere, 0)), 0.154, 0.001);
  EXPECT_NEAR(sparsity(level_params(TerrainType::kStonesEverywhere, 5)), 0.448, 0.002);
  EXPECT_NEAR(sparsity(level_params(TerrainType::kStonesEverywhere, 9)), 0.811, 0.001);
}

TEST(Sparsity, NoGapMeansNoSparsity) {
  auto p = level_params(TerrainType::kStonesEverywhere, 4);
  p.stone_gap = 0.0;
  EXPECT_DOUBLE_EQ(sparsity(p), 0.0);
}

TEST(Generate, MonteCarloAreaMatchesAnalyticAtLevelNine) {
  const auto p = level_params(TerrainType::kStonesEverywhere, 9);
  const TerrainGrid grid = generate(p, 7);
  const double steppable = monte_carlo_steppable(grid, 1'000'000, 11);
  EXPECT_NEAR(steppable, 0.189, 0.01);
  EXPECT_NEAR(1.0 - steppable, sparsity(p), 0.01);
}

TEST(Generate, MonteCarloAreaMatchesAnalyticAllLevels) {
  for (int l = 0; l < kNumLevels; ++l) {
    const auto p = level_params(TerrainType::kStonesEverywhere, l);
    const TerrainGrid grid = generate(p, 100 + l);
    EXPECT_NEAR(1.0 - monte_carlo_steppable(grid, 1'000'000, l), sparsity(p), 0.01) << "level " << l;
  }
}

TEST(Generate, DeterministicPerSeed) {
  for (TerrainType t : kAllTerrainTypes) {
    const auto p = level_params(t, 0);
    const TerrainGrid a = generate(p, 42);
    const TerrainGrid b = generate(p, 42);
    EXPECT_TRUE(a == b);
    ASSERT_EQ(a.heights().size(), b.heights().size());
    EXPECT_EQ(0, std::memcmp(a.heights().data(), b.heights().data(), a.heights().size_bytes()));
    EXPECT_EQ(0, std::memcmp(a.steppable_mask().data(), b.steppable_mask().data(),
                             a.steppable_mask().size_bytes()));
  }
}

TEST(Generate, SeedsDiffer) {
  for (TerrainType t : kAllTerrainTypes) {
    const auto p = level_params(t, 5);
    EXPECT_FALSE(generate(p, 1) == generate(p, 2)) << to_string(t);
  }
}

TEST(Generate, Stones2RowsCoversAllRowCounts) {
  std::set<int> seen;
  const auto p = level_params(TerrainType::kStones2Rows, 0);
  for (std::uint64_t seed = 0; seed < 100; ++seed) seen.insert(generate(p, seed).row_count);
  EXPECT_EQ(seen, (std::set<int>{1, 2, 3}));
}

TEST(Generate, SteppableHeightsWithinBound) {
  for (TerrainType t : kAllTerrainTypes) {
    for (int l : {0, 4, 9}) {
      const auto p = level_params(t, l);
      const TerrainGrid g = generate(p, 3 + l);
      ASSERT_EQ(g.heights().size(), g.steppable_mask().size());
      for (int iy = 0; iy < g.ny(); ++iy) {
        for (int ix = 0; ix < g.nx(); ++ix) {
          if (!g.cell_steppable(ix, iy)) continue;
          EXPECT_LE(std::abs(g.cell_height(ix, iy)), p.max_height + 1e-6);
        }
      }
    }
  }
}

TEST(Generate, StartPlatformConnectedAroundSpawn) {
  for (TerrainType t : kAllTerrainTypes) {
    const TerrainGrid g = generate(level_params(t, 9), 5);
    const double cs = g.cell_size();
    auto cell_of = [&](double x, double y) {
      return std::pair<int, int>{static_cast<int>((x - g.x_min()) / cs),
                                 static_cast<int>((y - g.y_min()) / cs)};
    };
    // Flood fill from the spawn over level steppable cells.
    const auto [sx, sy] = cell_of(g.spawn.x(), g.spawn.y());
    std::vector<std::uint8_t> seen(g.nx() * g.ny(), 0);
    std::queue<std::pair<int, int>> open;
    open.push({sx, sy});
    seen[sy * g.nx() + sx] = 1;
    while (!open.empty()) {
      const auto [x, y] = open.front();
      open.pop();
      for (auto [dx, dy] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
        const int nx = x + dx, ny = y + dy;
        if (nx < 0 || ny < 0 || nx >= g.nx() || ny >= g.ny()) continue;
        if (seen[ny * g.nx() + nx] || !g.cell_steppable(nx, ny)) continue;
        if (g.cell_height(nx, ny) != g.cell_height(x, y)) continue;
        seen[ny * g.nx() + nx] = 1;
        open.push({nx, ny});
      }
    }
    // The robot footprint around the spawn must lie in that component.
    for (double dx = -0.4; dx <= 0.4; dx += 0.05) {
      for (double dy = -0.3; dy <= 0.3; dy += 0.05) {
        const auto [cx, cy] = cell_of(g.spawn.x() + dx, g.spawn.y() + dy);
        EXPECT_TRUE(seen[cy * g.nx() + cx]) << to_string(t);
      }
    }
    EXPECT_LE(g.spawn.x() + 0.5, g.course_start);
  }
}

TEST(HeightAt, StoneCenterGapAndFarAway) {
  TerrainLayout layout;
  TerrainGrid g = make_flat(layout, 0.0);
  g.set_cell(100, 100, 0.05f, true);
  g.set_cell(101, 100, 0.0f, false);
  const Eigen::Vector2d stone = g.cell_center(100, 100);
  const Eigen::Vector2d gap = g.cell_center(101, 100);
  const TerrainSample s = g.height_at(stone.x(), stone.y());
  EXPECT_TRUE(s.steppable);
  EXPECT_FLOAT_EQ(s.height, 0.05f);
  const TerrainSample h = g.height_at(gap.x(), gap.y());
  EXPECT_FALSE(h.steppable);
  EXPECT_EQ(h.height, layout.fall_height);
  const TerrainSample far = g.height_at(1000.0, 1000.0);
  EXPECT_FALSE(far.steppable);
  EXPECT_EQ(far.height, layout.fall_height);
}

TEST(HeightAt, GeneratedStoneCenterIsSteppable) {
  // Level 0 stones are large; the unshifted pitch centre is always covered.
  const TerrainGrid g = generate(level_params(TerrainType::kStonesEverywhere, 0), 1);
  const double pitch = g.params.stone_size + g.params.stone_gap;
  const TerrainSample s = g.height_at(g.course_start + 2.5 * pitch, 0.0);
  EXPECT_TRUE(s.steppable);
  EXPECT_LE(std::abs(s.height), g.params.max_height + 1e-6);
}

TEST(MaxSupport, FindsHighestCellInRadius) {
  TerrainGrid g = make_flat(TerrainLayout{}, 0.0);
  g.set_cell(200, 100, 0.3f, true);
  const Eigen::Vector2d c = g.cell_center(200, 100);
  EXPECT_NEAR(g.max_support_height(c.x() + 0.2, c.y(), 0.5), 0.3, 1e-6);
  EXPECT_NEAR(g.max_support_height(c.x() + 0.8, c.y(), 0.5), 0.0, 1e-6);
  EXPECT_EQ(g.max_support_height(-50.0, 0.0, 0.5), g.fall_height());
}

TEST(HeightScan, FlatTerrainConstant) {
  const TerrainGrid g = make_flat(TerrainLayout{}, 0.0);
  const Eigen::Vector3d base(3.0, 0.0, 0.6);
  const auto a = height_scan(g, base, 0.3, {0.0, 0.0});
  const auto b = height_scan(g, base, 0.3, {0.05, 0.0});
  ASSERT_EQ(static_cast<int>(a.size()), ScanPattern{}.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NEAR(a[i], -0.6, 1e-12);
    EXPECT_EQ(a[i], b[i]);
  }
}

TEST(HeightScan, GapSampleClipsAtFallHeight) {
  TerrainGrid g = make_flat(TerrainLayout{}, 0.0);
  const ScanPattern pattern;
  const Eigen::Vector3d base(3.0, 0.0, 0.6);
  const Eigen::Vector2d probe = base.head<2>() + pattern.point(8, 2);
  const int ix = static_cast<int>((probe.x() - g.x_min()) / g.cell_size());
  const int iy = static_cast<int>((probe.y() - g.y_min()) / g.cell_size());
  g.set_cell(ix, iy, 0.0f, false);
  const auto scan = height_scan(g, base, 0.0, {0.0, 0.0});
  const double expected = std::clamp(g.height_at(probe.x(), probe.y()).height - base.z(),
                                     -kScanClip, kScanClip);
  EXPECT_DOUBLE_EQ(scan[8 * pattern.n_lateral + 2], expected);
  EXPECT_DOUBLE_EQ(expected, -1.0);
}

TEST(HeightScan, RotatesWithYaw) {
  TerrainGrid g = make_flat(TerrainLayout{}, 0.0);
  const ScanPattern pattern;
  const Eigen::Vector3d base(3.0, 0.0, 0.6);
  // Forward-most row centre at yaw pi/2 lands to the left of the base.
  const Eigen::Vector2d probe = base.head<2>() + Eigen::Vector2d(0.0, 0.6);
  const int ix = static_cast<int>((probe.x() - g.x_min()) / g.cell_size());
  const int iy = static_cast<int>((probe.y() - g.y_min()) / g.cell_size());
  g.set_cell(ix, iy, 0.2f, true);
  const auto scan = height_scan(g, base, M_PI / 2, {0.0, 0.0});
  EXPECT_NEAR(scan[12 * pattern.n_lateral + 4], 0.2 - 0.6, 1e-6);
}

TEST(Export, WritesThreeFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "sparsestep_export_test";
  std::filesystem::create_directories(dir);
  const TerrainGrid g = generate(level_params(TerrainType::kBalanceBeams, 2), 9);
  const std::string stem = (dir / "bb").string();
  export_terrain(g, stem);

  std::ifstream csv(stem + "_heights.csv");
  int rows = 0;
  std::string line;
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, g.ny());

  std::ifstream pgm(stem + "_steppable.pgm", std::ios::binary);
  std::string magic;
  int w = 0, h = 0, maxv = 0;
  pgm >> magic >> w >> h >> maxv;
  EXPECT_EQ(magic, "P5");
  EXPECT_EQ(w, g.nx());
  EXPECT_EQ(h, g.ny());
  EXPECT_EQ(maxv, 255);

  std::ifstream side(stem + "_params.json");
  const auto j = nlohmann::json::parse(side);
  EXPECT_EQ(j["terrain_type"], "balance_beams");
  EXPECT_EQ(j["level"], 2);
  EXPECT_EQ(j["seed"], 9);
  std::filesystem::remove_all(dir);
}
