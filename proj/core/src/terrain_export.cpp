#include <fstream>
#include <iomanip>
#include <stdexcept>

#include <json.hpp>

#include "sparsestep/terrain.hpp"

namespace sparsestep {

namespace {

std::ofstream open_or_throw(const std::string& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  return out;
}

}  // namespace

void export_terrain(const TerrainGrid& grid, const std::string& stem) {
  {
    auto csv = open_or_throw(stem + "_heights.csv");
    csv << std::setprecision(9);
    const auto heights = grid.heights();
    for (int iy = 0; iy < grid.ny(); ++iy) {
      for (int ix = 0; ix < grid.nx(); ++ix) {
        if (ix) csv << ',';
        csv << heights[static_cast<std::size_t>(iy) * grid.nx() + ix];
      }
      csv << '\n';
    }
  }
  {
    // Binary graymap, 255 = steppable.
    auto pgm = open_or_throw(stem + "_steppable.pgm", std::ios::out | std::ios::binary);
    pgm << "P5\n" << grid.nx() << ' ' << grid.ny() << "\n255\n";
    for (std::uint8_t s : grid.steppable_mask()) pgm.put(static_cast<char>(s ? 255 : 0));
  }
  {
    const TerrainParams& p = grid.params;
    nlohmann::json j = {
        {"terrain_type", std::string(to_string(p.type))},
        {"level", p.level},
        {"seed", grid.seed},
        {"stone_size", p.stone_size},
        {"stone_gap", p.stone_gap},
        {"max_shift", p.max_shift},
        {"max_height", p.max_height},
        {"row_count", grid.row_count},
        {"beam_width", p.beam_width},
        {"beam_gap_length", p.beam_gap_length},
        {"beam_spacing", p.beam_spacing},
        {"beam_height_delta", p.beam_height_delta},
        {"merge_distance", p.merge_distance},
        {"sparsity", sparsity(p)},
        {"cell_size", grid.cell_size()},
        {"origin", {grid.origin().x(), grid.origin().y()}},
        {"nx", grid.nx()},
        {"ny", grid.ny()},
        {"fall_height", grid.fall_height()},
        {"course_start", grid.course_start},
        {"course_end", grid.course_end},
        {"spawn", {grid.spawn.x(), grid.spawn.y()}},
    };
    auto side = open_or_throw(stem + "_params.json");
    side << j.dump(2) << '\n';
  }
}

}  // namespace sparsestep
