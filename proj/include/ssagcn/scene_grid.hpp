#pragma once

// Rasterized scene features with a world -> grid transform.
//
// Native file layout (little-endian):
//   "SSAG" | u32 version=1 | u32 H | u32 W | u32 D | 9 x f64 world_to_grid
//   (row-major) | H*W*D x f32 data (row-major [H][W][D])

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ssagcn/geometry.hpp"

namespace ssagcn::trajdata {

inline constexpr std::uint32_t kSceneGridVersion = 1;

struct SceneGrid {
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::uint32_t depth = 0;
  // Maps homogeneous world points (x, y, 1) to continuous cell coordinates
  // (column, row). Cell (r, c) covers [c, c+1) x [r, r+1).
  std::array<double, 9> world_to_grid{1, 0, 0, 0, 1, 0, 0, 0, 1};
  std::vector<float> data;

  float at(std::size_t row, std::size_t col, std::size_t channel) const {
    return data[(row * width + col) * depth + channel];
  }
  float& at(std::size_t row, std::size_t col, std::size_t channel) {
    return data[(row * width + col) * depth + channel];
  }
};

// Axis-aligned transform cell = scale * world + offset, as used for PGM inputs.
struct AxisAlignedTransform {
  double scale_x = 1.0;
  double scale_y = 1.0;
  double offset_x = 0.0;
  double offset_y = 0.0;

  std::array<double, 9> matrix() const;
};

// Throws FormatError/TransformError when the grid is malformed.
void validate(const SceneGrid& grid);

Vec2 world_to_cell(const SceneGrid& grid, const Vec2& p);

std::string encode_scene_grid(const SceneGrid& grid);
SceneGrid decode_scene_grid(std::string_view bytes);
// Binary P5 PGM, one channel scaled to [0, 1].
SceneGrid decode_pgm(std::string_view bytes, const AxisAlignedTransform& transform);

void save_scene_grid(const SceneGrid& grid, const std::filesystem::path& path);
// Dispatches on content: native grids by magic, PGM by "P5". For PGM the
// transform comes from `transform`, else from a JSON sidecar `<path>.json`
// holding {"scale": [sx, sy], "offset": [ox, oy]}, else identity.
SceneGrid load_scene_grid(const std::filesystem::path& path,
                          std::optional<AxisAlignedTransform> transform = std::nullopt);

}  // namespace ssagcn::trajdata
