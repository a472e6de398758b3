#include "ssagcn/scene_grid.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ssagcn/errors.hpp"

namespace ssagcn::trajdata {

std::array<double, 9> AxisAlignedTransform::matrix() const {
  return {scale_x, 0.0, offset_x, 0.0, scale_y, offset_y, 0.0, 0.0, 1.0};
}

namespace {

double determinant(const std::array<double, 9>& m) {
  return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
         m[2] * (m[3] * m[7] - m[4] * m[6]);
}

template <class T>
void put_le(std::string& out, T value) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  const U bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

template <class T>
T get_le(std::string_view bytes, std::size_t& offset) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  if (offset + sizeof(T) > bytes.size()) throw FormatError("scene grid file is truncated");
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bits |= static_cast<U>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
  }
  offset += sizeof(T);
  return std::bit_cast<T>(bits);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

void validate(const SceneGrid& grid) {
  if (grid.height == 0 || grid.width == 0 || grid.depth == 0) {
    throw FormatError("scene grid has an empty dimension");
  }
  if (grid.data.size() != std::size_t{grid.height} * grid.width * grid.depth) {
    throw FormatError("scene grid data length does not match its dimensions");
  }
  for (float v : grid.data) {
    if (!std::isfinite(v)) throw FormatError("scene grid contains non-finite values");
  }
  for (double v : grid.world_to_grid) {
    if (!std::isfinite(v)) throw TransformError("world_to_grid has non-finite entries");
  }
  if (std::abs(determinant(grid.world_to_grid)) < 1e-12) {
    throw TransformError("world_to_grid transform is singular");
  }
}

Vec2 world_to_cell(const SceneGrid& grid, const Vec2& p) {
  const auto& m = grid.world_to_grid;
  const double x = m[0] * p.x + m[1] * p.y + m[2];
  const double y = m[3] * p.x + m[4] * p.y + m[5];
  const double w = m[6] * p.x + m[7] * p.y + m[8];
  return {x / w, y / w};
}

std::string encode_scene_grid(const SceneGrid& grid) {
  validate(grid);
  std::string out = "SSAG";
  put_le<std::uint32_t>(out, kSceneGridVersion);
  put_le<std::uint32_t>(out, grid.height);
  put_le<std::uint32_t>(out, grid.width);
  put_le<std::uint32_t>(out, grid.depth);
  for (double v : grid.world_to_grid) put_le<double>(out, v);
  for (float v : grid.data) put_le<float>(out, v);
  return out;
}

SceneGrid decode_scene_grid(std::string_view bytes) {
  if (bytes.size() < 4 || bytes.substr(0, 4) != "SSAG") throw FormatError("bad scene grid magic");
  std::size_t offset = 4;
  const auto version = get_le<std::uint32_t>(bytes, offset);
  if (version != kSceneGridVersion) {
    throw FormatError("unsupported scene grid version " + std::to_string(version));
  }
  SceneGrid grid;
  grid.height = get_le<std::uint32_t>(bytes, offset);
  grid.width = get_le<std::uint32_t>(bytes, offset);
  grid.depth = get_le<std::uint32_t>(bytes, offset);
  for (double& v : grid.world_to_grid) v = get_le<double>(bytes, offset);
  const std::size_t count = std::size_t{grid.height} * grid.width * grid.depth;
  if ((bytes.size() - offset) / 4 < count) throw FormatError("scene grid file is truncated");
  grid.data.resize(count);
  for (float& v : grid.data) v = get_le<float>(bytes, offset);
  if (offset != bytes.size()) throw FormatError("trailing bytes after scene grid data");
  validate(grid);
  return grid;
}

SceneGrid decode_pgm(std::string_view bytes, const AxisAlignedTransform& transform) {
  if (bytes.size() < 2 || bytes.substr(0, 2) != "P5") throw FormatError("bad PGM magic");
  std::size_t pos = 2;
  auto next_token = [&]() -> long {
    for (;;) {
      while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
      if (pos < bytes.size() && bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        continue;
      }
      break;
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (start == pos) throw FormatError("malformed PGM header");
    return std::stol(std::string(bytes.substr(start, pos - start)));
  };
  const long width = next_token();
  const long height = next_token();
  const long maxval = next_token();
  if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535) {
    throw FormatError("invalid PGM dimensions or maxval");
  }
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw FormatError("PGM file is truncated");
  }
  ++pos;
  const std::size_t bpp = maxval < 256 ? 1 : 2;
  const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bytes.size() - pos < count * bpp) throw FormatError("PGM file is truncated");
  SceneGrid grid;
  grid.height = static_cast<std::uint32_t>(height);
  grid.width = static_cast<std::uint32_t>(width);
  grid.depth = 1;
  grid.world_to_grid = transform.matrix();
  grid.data.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    unsigned value = static_cast<unsigned char>(bytes[pos + i * bpp]);
    if (bpp == 2) value = (value << 8) | static_cast<unsigned char>(bytes[pos + i * bpp + 1]);
    grid.data[i] = static_cast<float>(static_cast<double>(value) / static_cast<double>(maxval));
  }
  validate(grid);
  return grid;
}

void save_scene_grid(const SceneGrid& grid, const std::filesystem::path& path) {
  const std::string bytes = encode_scene_grid(grid);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

SceneGrid load_scene_grid(const std::filesystem::path& path,
                          std::optional<AxisAlignedTransform> transform) {
  const std::string bytes = read_file(path);
  if (bytes.size() >= 2 && bytes.compare(0, 2, "P5") == 0) {
    if (!transform) {
      transform = AxisAlignedTransform{};
      std::filesystem::path sidecar = path;
      sidecar += ".json";
      if (std::filesystem::exists(sidecar)) {
        try {
          const auto j = nlohmann::json::parse(read_file(sidecar));
          if (j.contains("scale")) {
            transform->scale_x = j.at("scale").at(0).get<double>();
            transform->scale_y = j.at("scale").at(1).get<double>();
          }
          if (j.contains("offset")) {
            transform->offset_x = j.at("offset").at(0).get<double>();
            transform->offset_y = j.at("offset").at(1).get<double>();
          }
        } catch (const nlohmann::json::exception& e) {
          throw FormatError("bad PGM sidecar " + sidecar.string() + ": " + e.what());
        }
      }
    }
    return decode_pgm(bytes, *transform);
  }
  return decode_scene_grid(bytes);
}

}  // namespace ssagcn::trajdata
