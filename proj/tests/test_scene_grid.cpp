#include <cstring>
#include <fstream>

#include "doctest.h"
#include "ssagcn/errors.hpp"
#include "ssagcn/scene_grid.hpp"
#include "support.hpp"

using namespace ssagcn;
using namespace ssagcn::trajdata;

namespace {

SceneGrid two_by_two() {
  SceneGrid g;
  g.height = 2;
  g.width = 2;
  g.depth = 1;
  g.data = {0, 1, 0, 1};
  return g;
}

std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string pgm(std::size_t w, std::size_t h, unsigned char value) {
  std::string s = "P5\n# comment\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  s.append(w * h, static_cast<char>(value));
  return s;
}

}  // namespace

TEST_SUITE("scene_grid") {
  TEST_CASE("native grid round-trips bit-exactly") {
    const auto dir = testsupport::scratch_dir("grid_rt");
    SceneGrid g = two_by_two();
    g.world_to_grid = {2, 0.5, 1, -0.25, 3, 4, 0, 0, 1};
    save_scene_grid(g, dir / "a.ssag");
    const SceneGrid back = load_scene_grid(dir / "a.ssag");
    CHECK(back.height == 2);
    CHECK(back.width == 2);
    CHECK(back.data == g.data);
    CHECK(back.world_to_grid == g.world_to_grid);
    save_scene_grid(back, dir / "b.ssag");
    CHECK(read_bytes(dir / "a.ssag") == read_bytes(dir / "b.ssag"));
  }

  TEST_CASE("native layout") {
    const std::string bytes = encode_scene_grid(two_by_two());
    REQUIRE(bytes.size() == 4 + 16 + 72 + 16);
    CHECK(bytes.substr(0, 4) == "SSAG");
    std::uint32_t header[4];
    std::memcpy(header, bytes.data() + 4, sizeof header);
    CHECK(header[0] == 1);
    CHECK(header[1] == 2);
    CHECK(header[2] == 2);
    CHECK(header[3] == 1);
    float last;
    std::memcpy(&last, bytes.data() + bytes.size() - 4, 4);
    CHECK(last == 1.0f);
  }

  TEST_CASE("bad magic, truncation and trailing bytes") {
    std::string bytes = encode_scene_grid(two_by_two());
    CHECK_THROWS_AS(decode_scene_grid("XXXX" + bytes.substr(4)), FormatError);
    CHECK_THROWS_AS(decode_scene_grid(bytes.substr(0, bytes.size() - 1)), FormatError);
    CHECK_THROWS_AS(decode_scene_grid(bytes.substr(0, 10)), FormatError);
    CHECK_THROWS_AS(decode_scene_grid(bytes + "x"), FormatError);
  }

  TEST_CASE("singular transform") {
    SceneGrid g = two_by_two();
    g.world_to_grid = {1, 2, 0, 2, 4, 0, 0, 0, 1};
    CHECK_THROWS_AS(validate(g), TransformError);
    CHECK_THROWS_AS(decode_scene_grid(encode_scene_grid(g)), TransformError);
  }

  TEST_CASE("constant PGM becomes a grid of ones") {
    const SceneGrid g = decode_pgm(pgm(4, 4, 255), {});
    CHECK(g.depth == 1);
    CHECK(g.height == 4);
    CHECK(g.width == 4);
    for (float v : g.data) CHECK(v == 1.0f);
    CHECK_THROWS_AS(decode_pgm("P6\n1 1\n255\n", {}), FormatError);
    CHECK_THROWS_AS(decode_pgm("P5\n4 4\n255\n\x01", {}), FormatError);
  }

  TEST_CASE("PGM transform from a sidecar") {
    const auto dir = testsupport::scratch_dir("grid_pgm");
    {
      std::ofstream(dir / "m.pgm", std::ios::binary) << pgm(3, 2, 51);
      std::ofstream(dir / "m.pgm.json") << R"({"scale": [2, 4], "offset": [1, -1]})";
    }
    const SceneGrid g = load_scene_grid(dir / "m.pgm");
    CHECK(g.data[0] == doctest::Approx(0.2));
    const Vec2 c = world_to_cell(g, {1, 1});
    CHECK(c.x == doctest::Approx(3.0));
    CHECK(c.y == doctest::Approx(3.0));
  }

  TEST_CASE("world_to_cell") {
    SceneGrid g = two_by_two();
    Vec2 c = world_to_cell(g, {1.5, 2.5});
    CHECK(c.x == 1.5);
    CHECK(c.y == 2.5);
    g.world_to_grid = {2, 0, 0, 0, 2, 0, 0, 0, 1};
    c = world_to_cell(g, {1, 1});
    CHECK(c.x == 2.0);
    CHECK(c.y == 2.0);
  }

  TEST_CASE("world_to_cell matches a matrix-vector oracle") {
    numerics::Rng rng(8);
    SceneGrid g = two_by_two();
    for (int trial = 0; trial < 200; ++trial) {
      for (int k = 0; k < 6; ++k) g.world_to_grid[k] = rng.uniform(-3, 3);
      g.world_to_grid[6] = rng.uniform(-0.1, 0.1);
      g.world_to_grid[7] = rng.uniform(-0.1, 0.1);
      g.world_to_grid[8] = 1.0;
      const Vec2 p = testsupport::random_point(rng, 4);
      const auto& m = g.world_to_grid;
      double h[3];
      for (int r = 0; r < 3; ++r) h[r] = m[3 * r] * p.x + m[3 * r + 1] * p.y + m[3 * r + 2];
      const Vec2 c = world_to_cell(g, p);
      CHECK(c.x == doctest::Approx(h[0] / h[2]).epsilon(1e-12));
      CHECK(c.y == doctest::Approx(h[1] / h[2]).epsilon(1e-12));
    }
  }

  TEST_CASE("missing grid file") {
    CHECK_THROWS_AS(load_scene_grid("/nonexistent/grid.ssag"), FileError);
  }
}
