#pragma once

// Trajectory ingestion and windowing.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "ssagcn/geometry.hpp"

namespace ssagcn::trajdata {

enum class Units { meters, pixels };

std::string_view to_string(Units units);
Units units_from_string(std::string_view text);

struct Record {
  std::int64_t frame_id = 0;
  std::int64_t agent_id = 0;
  double x = 0.0;
  double y = 0.0;
};

struct RawScene {
  // Sorted by (frame_id, agent_id), pairs unique.
  std::vector<Record> records;
  std::int64_t frame_stride = 1;
  Units units = Units::meters;
  // Provenance label, usually the file stem.
  std::string name;
};

// Parses whitespace-separated rows `frame agent x y`. Blank lines and lines
// starting with '#' are skipped. Ids written as integral floats ("780.0")
// are accepted, as in the public processed ETH/UCY files.
RawScene parse_trajectory_file(std::string_view text, Units units = Units::meters);
RawScene read_trajectory_file(const std::filesystem::path& path, Units units = Units::meters);
// Inverse of parse_trajectory_file; coordinates are written with 17
// significant digits so parsing reproduces them exactly.
std::string format_trajectory_file(const RawScene& scene);

// A slice of T = t_obs + t_pred consecutive sampled frames with the N agents
// present at every one of them.
struct TrajectoryWindow {
  std::size_t t_obs = 8;
  std::size_t t_pred = 12;
  std::vector<std::int64_t> agent_ids;
  // Row-major [T][N].
  std::vector<Vec2> positions;
  Units units = Units::meters;
  std::string source;
  std::int64_t start_frame = 0;

  std::size_t num_frames() const noexcept { return t_obs + t_pred; }
  std::size_t num_agents() const noexcept { return agent_ids.size(); }
  const Vec2& at(std::size_t t, std::size_t i) const { return positions[t * num_agents() + i]; }
  Vec2& at(std::size_t t, std::size_t i) { return positions[t * num_agents() + i]; }
};

std::vector<TrajectoryWindow> build_windows(const RawScene& scene, std::size_t t_obs = 8,
                                            std::size_t t_pred = 12, std::size_t stride = 1);

// Per-step displacements; the first frame copies the second.
struct DisplacementField {
  std::size_t frames = 0;
  std::size_t agents = 0;
  std::vector<Vec2> u;

  const Vec2& at(std::size_t t, std::size_t i) const { return u[t * agents + i]; }
};

DisplacementField displacements(const TrajectoryWindow& window);

// Reorders the agents of a window; `order[k]` is the old index of new agent k.
TrajectoryWindow permute_agents(const TrajectoryWindow& window,
                                const std::vector<std::size_t>& order);

}  // namespace ssagcn::trajdata
