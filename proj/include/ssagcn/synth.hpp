#pragma once

// Scripted synthetic scenes for tests and small-scale training runs.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "ssagcn/scene_grid.hpp"
#include "ssagcn/trajdata.hpp"

namespace ssagcn::synth {

enum class ScenarioKind { head_on, receding, overtake, parallel, crossing, obstacle_gate };

std::string_view to_string(ScenarioKind kind);
ScenarioKind kind_from_string(std::string_view text);

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::head_on;
  // head_on, receding and crossing use groups of two agents, overtake
  // groups of three (leader, follower at twice its speed, trailer at 1.5x).
  // Groups walk on separate lanes.
  std::size_t n_agents = 2;
  double speed_min = 0.3;  // world units per sampled frame
  double speed_max = 0.5;
  double noise_sigma = 0.01;
  std::size_t duration = 40;  // sampled frames per episode
  std::size_t episodes = 1;
  std::uint64_t seed = 0;
  // Scripted lateral evasion around meeting and passing points.
  bool avoidance = false;
  // Attach an obstacle-free grid to kinds that have no obstacles.
  bool emit_grid = false;
  std::int64_t frame_stride = 10;
  double cell_size = 0.25;
  std::size_t t_obs = 8;
  std::size_t t_pred = 12;
  // Scene name; defaults to the kind.
  std::string name;
};

void validate(const ScenarioSpec& spec);

struct GeneratedScene {
  trajdata::RawScene scene;
  std::optional<trajdata::SceneGrid> grid;
  // Sampled frame index (within each episode) at which each group meets,
  // passes or crosses; one entry per episode and group.
  std::vector<std::size_t> event_frames;
};

GeneratedScene generate(const ScenarioSpec& spec);

// Writes `<name>.txt` and, when present, `<name>.ssag` into `dir`.
void write_scene(const GeneratedScene& generated, const std::filesystem::path& dir);

}  // namespace ssagcn::synth
