#include "ssagcn/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include "ssagcn/errors.hpp"
#include "ssagcn/numerics/rng.hpp"

namespace ssagcn::synth {

using trajdata::RawScene;
using trajdata::Record;
using trajdata::SceneGrid;

std::string_view to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::head_on: return "head_on";
    case ScenarioKind::receding: return "receding";
    case ScenarioKind::overtake: return "overtake";
    case ScenarioKind::parallel: return "parallel";
    case ScenarioKind::crossing: return "crossing";
    case ScenarioKind::obstacle_gate: return "obstacle_gate";
  }
  return "head_on";
}

ScenarioKind kind_from_string(std::string_view text) {
  for (auto k : {ScenarioKind::head_on, ScenarioKind::receding, ScenarioKind::overtake,
                 ScenarioKind::parallel, ScenarioKind::crossing, ScenarioKind::obstacle_gate}) {
    if (text == to_string(k)) return k;
  }
  throw InvalidArgument("unknown scenario kind '" + std::string(text) + "'");
}

namespace {

std::size_t group_size(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::head_on:
    case ScenarioKind::receding:
    case ScenarioKind::crossing: return 2;
    case ScenarioKind::overtake: return 3;
    case ScenarioKind::parallel:
    case ScenarioKind::obstacle_gate: return 1;
  }
  return 1;
}

constexpr double kLaneSpacing = 4.0;
constexpr double kSwerveAmplitude = 0.35;
constexpr double kSwerveHalfWidth = 5.0;
constexpr std::size_t kEpisodeGap = 5;

// Gate geometry: a wall along x = 0 with an opening around y = gap_y.
constexpr double kWallHalfThickness = 0.5;
constexpr double kGapHalfWidth = 0.6;
constexpr double kGateExtentX = 10.0;
constexpr double kGateExtentY = 6.0;

double swerve(bool enabled, double k, double m) {
  if (!enabled) return 0.0;
  const double d = (k - m) / kSwerveHalfWidth;
  if (std::abs(d) >= 1.0) return 0.0;
  return 0.5 * (1.0 + std::cos(std::numbers::pi * d));
}

struct Track {
  std::vector<Vec2> points;  // [duration]
};

Vec2 along_polyline(const std::vector<Vec2>& path, double s) {
  for (std::size_t k = 0; k + 1 < path.size(); ++k) {
    const double len = distance(path[k], path[k + 1]);
    if (s <= len || k + 2 == path.size()) {
      const double f = len > 0.0 ? s / len : 0.0;
      return path[k] + f * (path[k + 1] - path[k]);
    }
    s -= len;
  }
  return path.back();
}

SceneGrid gate_grid(double gap_y, double cell) {
  SceneGrid grid;
  grid.width = static_cast<std::uint32_t>(std::lround(2 * kGateExtentX / cell));
  grid.height = static_cast<std::uint32_t>(std::lround(2 * kGateExtentY / cell));
  grid.depth = 1;
  trajdata::AxisAlignedTransform tf{1.0 / cell, 1.0 / cell, kGateExtentX / cell, kGateExtentY / cell};
  grid.world_to_grid = tf.matrix();
  grid.data.assign(static_cast<std::size_t>(grid.width) * grid.height, 0.0f);
  for (std::uint32_t r = 0; r < grid.height; ++r)
    for (std::uint32_t c = 0; c < grid.width; ++c) {
      const double x = (c + 0.5) * cell - kGateExtentX;
      const double y = (r + 0.5) * cell - kGateExtentY;
      if (std::abs(x) <= kWallHalfThickness && std::abs(y - gap_y) > kGapHalfWidth) {
        grid.at(r, c, 0) = 1.0f;
      }
    }
  return grid;
}

SceneGrid empty_grid(const RawScene& scene, double cell) {
  double xmin = std::numeric_limits<double>::infinity(), ymin = xmin;
  double xmax = -xmin, ymax = -xmin;
  for (const auto& r : scene.records) {
    xmin = std::min(xmin, r.x);
    xmax = std::max(xmax, r.x);
    ymin = std::min(ymin, r.y);
    ymax = std::max(ymax, r.y);
  }
  xmin = std::floor(xmin) - 2.0;
  ymin = std::floor(ymin) - 2.0;
  SceneGrid grid;
  grid.width = static_cast<std::uint32_t>(std::ceil((xmax + 2.0 - xmin) / cell));
  grid.height = static_cast<std::uint32_t>(std::ceil((ymax + 2.0 - ymin) / cell));
  grid.depth = 1;
  trajdata::AxisAlignedTransform tf{1.0 / cell, 1.0 / cell, -xmin / cell, -ymin / cell};
  grid.world_to_grid = tf.matrix();
  grid.data.assign(static_cast<std::size_t>(grid.width) * grid.height, 0.0f);
  return grid;
}

}  // namespace

void validate(const ScenarioSpec& spec) {
  if (spec.duration < spec.t_obs + spec.t_pred) {
    throw InvalidArgument("duration " + std::to_string(spec.duration) +
                          " is shorter than one window");
  }
  if (!(spec.speed_min > 0.0) || spec.speed_max < spec.speed_min) {
    throw InvalidArgument("speeds must be positive with speed_min <= speed_max");
  }
  if (spec.noise_sigma < 0.0) throw InvalidArgument("noise_sigma must be non-negative");
  if (spec.episodes < 1) throw InvalidArgument("need at least one episode");
  if (spec.frame_stride < 1) throw InvalidArgument("frame_stride must be positive");
  if (!(spec.cell_size > 0.0)) throw InvalidArgument("cell_size must be positive");
  const std::size_t g = group_size(spec.kind);
  if (spec.n_agents < g || spec.n_agents % g != 0) {
    throw InvalidArgument(std::string(to_string(spec.kind)) + " needs a positive multiple of " +
                          std::to_string(g) + " agents");
  }
}

GeneratedScene generate(const ScenarioSpec& spec) {
  validate(spec);
  numerics::Rng rng(spec.seed);
  const std::size_t n = spec.n_agents;
  const std::size_t groups = n / group_size(spec.kind);
  const std::size_t dur = spec.duration;
  auto speed = [&] { return rng.uniform(spec.speed_min, spec.speed_max); };
  auto event_frame = [&] {
    // Keep the event inside the episode so sliding windows see every phase.
    const auto lo = static_cast<double>(spec.t_obs);
    const auto hi = static_cast<double>(dur) - 3.0;
    return std::floor(rng.uniform(lo, std::max(lo + 1.0, hi)));
  };
  const double gap_y = spec.kind == ScenarioKind::obstacle_gate ? rng.uniform(-1.0, 1.0) : 0.0;

  GeneratedScene out;
  RawScene& scene = out.scene;
  scene.name = spec.name.empty() ? std::string(to_string(spec.kind)) : spec.name;
  scene.frame_stride = spec.frame_stride;

  for (std::size_t e = 0; e < spec.episodes; ++e) {
    std::vector<Track> tracks(n, Track{std::vector<Vec2>(dur)});
    for (std::size_t g = 0; g < groups; ++g) {
      const double lane = kLaneSpacing * static_cast<double>(g);
      switch (spec.kind) {
        case ScenarioKind::head_on: {
          const double m = event_frame();
          const double va = speed(), vb = speed();
          const double offset = rng.uniform(-0.05, 0.05);
          for (std::size_t k = 0; k < dur; ++k) {
            const double t = static_cast<double>(k) - m;
            const double s = kSwerveAmplitude * swerve(spec.avoidance, static_cast<double>(k), m);
            tracks[2 * g].points[k] = {va * t, lane + 0.5 * offset - s};
            tracks[2 * g + 1].points[k] = {-vb * t, lane - 0.5 * offset + s};
          }
          out.event_frames.push_back(static_cast<std::size_t>(m));
          break;
        }
        case ScenarioKind::receding: {
          const double va = speed(), vb = speed();
          const double start = rng.uniform(0.3, 0.6);
          const double offset = rng.uniform(-0.05, 0.05);
          for (std::size_t k = 0; k < dur; ++k) {
            const double t = static_cast<double>(k);
            tracks[2 * g].points[k] = {-0.5 * start - va * t, lane + 0.5 * offset};
            tracks[2 * g + 1].points[k] = {0.5 * start + vb * t, lane - 0.5 * offset};
          }
          out.event_frames.push_back(0);
          break;
        }
        case ScenarioKind::overtake: {
          const double m = event_frame();
          const double v = speed();
          const double trail_gap = rng.uniform(0.8, 1.2);
          for (std::size_t k = 0; k < dur; ++k) {
            const double t = static_cast<double>(k) - m;
            const double s = kSwerveAmplitude * swerve(spec.avoidance, static_cast<double>(k), m);
            tracks[3 * g].points[k] = {v * t, lane};
            tracks[3 * g + 1].points[k] = {2.0 * v * t, lane + 0.02 + s};
            tracks[3 * g + 2].points[k] = {-2.0 * v * m - trail_gap + 1.5 * v * static_cast<double>(k),
                                           lane - 0.02};
          }
          out.event_frames.push_back(static_cast<std::size_t>(m));
          break;
        }
        case ScenarioKind::parallel: {
          const double v = speed();
          const double y = 0.7 * static_cast<double>(g);
          const double x0 = rng.uniform(-0.1, 0.1);
          for (std::size_t k = 0; k < dur; ++k) {
            tracks[g].points[k] = {x0 + v * static_cast<double>(k), y};
          }
          break;
        }
        case ScenarioKind::crossing: {
          const double m = event_frame();
          const double va = speed(), vb = speed();
          const double lag = rng.uniform(-1.0, 1.0);
          const double cx = kLaneSpacing * static_cast<double>(g);
          for (std::size_t k = 0; k < dur; ++k) {
            const double t = static_cast<double>(k) - m;
            const double s = kSwerveAmplitude * swerve(spec.avoidance, static_cast<double>(k), m);
            tracks[2 * g].points[k] = {cx + va * t, -s};
            tracks[2 * g + 1].points[k] = {cx + s, vb * (t + lag)};
          }
          out.event_frames.push_back(static_cast<std::size_t>(m));
          break;
        }
        case ScenarioKind::obstacle_gate: {
          const double v = speed();
          const double y0 = rng.uniform(-3.0, 3.0);
          const std::vector<Vec2> path{{-kGateExtentX + 1.0, y0},
                                       {-kWallHalfThickness - 0.2, gap_y},
                                       {kWallHalfThickness + 0.2, gap_y},
                                       {kGateExtentX - 1.0, gap_y + 0.3 * y0}};
          const double s0 = rng.uniform(0.0, 2.0);
          for (std::size_t k = 0; k < dur; ++k) {
            tracks[g].points[k] = along_polyline(path, s0 + v * static_cast<double>(k));
          }
          break;
        }
      }
    }
    const std::int64_t base = static_cast<std::int64_t>(e * (dur + kEpisodeGap));
    for (std::size_t i = 0; i < n; ++i) {
      const auto agent = static_cast<std::int64_t>(e * n + i + 1);
      for (std::size_t k = 0; k < dur; ++k) {
        Vec2 p = tracks[i].points[k];
        if (spec.noise_sigma > 0.0) {
          const auto [zx, zy] = rng.normal_pair();
          p += Vec2{spec.noise_sigma * zx, spec.noise_sigma * zy};
        }
        scene.records.push_back(
            Record{(base + static_cast<std::int64_t>(k)) * spec.frame_stride, agent, p.x, p.y});
      }
    }
  }
  std::sort(scene.records.begin(), scene.records.end(), [](const Record& a, const Record& b) {
    return a.frame_id != b.frame_id ? a.frame_id < b.frame_id : a.agent_id < b.agent_id;
  });
  if (spec.kind == ScenarioKind::obstacle_gate) {
    out.grid = gate_grid(gap_y, spec.cell_size);
  } else if (spec.emit_grid) {
    out.grid = empty_grid(scene, spec.cell_size);
  }
  return out;
}

void write_scene(const GeneratedScene& generated, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path txt = dir / (generated.scene.name + ".txt");
  std::ofstream out(txt, std::ios::binary);
  if (!out) throw FileError("cannot write " + txt.string());
  out << trajdata::format_trajectory_file(generated.scene);
  if (!out) throw FileError("cannot write " + txt.string());
  if (generated.grid) trajdata::save_scene_grid(*generated.grid, dir / (generated.scene.name + ".ssag"));
}

}  // namespace ssagcn::synth
