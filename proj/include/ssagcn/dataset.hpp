#pragma once

// Scene collections on disk. A data path is either one trajectory file or a
// directory whose *.txt files are scenes; a grid named after the scene stem
// (`<stem>.ssag` or `<stem>.pgm`) next to it is attached when present.

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ssagcn/scene_grid.hpp"
#include "ssagcn/trajdata.hpp"

namespace ssagcn::trajdata {

struct Scene {
  RawScene raw;
  std::optional<SceneGrid> grid;
};

struct WindowOptions {
  std::size_t t_obs = 8;
  std::size_t t_pred = 12;
  std::size_t stride = 1;
};

class Dataset {
 public:
  // Windows in scene order; each window's `source` names its scene.
  std::vector<TrajectoryWindow> windows;
  std::map<std::string, SceneGrid> grids;
  std::vector<std::string> scene_names;

  const SceneGrid* grid_for(const TrajectoryWindow& window) const;
  bool empty() const noexcept { return windows.empty(); }
};

std::vector<Scene> load_scenes(const std::vector<std::filesystem::path>& paths,
                               Units units = Units::meters);

// Scene names must be unique.
Dataset make_dataset(const std::vector<Scene>& scenes, const WindowOptions& options);

Dataset load_dataset(const std::vector<std::filesystem::path>& paths,
                     const WindowOptions& options, Units units = Units::meters);

// Keeps the listed scenes, or every other scene when `exclude` is set.
Dataset select_scenes(const Dataset& data, const std::vector<std::string>& names, bool exclude);

}  // namespace ssagcn::trajdata
