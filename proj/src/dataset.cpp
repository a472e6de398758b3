#include "ssagcn/dataset.hpp"

#include <algorithm>
#include <set>

#include "ssagcn/errors.hpp"

namespace ssagcn::trajdata {

namespace fs = std::filesystem;

const SceneGrid* Dataset::grid_for(const TrajectoryWindow& window) const {
  const auto it = grids.find(window.source);
  return it == grids.end() ? nullptr : &it->second;
}

namespace {

std::optional<SceneGrid> sibling_grid(const fs::path& trajectory) {
  for (const char* ext : {".ssag", ".pgm"}) {
    fs::path candidate = trajectory;
    candidate.replace_extension(ext);
    if (fs::is_regular_file(candidate)) return load_scene_grid(candidate);
  }
  return std::nullopt;
}

Scene load_scene(const fs::path& file, Units units) {
  Scene scene;
  scene.raw = read_trajectory_file(file, units);
  scene.grid = sibling_grid(file);
  return scene;
}

}  // namespace

std::vector<Scene> load_scenes(const std::vector<fs::path>& paths, Units units) {
  std::vector<Scene> scenes;
  for (const auto& path : paths) {
    if (fs::is_directory(path)) {
      std::vector<fs::path> files;
      for (const auto& entry : fs::directory_iterator(path)) {
        if (entry.is_regular_file() && entry.path().extension() == ".txt") {
          files.push_back(entry.path());
        }
      }
      std::sort(files.begin(), files.end());
      if (files.empty()) throw EmptyDataset("no trajectory files in " + path.string());
      for (const auto& f : files) scenes.push_back(load_scene(f, units));
    } else if (fs::exists(path)) {
      scenes.push_back(load_scene(path, units));
    } else {
      throw FileError("no such file or directory: " + path.string());
    }
  }
  return scenes;
}

Dataset make_dataset(const std::vector<Scene>& scenes, const WindowOptions& options) {
  Dataset data;
  std::set<std::string> seen;
  for (const auto& scene : scenes) {
    if (!seen.insert(scene.raw.name).second) {
      throw InvalidArgument("duplicate scene name '" + scene.raw.name + "'");
    }
    data.scene_names.push_back(scene.raw.name);
    auto windows = build_windows(scene.raw, options.t_obs, options.t_pred, options.stride);
    for (auto& w : windows) data.windows.push_back(std::move(w));
    if (scene.grid) data.grids.emplace(scene.raw.name, *scene.grid);
  }
  return data;
}

Dataset load_dataset(const std::vector<fs::path>& paths, const WindowOptions& options,
                     Units units) {
  return make_dataset(load_scenes(paths, units), options);
}

Dataset select_scenes(const Dataset& data, const std::vector<std::string>& names, bool exclude) {
  const std::set<std::string> listed(names.begin(), names.end());
  for (const auto& name : listed) {
    if (std::find(data.scene_names.begin(), data.scene_names.end(), name) ==
        data.scene_names.end()) {
      throw InvalidArgument("unknown scene '" + name + "'");
    }
  }
  auto wanted = [&](const std::string& name) { return listed.contains(name) != exclude; };
  Dataset out;
  for (const auto& name : data.scene_names) {
    if (!wanted(name)) continue;
    out.scene_names.push_back(name);
    if (const auto it = data.grids.find(name); it != data.grids.end()) out.grids.emplace(*it);
  }
  for (const auto& w : data.windows) {
    if (wanted(w.source)) out.windows.push_back(w);
  }
  return out;
}

}  // namespace ssagcn::trajdata
