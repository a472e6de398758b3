#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ssagcn/numerics/rng.hpp"
#include "ssagcn/numerics/tensor.hpp"
#include "ssagcn/trajdata.hpp"

namespace testsupport {

using ssagcn::Vec2;

// Fresh empty directory under the system temp dir, unique per name.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("ssagcn_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline Vec2 random_point(ssagcn::numerics::Rng& rng, double extent) {
  return {rng.uniform(-extent, extent), rng.uniform(-extent, extent)};
}

inline ssagcn::numerics::Tensor random_tensor(ssagcn::numerics::Rng& rng,
                                              ssagcn::numerics::Shape shape, double scale = 1.0) {
  ssagcn::numerics::Tensor t(std::move(shape));
  for (auto& v : t.storage()) v = rng.uniform(-scale, scale);
  return t;
}

// Random walk window: each agent starts somewhere in a 10x10 box and moves
// with a jittered velocity.
inline ssagcn::trajdata::TrajectoryWindow random_window(ssagcn::numerics::Rng& rng, std::size_t n,
                                                        std::size_t t_obs = 8,
                                                        std::size_t t_pred = 12) {
  ssagcn::trajdata::TrajectoryWindow w;
  w.t_obs = t_obs;
  w.t_pred = t_pred;
  for (std::size_t i = 0; i < n; ++i) w.agent_ids.push_back(static_cast<std::int64_t>(i + 1));
  w.positions.resize(w.num_frames() * n);
  for (std::size_t i = 0; i < n; ++i) {
    Vec2 p = random_point(rng, 5.0);
    Vec2 v = random_point(rng, 0.5);
    for (std::size_t t = 0; t < w.num_frames(); ++t) {
      w.at(t, i) = p;
      v += random_point(rng, 0.05);
      p += v;
    }
  }
  w.source = "random";
  return w;
}

// One agent per entry of `velocities`, each moving in a straight line from
// its start.
inline ssagcn::trajdata::TrajectoryWindow straight_window(const std::vector<Vec2>& starts,
                                                          const std::vector<Vec2>& velocities,
                                                          std::size_t t_obs = 8,
                                                          std::size_t t_pred = 12) {
  ssagcn::trajdata::TrajectoryWindow w;
  w.t_obs = t_obs;
  w.t_pred = t_pred;
  const std::size_t n = starts.size();
  for (std::size_t i = 0; i < n; ++i) w.agent_ids.push_back(static_cast<std::int64_t>(i + 1));
  w.positions.resize(w.num_frames() * n);
  for (std::size_t t = 0; t < w.num_frames(); ++t)
    for (std::size_t i = 0; i < n; ++i)
      w.at(t, i) = starts[i] + static_cast<double>(t) * velocities[i];
  w.source = "straight";
  return w;
}

}  // namespace testsupport
