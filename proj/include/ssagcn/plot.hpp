#pragma once

// SVG rendering of a window: observed tracks, ground truth, predictions and
// social attention edges.

#include <cstddef>
#include <optional>
#include <string>

#include "ssagcn/model.hpp"
#include "ssagcn/social.hpp"
#include "ssagcn/trajdata.hpp"

namespace ssagcn::plot {

struct PlotOptions {
  bool adjacency = false;
  // Directed edges i -> j are drawn for normalized weights above this value.
  double edge_threshold = 0.05;
  // Observed frame whose attention is drawn; defaults to the last one.
  std::optional<std::size_t> adjacency_frame;
  social::SsaConfig ssa;
  double width = 800.0;
  double height = 600.0;
};

// Number of off-diagonal entries of a normalized attention matrix that are
// strictly positive and above `threshold`.
std::size_t count_edges(const numerics::Tensor& normalized, double threshold);

// `mode` and `samples` are optional prediction sets for the same window.
std::string render_svg(const trajdata::TrajectoryWindow& window, const PlotOptions& options,
                       const model::TrajectorySet* mode = nullptr,
                       const model::TrajectorySet* samples = nullptr);

}  // namespace ssagcn::plot
