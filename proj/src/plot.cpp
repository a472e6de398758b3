#include "ssagcn/plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>

#include "ssagcn/errors.hpp"

namespace ssagcn::plot {

using model::TrajectorySet;
using trajdata::TrajectoryWindow;

std::size_t count_edges(const numerics::Tensor& normalized, double threshold) {
  const std::size_t n = normalized.dim(0);
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double w = normalized.at(i, j);
      if (i != j && w > 0.0 && w > threshold) ++count;
    }
  return count;
}

namespace {

class Canvas {
 public:
  Canvas(double width, double height, double xmin, double xmax, double ymin, double ymax)
      : width_(width), height_(height) {
    const double margin = 30.0;
    const double sx = (width - 2 * margin) / std::max(xmax - xmin, 1e-9);
    const double sy = (height - 2 * margin) / std::max(ymax - ymin, 1e-9);
    scale_ = std::min(sx, sy);
    ox_ = margin - xmin * scale_ + 0.5 * ((width - 2 * margin) - (xmax - xmin) * scale_);
    oy_ = height - margin + ymin * scale_ - 0.5 * ((height - 2 * margin) - (ymax - ymin) * scale_);
  }

  std::string xy(const Vec2& p) const {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f,%.2f", ox_ + p.x * scale_, oy_ - p.y * scale_);
    return buf;
  }

  std::pair<double, double> map(const Vec2& p) const {
    return {ox_ + p.x * scale_, oy_ - p.y * scale_};
  }

  double width() const { return width_; }
  double height() const { return height_; }

 private:
  double width_, height_;
  double scale_ = 1.0, ox_ = 0.0, oy_ = 0.0;
};

std::string polyline(const Canvas& c, const std::vector<Vec2>& pts, const char* cls,
                     const char* style) {
  std::string out = "<polyline class=\"";
  out += cls;
  out += "\" fill=\"none\" ";
  out += style;
  out += " points=\"";
  for (std::size_t k = 0; k < pts.size(); ++k) {
    if (k) out += ' ';
    out += c.xy(pts[k]);
  }
  out += "\"/>\n";
  return out;
}

// Blue to yellow ramp for edge weights in [0, 1].
std::string ramp(double w) {
  static constexpr std::array<std::array<double, 3>, 3> stops{{{68, 1, 84}, {33, 145, 140}, {253, 231, 37}}};
  w = std::clamp(w, 0.0, 1.0) * 2.0;
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(w), 1);
  const double f = w - static_cast<double>(k);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x",
                static_cast<int>(std::lround(stops[k][0] + f * (stops[k + 1][0] - stops[k][0]))),
                static_cast<int>(std::lround(stops[k][1] + f * (stops[k + 1][1] - stops[k][1]))),
                static_cast<int>(std::lround(stops[k][2] + f * (stops[k + 1][2] - stops[k][2]))));
  return buf;
}

}  // namespace

std::string render_svg(const TrajectoryWindow& window, const PlotOptions& options,
                       const TrajectorySet* mode, const TrajectorySet* samples) {
  const std::size_t n = window.num_agents();
  const std::size_t t_total = window.num_frames();
  for (const TrajectorySet* set : {mode, samples}) {
    if (set && (set->agents != n || set->t_pred != window.t_pred)) {
      throw ShapeError("prediction set does not match the plotted window");
    }
  }
  double xmin = std::numeric_limits<double>::infinity(), ymin = xmin;
  double xmax = -xmin, ymax = -xmin;
  auto extend = [&](const Vec2& p) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  };
  for (const auto& p : window.positions) extend(p);
  for (const TrajectorySet* set : {mode, samples}) {
    if (set) for (const auto& p : set->points) extend(p);
  }
  const Canvas canvas(options.width, options.height, xmin, xmax, ymin, ymax);

  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" "
                "viewBox=\"0 0 %.0f %.0f\">\n",
                canvas.width(), canvas.height(), canvas.width(), canvas.height());
  std::string svg = buf;
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Vec2> observed, truth;
    for (std::size_t t = 0; t < window.t_obs; ++t) observed.push_back(window.at(t, i));
    for (std::size_t t = window.t_obs - 1; t < t_total; ++t) truth.push_back(window.at(t, i));
    if (samples) {
      for (std::size_t s = 0; s < samples->k; ++s) {
        std::vector<Vec2> track{window.at(window.t_obs - 1, i)};
        for (std::size_t t = 0; t < samples->t_pred; ++t) track.push_back(samples->at(s, t, i));
        svg += polyline(canvas, track, "sample", "stroke=\"#f4a582\" stroke-width=\"1\" stroke-opacity=\"0.5\"");
      }
    }
    svg += polyline(canvas, truth, "ground-truth", "stroke=\"#1a9850\" stroke-width=\"2\" stroke-dasharray=\"6,3\"");
    svg += polyline(canvas, observed, "observed", "stroke=\"#2166ac\" stroke-width=\"2\"");
    if (mode) {
      std::vector<Vec2> track{window.at(window.t_obs - 1, i)};
      for (std::size_t t = 0; t < mode->t_pred; ++t) track.push_back(mode->at(0, t, i));
      svg += polyline(canvas, track, "mode", "stroke=\"#b2182b\" stroke-width=\"2\"");
    }
  }

  if (options.adjacency) {
    const std::size_t t = options.adjacency_frame.value_or(window.t_obs - 1);
    if (t >= window.t_obs) throw InvalidArgument("adjacency frame must be an observed frame");
    const auto u = trajdata::displacements(window);
    const std::span<const Vec2> pos(&window.positions[t * n], n);
    const std::span<const Vec2> vel(&u.u[t * n], n);
    const auto attn = social::ssa_matrix(pos, vel, options.ssa, t);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const double w = attn.normalized.at(i, j);
        if (i == j || !(w > 0.0) || !(w > options.edge_threshold)) continue;
        const auto [x1, y1] = canvas.map(window.at(t, i));
        const auto [x2, y2] = canvas.map(window.at(t, j));
        std::snprintf(buf, sizeof(buf),
                      "<line class=\"ssa-edge\" data-from=\"%zu\" data-to=\"%zu\" "
                      "data-weight=\"%.6f\" x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" ",
                      i, j, w, x1, y1, x2, y2);
        svg += buf;
        svg += "stroke=\"" + ramp(w) + "\" stroke-width=\"" + std::to_string(1 + static_cast<int>(4 * w)) +
               "\" stroke-opacity=\"0.8\"/>\n";
      }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto [x, y] = canvas.map(window.at(window.t_obs - 1, i));
    std::snprintf(buf, sizeof(buf),
                  "<circle class=\"agent\" data-id=\"%lld\" cx=\"%.2f\" cy=\"%.2f\" r=\"4\" "
                  "fill=\"#2166ac\"/>\n",
                  static_cast<long long>(window.agent_ids[i]), x, y);
    svg += buf;
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace ssagcn::plot
