#include "ssagcn/trajdata.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "ssagcn/errors.hpp"

namespace ssagcn::trajdata {

std::string_view to_string(Units units) {
  return units == Units::meters ? "meters" : "pixels";
}

Units units_from_string(std::string_view text) {
  if (text == "meters") return Units::meters;
  if (text == "pixels") return Units::pixels;
  throw InvalidArgument("unknown units '" + std::string(text) + "'");
}

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f'; }

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    const std::size_t start = i;
    while (i < line.size() && !is_space(line[i])) ++i;
    if (i > start) fields.push_back(line.substr(start, i - start));
  }
  return fields;
}

double parse_number(std::string_view field, std::size_t line) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw ParseError(line, "non-numeric field '" + std::string(field) + "'");
  }
  return value;
}

std::int64_t parse_id(std::string_view field, std::size_t line) {
  const double value = parse_number(field, line);
  if (value != std::floor(value) || std::abs(value) > 9.0e15) {
    throw ParseError(line, "non-integral id '" + std::string(field) + "'");
  }
  return static_cast<std::int64_t>(value);
}

}  // namespace

RawScene parse_trajectory_file(std::string_view text, Units units) {
  RawScene scene;
  scene.units = units;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    const auto fields = split_fields(line);
    if (fields.empty() || fields[0].front() == '#') {
      if (end == text.size()) break;
      continue;
    }
    if (fields.size() != 4) {
      throw ParseError(line_no, "expected 4 fields, found " + std::to_string(fields.size()));
    }
    scene.records.push_back(Record{parse_id(fields[0], line_no), parse_id(fields[1], line_no),
                                   parse_number(fields[2], line_no),
                                   parse_number(fields[3], line_no)});
    if (end == text.size()) break;
  }
  if (scene.records.empty()) throw EmptyDataset("trajectory file contains no records");

  std::sort(scene.records.begin(), scene.records.end(), [](const Record& a, const Record& b) {
    return a.frame_id != b.frame_id ? a.frame_id < b.frame_id : a.agent_id < b.agent_id;
  });
  for (std::size_t i = 1; i < scene.records.size(); ++i) {
    const auto& a = scene.records[i - 1];
    const auto& b = scene.records[i];
    if (a.frame_id == b.frame_id && a.agent_id == b.agent_id) {
      throw DuplicateRecord("duplicate record for frame " + std::to_string(a.frame_id) +
                            ", agent " + std::to_string(a.agent_id));
    }
  }

  // Stride: GCD of the gaps between successive frames of each agent.
  std::map<std::int64_t, std::int64_t> last_frame;
  std::int64_t stride = 0;
  for (const auto& r : scene.records) {
    auto [it, inserted] = last_frame.try_emplace(r.agent_id, r.frame_id);
    if (!inserted) {
      stride = std::gcd(stride, r.frame_id - it->second);
      it->second = r.frame_id;
    }
  }
  if (stride == 0) {
    // No agent spans two frames; fall back to the gaps between distinct frames.
    for (std::size_t i = 1; i < scene.records.size(); ++i) {
      stride = std::gcd(stride, scene.records[i].frame_id - scene.records[i - 1].frame_id);
    }
  }
  scene.frame_stride = stride == 0 ? 1 : stride;
  return scene;
}

RawScene read_trajectory_file(const std::filesystem::path& path, Units units) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open trajectory file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  RawScene scene = parse_trajectory_file(buffer.str(), units);
  scene.name = path.stem().string();
  return scene;
}

std::string format_trajectory_file(const RawScene& scene) {
  std::string out;
  char buf[128];
  for (const auto& r : scene.records) {
    std::snprintf(buf, sizeof(buf), "%lld\t%lld\t%.17g\t%.17g\n",
                  static_cast<long long>(r.frame_id), static_cast<long long>(r.agent_id), r.x,
                  r.y);
    out += buf;
  }
  return out;
}

std::vector<TrajectoryWindow> build_windows(const RawScene& scene, std::size_t t_obs,
                                            std::size_t t_pred, std::size_t stride) {
  if (t_obs < 2) throw InvalidArgument("t_obs must be at least 2");
  if (t_pred < 1) throw InvalidArgument("t_pred must be at least 1");
  if (stride < 1) throw InvalidArgument("window stride must be at least 1");
  std::vector<TrajectoryWindow> windows;
  if (scene.records.empty()) return windows;

  const std::int64_t first = scene.records.front().frame_id;
  const std::int64_t last = scene.records.back().frame_id;
  std::int64_t step = scene.frame_stride;
  for (const auto& r : scene.records) step = std::gcd(step, r.frame_id - first);
  if (step <= 0) step = 1;
  const auto num_sampled = static_cast<std::size_t>((last - first) / step + 1);
  const std::size_t span = t_obs + t_pred;
  if (num_sampled < span) return windows;

  // Per agent, positions keyed by sampled-frame index.
  std::map<std::int64_t, std::map<std::size_t, Vec2>> tracks;
  for (const auto& r : scene.records) {
    const auto k = static_cast<std::size_t>((r.frame_id - first) / step);
    tracks[r.agent_id].emplace(k, Vec2{r.x, r.y});
  }

  for (std::size_t s = 0; s + span <= num_sampled; s += stride) {
    std::vector<const std::map<std::size_t, Vec2>*> present;
    std::vector<std::int64_t> ids;
    for (const auto& [id, track] : tracks) {
      auto it = track.find(s);
      if (it == track.end()) continue;
      bool full = true;
      for (std::size_t k = 1; k < span; ++k) {
        ++it;
        if (it == track.end() || it->first != s + k) {
          full = false;
          break;
        }
      }
      if (full) {
        present.push_back(&track);
        ids.push_back(id);
      }
    }
    if (present.empty()) continue;
    TrajectoryWindow w;
    w.t_obs = t_obs;
    w.t_pred = t_pred;
    w.agent_ids = std::move(ids);
    w.units = scene.units;
    w.source = scene.name;
    w.start_frame = first + static_cast<std::int64_t>(s) * step;
    w.positions.resize(span * present.size());
    for (std::size_t t = 0; t < span; ++t) {
      for (std::size_t i = 0; i < present.size(); ++i) w.at(t, i) = present[i]->at(s + t);
    }
    windows.push_back(std::move(w));
  }
  return windows;
}

DisplacementField displacements(const TrajectoryWindow& window) {
  DisplacementField field;
  field.frames = window.num_frames();
  field.agents = window.num_agents();
  field.u.resize(field.frames * field.agents);
  for (std::size_t t = 1; t < field.frames; ++t) {
    for (std::size_t i = 0; i < field.agents; ++i) {
      field.u[t * field.agents + i] = window.at(t, i) - window.at(t - 1, i);
    }
  }
  if (field.frames >= 2) {
    for (std::size_t i = 0; i < field.agents; ++i) field.u[i] = field.u[field.agents + i];
  }
  return field;
}

TrajectoryWindow permute_agents(const TrajectoryWindow& window,
                                const std::vector<std::size_t>& order) {
  const std::size_t n = window.num_agents();
  if (order.size() != n) throw InvalidArgument("permutation length does not match agents");
  TrajectoryWindow out = window;
  for (std::size_t k = 0; k < n; ++k) {
    out.agent_ids[k] = window.agent_ids.at(order[k]);
    for (std::size_t t = 0; t < window.num_frames(); ++t) out.at(t, k) = window.at(t, order[k]);
  }
  return out;
}

}  // namespace ssagcn::trajdata
