#include "ssagcn/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <thread>

#include <nlohmann/json.hpp>

#include "ssagcn/errors.hpp"
#include "ssagcn/parallel.hpp"

namespace ssagcn::eval {

using model::TrajectorySet;
using trajdata::TrajectoryWindow;

namespace {

void check_lengths(std::span<const Vec2> pred, std::span<const Vec2> gt) {
  if (pred.size() != gt.size()) {
    throw LengthMismatch("prediction has " + std::to_string(pred.size()) +
                         " steps, ground truth " + std::to_string(gt.size()));
  }
  if (pred.empty()) throw LengthMismatch("empty trajectories");
}

void check_compatible(const TrajectorySet& samples, const TrajectorySet& gt) {
  if (samples.t_pred != gt.t_pred || samples.agents != gt.agents || gt.k < 1) {
    throw LengthMismatch("sample set and ground truth disagree in shape");
  }
  if (samples.k < 1) throw InvalidArgument("need at least one sample");
}

}  // namespace

double ade(std::span<const Vec2> pred, std::span<const Vec2> gt) {
  check_lengths(pred, gt);
  double total = 0.0;
  for (std::size_t t = 0; t < pred.size(); ++t) total += distance(pred[t], gt[t]);
  return total / static_cast<double>(pred.size());
}

double fde(std::span<const Vec2> pred, std::span<const Vec2> gt) {
  check_lengths(pred, gt);
  return distance(pred.back(), gt.back());
}

std::vector<Vec2> agent_track(const TrajectorySet& set, std::size_t s, std::size_t i) {
  std::vector<Vec2> track(set.t_pred);
  for (std::size_t t = 0; t < set.t_pred; ++t) track[t] = set.at(s, t, i);
  return track;
}

std::vector<AgentError> best_of_k_per_agent(const TrajectorySet& samples, const TrajectorySet& gt) {
  check_compatible(samples, gt);
  std::vector<AgentError> out(samples.agents);
  for (std::size_t i = 0; i < samples.agents; ++i) {
    const auto truth = agent_track(gt, 0, i);
    double best_ade = std::numeric_limits<double>::infinity();
    double best_fde = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < samples.k; ++s) {
      const auto track = agent_track(samples, s, i);
      best_ade = std::min(best_ade, ade(track, truth));
      best_fde = std::min(best_fde, fde(track, truth));
    }
    out[i] = {best_ade, best_fde};
  }
  return out;
}

AgentError best_of_k(const TrajectorySet& samples, const TrajectorySet& gt) {
  const auto per_agent = best_of_k_per_agent(samples, gt);
  AgentError mean;
  if (per_agent.empty()) return mean;
  for (const auto& e : per_agent) {
    mean.ade += e.ade;
    mean.fde += e.fde;
  }
  mean.ade /= static_cast<double>(per_agent.size());
  mean.fde /= static_cast<double>(per_agent.size());
  return mean;
}

double collision_pct(const TrajectorySet& trajs, double threshold, std::size_t s) {
  const std::size_t n = trajs.agents;
  if (n < 2) return 0.0;
  if (s >= trajs.k) throw InvalidArgument("sample index out of range");
  std::size_t colliding = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double closest = std::numeric_limits<double>::infinity();
      for (std::size_t t = 0; t < trajs.t_pred; ++t) {
        closest = std::min(closest, distance(trajs.at(s, t, i), trajs.at(s, t, j)));
      }
      if (closest < threshold) ++colliding;
    }
  const double pairs = static_cast<double>(n * (n - 1) / 2);
  return 100.0 * static_cast<double>(colliding) / pairs;
}

TrajectorySet min_ade_selection(const TrajectorySet& samples, const TrajectorySet& gt) {
  check_compatible(samples, gt);
  TrajectorySet out(1, samples.t_pred, samples.agents);
  for (std::size_t i = 0; i < samples.agents; ++i) {
    const auto truth = agent_track(gt, 0, i);
    std::size_t best = 0;
    double best_ade = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < samples.k; ++s) {
      const double e = ade(agent_track(samples, s, i), truth);
      if (e < best_ade) {
        best_ade = e;
        best = s;
      }
    }
    for (std::size_t t = 0; t < samples.t_pred; ++t) out.at(0, t, i) = samples.at(best, t, i);
  }
  return out;
}

Predictor model_predictor(const model::ModelParams& params) {
  return [&params](const TrajectoryWindow& window, const trajdata::SceneGrid* grid, std::size_t k,
                   numerics::Rng& rng) {
    const auto seq = model::model_forward(window, grid, params);
    return model::predict_trajectories(seq, k, rng, k == 1);
  };
}

Predictor oracle_predictor() {
  return [](const TrajectoryWindow& window, const trajdata::SceneGrid*, std::size_t k,
            numerics::Rng&) {
    const TrajectorySet gt = model::ground_truth(window);
    TrajectorySet out(k, gt.t_pred, gt.agents);
    for (std::size_t s = 0; s < k; ++s)
      for (std::size_t t = 0; t < gt.t_pred; ++t)
        for (std::size_t i = 0; i < gt.agents; ++i) out.at(s, t, i) = gt.at(0, t, i);
    return out;
  };
}

Predictor linear_predictor(double noise_sigma) {
  return [noise_sigma](const TrajectoryWindow& window, const trajdata::SceneGrid*, std::size_t k,
                       numerics::Rng& rng) {
    const std::size_t n = window.num_agents();
    TrajectorySet out(k, window.t_pred, n);
    const bool noisy = k > 1 && noise_sigma > 0.0;
    for (std::size_t s = 0; s < k; ++s)
      for (std::size_t i = 0; i < n; ++i) {
        const Vec2 last = window.at(window.t_obs - 1, i);
        const Vec2 step = last - window.at(window.t_obs - 2, i);
        Vec2 current = last;
        for (std::size_t t = 0; t < window.t_pred; ++t) {
          current += step;
          if (noisy) {
            const auto [zx, zy] = rng.normal_pair();
            current += Vec2{noise_sigma * zx, noise_sigma * zy};
          }
          out.at(s, t, i) = current;
        }
      }
    return out;
  };
}

std::size_t resolve_workers(std::size_t requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

MetricsReport evaluate(const Predictor& predictor, const std::vector<TrajectoryWindow>& windows,
                       const trajdata::Dataset& grids, const EvalOptions& options,
                       const std::string& scene, std::vector<WindowResult>* details) {
  if (options.k < 1) throw InvalidArgument("K must be at least 1");
  const auto start = std::chrono::steady_clock::now();
  std::vector<WindowResult> results(windows.size());
  parallel_for(windows.size(), resolve_workers(options.workers), [&](std::size_t w) {
    const TrajectoryWindow& window = windows[w];
    numerics::Rng rng(numerics::derive_seed(options.seed, w));
    const TrajectorySet pred = predictor(window, grids.grid_for(window), options.k, rng);
    const TrajectorySet gt = model::ground_truth(window);
    WindowResult r;
    r.index = w;
    r.source = window.source;
    r.agents = window.num_agents();
    for (const auto& e : best_of_k_per_agent(pred, gt)) {
      r.ade_sum += e.ade;
      r.fde_sum += e.fde;
    }
    r.collision_pct = options.k == 1 || pred.k == 1
                          ? collision_pct(pred, options.collision_threshold)
                          : collision_pct(min_ade_selection(pred, gt), options.collision_threshold);
    results[w] = std::move(r);
  });

  MetricsReport report;
  report.scene = scene;
  report.k = options.k;
  report.n_windows = windows.size();
  report.collision_rule = options.k == 1 ? "mode" : "min_ade_sample_per_agent";
  double ade_total = 0.0, fde_total = 0.0, collision_total = 0.0;
  std::size_t collision_windows = 0;
  for (const auto& r : results) {
    ade_total += r.ade_sum;
    fde_total += r.fde_sum;
    report.n_agents += r.agents;
    if (r.agents >= 2) {
      collision_total += r.collision_pct;
      ++collision_windows;
    }
  }
  if (report.n_agents > 0) {
    report.ade = ade_total / static_cast<double>(report.n_agents);
    report.fde = fde_total / static_cast<double>(report.n_agents);
  }
  if (collision_windows > 0) report.collision_pct = collision_total / static_cast<double>(collision_windows);
  report.runtime_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (details) *details = std::move(results);
  return report;
}

MetricsReport evaluate(const training::Checkpoint& ckpt, const trajdata::Dataset& data,
                       const EvalOptions& options, const std::string& scene) {
  return evaluate(model_predictor(ckpt.params), data.windows, data, options, scene);
}

MetricsReport average_row(std::span<const MetricsReport> reports) {
  MetricsReport avg;
  avg.scene = "AVG";
  if (reports.empty()) return avg;
  avg.k = reports.front().k;
  avg.collision_rule = reports.front().collision_rule;
  for (const auto& r : reports) {
    avg.ade += r.ade;
    avg.fde += r.fde;
    avg.collision_pct += r.collision_pct;
    avg.n_windows += r.n_windows;
    avg.n_agents += r.n_agents;
    avg.runtime_s += r.runtime_s;
  }
  const double n = static_cast<double>(reports.size());
  avg.ade /= n;
  avg.fde /= n;
  avg.collision_pct /= n;
  return avg;
}

namespace {

std::string report_fields(const MetricsReport& r, bool include_runtime) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s,%zu,%.6f,%.6f,%.4f,%zu", r.scene.c_str(), r.k, r.ade, r.fde,
                r.collision_pct, r.n_windows);
  std::string out = buf;
  if (include_runtime) {
    std::snprintf(buf, sizeof(buf), ",%.3f", r.runtime_s);
    out += buf;
  }
  return out;
}

std::string report_header(bool include_runtime) {
  return include_runtime ? "scene,K,ade,fde,collision_pct,n_windows,runtime_s"
                         : "scene,K,ade,fde,collision_pct,n_windows";
}

}  // namespace

std::string reports_csv(std::span<const MetricsReport> reports, bool include_runtime) {
  std::string out = report_header(include_runtime) + "\n";
  for (const auto& r : reports) out += report_fields(r, include_runtime) + "\n";
  return out;
}

std::string reports_json(std::span<const MetricsReport> reports, bool include_runtime) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& r : reports) {
    nlohmann::ordered_json row = {{"scene", r.scene},
                                  {"K", r.k},
                                  {"ade", r.ade},
                                  {"fde", r.fde},
                                  {"collision_pct", r.collision_pct},
                                  {"n_windows", r.n_windows}};
    if (include_runtime) row["runtime_s"] = r.runtime_s;
    row["n_agents"] = r.n_agents;
    row["collision_rule"] = r.collision_rule;
    rows.push_back(std::move(row));
  }
  return rows.dump(2) + "\n";
}

std::vector<FactorMask> all_factor_masks() {
  return {
      {false, false, false}, {true, false, false}, {false, true, false}, {false, false, true},
      {true, true, false},   {true, false, true},  {false, true, true},  {true, true, true},
  };
}

std::vector<double> default_theta_values() {
  std::vector<double> out;
  for (int k = 0; k < 7; ++k) out.push_back(0.04 + 0.02 * k);
  return out;
}

std::size_t SweepAxis::size() const {
  switch (kind) {
    case Kind::theta: return thetas.size();
    case Kind::factors: return masks.size();
    case Kind::variant: return variants.size();
  }
  return 0;
}

std::vector<SweepRow> ablation_sweep(const training::TrainConfig& base, const SweepAxis& axis,
                                     const trajdata::Dataset& train_data,
                                     const trajdata::Dataset& test_data, const EvalOptions& options,
                                     const std::string& scene) {
  const std::size_t n = axis.size();
  if (n == 0) throw InvalidArgument("ablation axis is empty");
  std::vector<SweepRow> rows(n);
  for (std::size_t r = 0; r < n; ++r) {
    rows[r].row = r + 1;
    rows[r].config = base;
    auto& m = rows[r].config.model;
    switch (axis.kind) {
      case SweepAxis::Kind::theta: m.ssa.theta = axis.thetas[r]; break;
      case SweepAxis::Kind::factors:
        m.ssa.use_speed = axis.masks[r].speed;
        m.ssa.use_direction = axis.masks[r].direction;
        m.ssa.use_distance = axis.masks[r].distance;
        break;
      case SweepAxis::Kind::variant: m.variant = axis.variants[r]; break;
    }
    training::validate(rows[r].config);
  }
  EvalOptions inner = options;
  inner.workers = 1;
  parallel_for(n, resolve_workers(options.workers), [&](std::size_t r) {
    const auto ckpt = training::train(train_data, rows[r].config);
    rows[r].report = evaluate(ckpt, test_data, inner, scene);
  });
  return rows;
}

std::string sweep_csv(std::span<const SweepRow> rows, bool include_runtime) {
  std::string out = "row,theta,speed,direction,distance,variant," + report_header(include_runtime) + "\n";
  char buf[128];
  for (const auto& row : rows) {
    const auto& m = row.config.model;
    std::snprintf(buf, sizeof(buf), "%zu,%.4f,%d,%d,%d,%s,", row.row, m.ssa.theta,
                  m.ssa.use_speed ? 1 : 0, m.ssa.use_direction ? 1 : 0, m.ssa.use_distance ? 1 : 0,
                  std::string(model::to_string(m.variant)).c_str());
    out += buf + report_fields(row.report, include_runtime) + "\n";
  }
  return out;
}

}  // namespace ssagcn::eval
