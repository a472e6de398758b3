#pragma once

// Displacement and collision metrics, batch evaluation and ablation sweeps.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ssagcn/dataset.hpp"
#include "ssagcn/model.hpp"
#include "ssagcn/training.hpp"

namespace ssagcn::eval {

inline constexpr double kCollisionThreshold = 0.1;

double ade(std::span<const Vec2> pred, std::span<const Vec2> gt);
double fde(std::span<const Vec2> pred, std::span<const Vec2> gt);

// Track of agent i in sample s, [T_pred].
std::vector<Vec2> agent_track(const model::TrajectorySet& set, std::size_t s, std::size_t i);

struct AgentError {
  double ade = 0.0;
  double fde = 0.0;
};

// Per agent, independent minima of ADE and FDE over the samples.
std::vector<AgentError> best_of_k_per_agent(const model::TrajectorySet& samples,
                                            const model::TrajectorySet& gt);
// Agent average of best_of_k_per_agent.
AgentError best_of_k(const model::TrajectorySet& samples, const model::TrajectorySet& gt);

// Percentage of unordered agent pairs of sample `s` whose closest approach
// over the horizon is below `threshold`; 0 with fewer than two agents.
double collision_pct(const model::TrajectorySet& trajs, double threshold = kCollisionThreshold,
                     std::size_t s = 0);

// One trajectory per agent: the sample with the lowest ADE against gt.
model::TrajectorySet min_ade_selection(const model::TrajectorySet& samples,
                                       const model::TrajectorySet& gt);

// Produces [K][T_pred][N] predictions for a window. With k == 1 a
// predictor returns its deterministic (mode) trajectory.
using Predictor = std::function<model::TrajectorySet(
    const trajdata::TrajectoryWindow&, const trajdata::SceneGrid*, std::size_t k, numerics::Rng&)>;

Predictor model_predictor(const model::ModelParams& params);
// Returns the ground truth for every sample.
Predictor oracle_predictor();
// Continues the last observed displacement; samples add Gaussian noise of
// `noise_sigma` per step.
Predictor linear_predictor(double noise_sigma = 0.0);

struct EvalOptions {
  std::size_t k = 20;
  std::uint64_t seed = 0;
  // 0 selects the hardware concurrency.
  std::size_t workers = 0;
  double collision_threshold = kCollisionThreshold;
};

struct WindowResult {
  std::size_t index = 0;
  std::string source;
  std::size_t agents = 0;
  double ade_sum = 0.0;
  double fde_sum = 0.0;
  double collision_pct = 0.0;
};

struct MetricsReport {
  std::string scene;
  std::size_t k = 1;
  double ade = 0.0;
  double fde = 0.0;
  double collision_pct = 0.0;
  std::size_t n_windows = 0;
  std::size_t n_agents = 0;
  double runtime_s = 0.0;
  std::string collision_rule;
};

// ADE and FDE are flat means over every (window, agent) pair. The collision
// percentage is the mean over windows with at least two agents, computed on
// the mode for K = 1 and on the per-agent min-ADE sample otherwise.
MetricsReport evaluate(const Predictor& predictor, const std::vector<trajdata::TrajectoryWindow>& windows,
                       const trajdata::Dataset& grids, const EvalOptions& options,
                       const std::string& scene, std::vector<WindowResult>* details = nullptr);
MetricsReport evaluate(const training::Checkpoint& ckpt, const trajdata::Dataset& data,
                       const EvalOptions& options, const std::string& scene);

// Scene name "AVG" with the unweighted mean of the per-scene metrics.
MetricsReport average_row(std::span<const MetricsReport> reports);

// Columns scene,K,ade,fde,collision_pct,n_windows,runtime_s.
std::string reports_csv(std::span<const MetricsReport> reports, bool include_runtime = true);
std::string reports_json(std::span<const MetricsReport> reports, bool include_runtime = true);

struct FactorMask {
  bool speed = true;
  bool direction = true;
  bool distance = true;
};

// The eight speed/direction/distance combinations, from none to all.
std::vector<FactorMask> all_factor_masks();
// 0.04, 0.06, ..., 0.16.
std::vector<double> default_theta_values();

struct SweepAxis {
  enum class Kind { theta, factors, variant } kind = Kind::theta;
  std::vector<double> thetas;
  std::vector<FactorMask> masks;
  std::vector<model::Variant> variants;

  std::size_t size() const;
};

struct SweepRow {
  std::size_t row = 0;
  training::TrainConfig config;
  MetricsReport report;
};

// Trains and evaluates one configuration per axis value, configurations in
// parallel over `options.workers`.
std::vector<SweepRow> ablation_sweep(const training::TrainConfig& base, const SweepAxis& axis,
                                     const trajdata::Dataset& train_data,
                                     const trajdata::Dataset& test_data, const EvalOptions& options,
                                     const std::string& scene);

// Columns row,theta,speed,direction,distance,variant followed by the report columns.
std::string sweep_csv(std::span<const SweepRow> rows, bool include_runtime = true);

std::size_t resolve_workers(std::size_t requested);

}  // namespace ssagcn::eval
