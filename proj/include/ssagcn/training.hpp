#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "ssagcn/dataset.hpp"
#include "ssagcn/model.hpp"

namespace ssagcn::training {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct TrainConfig {
  double lr = 0.001;
  std::size_t epochs = 200;
  std::uint64_t seed = 0;
  model::ModelConfig model;
  std::vector<std::string> data_paths;
  std::string leave_out;
  std::size_t window_stride = 1;
  // Global L2 norm bound on each step's gradient; 0 disables clipping.
  double grad_clip = 0.0;
};

void validate(const TrainConfig& cfg);

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  TrainConfig config;
  // Values are representable in f32, so a save/load round trip is exact.
  model::ModelParams params;
  std::vector<double> epoch_nll;
};

// Sum over agents and future steps of the per-step displacement NLL,
// divided by the agent count.
double window_nll(const model::GaussianSequence& seq, const trajdata::TrajectoryWindow& window);

// Same loss on a tape, from the raw [T_pred][N][5] network output.
numerics::Var window_loss(const numerics::Var& raw, const trajdata::TrajectoryWindow& window);

// Loss of one window, built end to end on `tape`.
numerics::Var model_loss(numerics::Tape& tape, const model::BoundParams& bound,
                         const trajdata::TrajectoryWindow& window, const trajdata::SceneGrid* grid);

// Scales `grads` in place so their global L2 norm is at most `max_norm`.
// Returns the norm before scaling.
double clip_gradients(std::vector<numerics::Tensor>& grads, double max_norm);

// p <- p - lr * g for every array.
void sgd_step(std::vector<numerics::Tensor>& params, const std::vector<numerics::Tensor>& grads,
              double lr);

struct EpochStats {
  std::size_t epoch = 0;
  double mean_nll = 0.0;
};
using EpochCallback = std::function<void(const EpochStats&)>;

// One SGD step per window, windows shuffled every epoch. The logged epoch
// NLL is the mean of each window's loss taken before that window's update.
Checkpoint train(const std::vector<trajdata::TrajectoryWindow>& windows,
                 const trajdata::Dataset& grids, const TrainConfig& cfg,
                 const EpochCallback& on_epoch = {});
Checkpoint train(const trajdata::Dataset& data, const TrainConfig& cfg,
                 const EpochCallback& on_epoch = {});

// Rounds every parameter to the nearest f32.
void round_to_f32(model::ModelParams& params);

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::string_view bytes);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// "epoch,mean_nll" rows.
std::string training_log_csv(const Checkpoint& ckpt);

}  // namespace ssagcn::training
