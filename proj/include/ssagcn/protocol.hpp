#pragma once

// Leave-one-scene-out protocol: for each scene, train on the others and
// evaluate on it at K = 1 and at best-of-K.

#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "ssagcn/dataset.hpp"
#include "ssagcn/eval.hpp"
#include "ssagcn/training.hpp"

namespace ssagcn::training {

struct Fold {
  std::string held_out;
  // Scene names of the windows actually used for training.
  std::set<std::string> train_sources;
  Checkpoint checkpoint;
  eval::MetricsReport single;  // K = 1, mode
  eval::MetricsReport best;    // K = options.k
};

struct LeaveOneOutResult {
  std::vector<Fold> folds;
  eval::MetricsReport single_avg;
  eval::MetricsReport best_avg;
};

LeaveOneOutResult leave_one_out(const trajdata::Dataset& data, const TrainConfig& cfg,
                                const eval::EvalOptions& options);

// One row per scene and K plus the AVG rows, report columns.
std::string leave_one_out_csv(const LeaveOneOutResult& result, bool include_runtime = true);

}  // namespace ssagcn::training
