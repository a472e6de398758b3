#include "ssagcn/protocol.hpp"

#include "ssagcn/errors.hpp"

namespace ssagcn::training {

LeaveOneOutResult leave_one_out(const trajdata::Dataset& data, const TrainConfig& cfg,
                                const eval::EvalOptions& options) {
  if (data.scene_names.size() < 2) {
    throw InvalidArgument("leave-one-out needs at least two scenes, got " +
                          std::to_string(data.scene_names.size()));
  }
  LeaveOneOutResult result;
  std::vector<eval::MetricsReport> singles, bests;
  for (const auto& scene : data.scene_names) {
    const trajdata::Dataset train_set = trajdata::select_scenes(data, {scene}, true);
    const trajdata::Dataset test_set = trajdata::select_scenes(data, {scene}, false);
    Fold fold;
    fold.held_out = scene;
    for (const auto& w : train_set.windows) fold.train_sources.insert(w.source);
    TrainConfig fold_cfg = cfg;
    fold_cfg.leave_out = scene;
    fold.checkpoint = train(train_set, fold_cfg);
    eval::EvalOptions single_opts = options;
    single_opts.k = 1;
    fold.single = eval::evaluate(fold.checkpoint, test_set, single_opts, scene);
    fold.best = eval::evaluate(fold.checkpoint, test_set, options, scene);
    singles.push_back(fold.single);
    bests.push_back(fold.best);
    result.folds.push_back(std::move(fold));
  }
  result.single_avg = eval::average_row(singles);
  result.best_avg = eval::average_row(bests);
  return result;
}

std::string leave_one_out_csv(const LeaveOneOutResult& result, bool include_runtime) {
  std::vector<eval::MetricsReport> rows;
  for (const auto& f : result.folds) rows.push_back(f.single);
  rows.push_back(result.single_avg);
  for (const auto& f : result.folds) rows.push_back(f.best);
  rows.push_back(result.best_avg);
  return eval::reports_csv(rows, include_runtime);
}

}  // namespace ssagcn::training
