// Command-line driver: ingest, synth, train, eval, predict, ablate,
// gradcheck and plot.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "ssagcn/dataset.hpp"
#include "ssagcn/errors.hpp"
#include "ssagcn/eval.hpp"
#include "ssagcn/model.hpp"
#include "ssagcn/numerics/gradcheck.hpp"
#include "ssagcn/plot.hpp"
#include "ssagcn/protocol.hpp"
#include "ssagcn/selfcheck.hpp"
#include "ssagcn/synth.hpp"
#include "ssagcn/training.hpp"

namespace fs = std::filesystem;
using namespace ssagcn;

namespace {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kMissingFile = 3,
  kCheckpointVersion = 4,
  kBadInput = 5,
  kEmptyData = 6,
  kMissingSceneGrid = 7,
  kNonFinite = 8,
  kGradCheckFailed = 9,
  kInvalid = 10,
};

int exit_code_for(const Error& e) {
  const std::string& c = e.code();
  if (c == "file_error") return kMissingFile;
  if (c == "checkpoint_version") return kCheckpointVersion;
  if (c == "parse_error" || c == "format_error" || c == "duplicate_record" ||
      c == "transform_error") {
    return kBadInput;
  }
  if (c == "empty_dataset") return kEmptyData;
  if (c == "missing_scene") return kMissingSceneGrid;
  if (c == "non_finite_loss") return kNonFinite;
  return kInvalid;
}

void report_error(const std::string& code, const std::string& msg) {
  std::string flat = msg;
  std::replace(flat.begin(), flat.end(), '\n', ' ');
  std::fprintf(stderr, "error: code=%s msg=%s\n", code.c_str(), flat.c_str());
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("ssagcn");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("SSAGCN_LOG")) {
    spdlog::set_level(spdlog::level::from_str(env));
  }
}

void write_output(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileError("cannot write " + path);
  out << text;
  if (!out) throw FileError("cannot write " + path);
}

std::vector<fs::path> to_paths(const std::vector<std::string>& items) {
  return {items.begin(), items.end()};
}

// Options shared by the commands that read trajectory data.
struct DataOptions {
  std::vector<std::string> data;
  std::string units = "meters";
  std::size_t t_obs = 8;
  std::size_t t_pred = 12;
  std::size_t stride = 1;

  void add(CLI::App* cmd, bool required) {
    auto* opt = cmd->add_option("--data", data, "trajectory file(s) or directories of *.txt scenes");
    if (required) opt->required();
    cmd->add_option("--units", units, "meters or pixels")->check(CLI::IsMember({"meters", "pixels"}));
    cmd->add_option("--t-obs", t_obs, "observed frames per window");
    cmd->add_option("--t-pred", t_pred, "predicted frames per window");
    cmd->add_option("--stride", stride, "window start stride in sampled frames");
  }

  trajdata::Dataset load() const {
    return trajdata::load_dataset(to_paths(data), {t_obs, t_pred, stride},
                                  trajdata::units_from_string(units));
  }
};

// Training hyperparameters shared by train and ablate.
struct TrainOptions {
  std::size_t epochs = 200;
  double lr = 0.001;
  double theta = 0.10;
  std::string variant = "full";
  std::uint64_t seed = 0;
  double grad_clip = 0.0;
  std::string factors = "111";

  void add(CLI::App* cmd) {
    cmd->add_option("--epochs", epochs, "training epochs");
    cmd->add_option("--lr", lr, "SGD learning rate");
    cmd->add_option("--theta", theta, "self-attention value on the diagonal");
    cmd->add_option("--variant", variant, "full, wo-sen, wo-seq or wo-ssa")
        ->check(CLI::IsMember({"full", "wo-sen", "wo-seq", "wo-ssa"}));
    cmd->add_option("--seed", seed, "random seed");
    cmd->add_option("--grad-clip", grad_clip, "global gradient norm bound (0 = off)");
    cmd->add_option("--factors", factors, "speed/direction/distance switches, e.g. 101");
  }

  training::TrainConfig config(const DataOptions& d) const {
    training::TrainConfig cfg;
    cfg.lr = lr;
    cfg.epochs = epochs;
    cfg.seed = seed;
    cfg.grad_clip = grad_clip;
    cfg.data_paths = d.data;
    cfg.window_stride = d.stride;
    cfg.model.t_obs = d.t_obs;
    cfg.model.t_pred = d.t_pred;
    cfg.model.variant = model::variant_from_string(variant);
    cfg.model.ssa.theta = theta;
    if (factors.size() != 3 || factors.find_first_not_of("01") != std::string::npos) {
      throw InvalidArgument("--factors takes three 0/1 digits");
    }
    cfg.model.ssa.use_speed = factors[0] == '1';
    cfg.model.ssa.use_direction = factors[1] == '1';
    cfg.model.ssa.use_distance = factors[2] == '1';
    return cfg;
  }
};

void set_scene_depth(training::TrainConfig& cfg, const trajdata::Dataset& data) {
  if (!cfg.model.uses_scene() || data.grids.empty()) return;
  cfg.model.scene_depth = data.grids.begin()->second.depth;
}

std::string scene_label(const std::vector<std::string>& names) {
  if (names.size() == 1) return names.front();
  return "all";
}

// ---------------------------------------------------------------- ingest

int run_ingest(const DataOptions& d, const std::string& format, const std::string& out) {
  const auto scenes = trajdata::load_scenes(to_paths(d.data), trajdata::units_from_string(d.units));
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  std::string csv = "scene,records,agents,frames,frame_stride,windows,grid\n";
  for (const auto& s : scenes) {
    std::vector<std::int64_t> agents, frames;
    for (const auto& r : s.raw.records) {
      agents.push_back(r.agent_id);
      frames.push_back(r.frame_id);
    }
    std::sort(agents.begin(), agents.end());
    std::sort(frames.begin(), frames.end());
    const auto n_agents = std::unique(agents.begin(), agents.end()) - agents.begin();
    const auto n_frames = std::unique(frames.begin(), frames.end()) - frames.begin();
    const auto windows = trajdata::build_windows(s.raw, d.t_obs, d.t_pred, d.stride);
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%zu,%td,%td,%lld,%zu,%s\n", s.raw.name.c_str(),
                  s.raw.records.size(), n_agents, n_frames,
                  static_cast<long long>(s.raw.frame_stride), windows.size(), s.grid ? "yes" : "no");
    csv += buf;
    rows.push_back({{"scene", s.raw.name},
                    {"records", s.raw.records.size()},
                    {"agents", n_agents},
                    {"frames", n_frames},
                    {"frame_stride", s.raw.frame_stride},
                    {"windows", windows.size()},
                    {"grid", s.grid.has_value()}});
  }
  write_output(format == "json" ? rows.dump(2) + "\n" : csv, out);
  return kOk;
}

// ----------------------------------------------------------------- synth

int run_synth(synth::ScenarioSpec spec, const std::string& kind, const std::string& out) {
  spec.kind = synth::kind_from_string(kind);
  const auto generated = synth::generate(spec);
  synth::write_scene(generated, out);
  spdlog::info("wrote scene '{}' with {} records to {}", generated.scene.name,
               generated.scene.records.size(), out);
  return kOk;
}

// ----------------------------------------------------------------- train

int run_train(const DataOptions& d, const TrainOptions& t, const std::string& leave_out,
              bool loo, const std::string& out, const std::string& log_path,
              const std::string& report, std::size_t k, std::size_t workers) {
  const trajdata::Dataset all = d.load();
  training::TrainConfig cfg = t.config(d);
  set_scene_depth(cfg, all);
  auto on_epoch = [](const training::EpochStats& s) {
    spdlog::info("epoch {} mean_nll {:.6f}", s.epoch, s.mean_nll);
  };
  if (loo) {
    eval::EvalOptions opts;
    opts.k = k;
    opts.seed = t.seed;
    opts.workers = workers;
    const auto result = training::leave_one_out(all, cfg, opts);
    const fs::path base(out);
    for (const auto& fold : result.folds) {
      fs::path path = base;
      path.replace_extension("");
      path += "." + fold.held_out + ".ssac";
      training::save_checkpoint(fold.checkpoint, path);
    }
    write_output(training::leave_one_out_csv(result), report);
    return kOk;
  }
  trajdata::Dataset data = all;
  if (!leave_out.empty()) {
    data = trajdata::select_scenes(all, {leave_out}, true);
    cfg.leave_out = leave_out;
  }
  const auto ckpt = training::train(data, cfg, on_epoch);
  training::save_checkpoint(ckpt, out);
  if (!log_path.empty()) write_output(training::training_log_csv(ckpt), log_path);
  spdlog::info("saved checkpoint {} ({} parameters)", out, ckpt.params.num_parameters());
  return kOk;
}

// ------------------------------------------------------------------ eval

int run_eval(DataOptions d, const std::string& ckpt_path, std::vector<std::string> scenes,
             const std::string& baseline, std::size_t k, std::uint64_t seed, std::size_t workers,
             const std::string& format, const std::string& out) {
  const auto ckpt = training::load_checkpoint(ckpt_path);
  if (d.data.empty()) d.data = ckpt.config.data_paths;
  if (d.data.empty()) throw InvalidArgument("no --data given and the checkpoint records none");
  d.t_obs = ckpt.config.model.t_obs;
  d.t_pred = ckpt.config.model.t_pred;
  const trajdata::Dataset all = d.load();
  if (scenes.empty()) {
    scenes = ckpt.config.leave_out.empty() ? all.scene_names
                                           : std::vector<std::string>{ckpt.config.leave_out};
  }
  eval::EvalOptions opts;
  opts.k = k;
  opts.seed = seed;
  opts.workers = workers;
  eval::Predictor predictor = eval::model_predictor(ckpt.params);
  if (baseline == "linear") predictor = eval::linear_predictor();
  std::vector<eval::MetricsReport> reports;
  for (const auto& scene : scenes) {
    const auto subset = trajdata::select_scenes(all, {scene}, false);
    reports.push_back(eval::evaluate(predictor, subset.windows, subset, opts, scene));
  }
  if (reports.size() > 1) reports.push_back(eval::average_row(reports));
  write_output(format == "json" ? eval::reports_json(reports) : eval::reports_csv(reports), out);
  return kOk;
}

// --------------------------------------------------------------- predict

int run_predict(DataOptions d, const std::string& ckpt_path, std::size_t k, std::uint64_t seed,
                const std::string& format, const std::string& out) {
  const auto ckpt = training::load_checkpoint(ckpt_path);
  if (d.data.empty()) d.data = ckpt.config.data_paths;
  d.t_obs = ckpt.config.model.t_obs;
  d.t_pred = ckpt.config.model.t_pred;
  const trajdata::Dataset data = d.load();
  const auto predictor = eval::model_predictor(ckpt.params);
  std::string csv = "scene,window,start_frame,sample,agent_id,step,x,y\n";
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  char buf[256];
  for (std::size_t w = 0; w < data.windows.size(); ++w) {
    const auto& window = data.windows[w];
    numerics::Rng rng(numerics::derive_seed(seed, w));
    const auto set = predictor(window, data.grid_for(window), k, rng);
    for (std::size_t s = 0; s < set.k; ++s)
      for (std::size_t i = 0; i < set.agents; ++i)
        for (std::size_t t = 0; t < set.t_pred; ++t) {
          const Vec2& p = set.at(s, t, i);
          std::snprintf(buf, sizeof(buf), "%s,%zu,%lld,%zu,%lld,%zu,%.9g,%.9g\n",
                        window.source.c_str(), w, static_cast<long long>(window.start_frame), s,
                        static_cast<long long>(window.agent_ids[i]), t + 1, p.x, p.y);
          csv += buf;
          if (format == "json") {
            rows.push_back({{"scene", window.source},
                            {"window", w},
                            {"start_frame", window.start_frame},
                            {"sample", s},
                            {"agent_id", window.agent_ids[i]},
                            {"step", t + 1},
                            {"x", p.x},
                            {"y", p.y}});
          }
        }
  }
  write_output(format == "json" ? rows.dump(2) + "\n" : csv, out);
  return kOk;
}

// ---------------------------------------------------------------- ablate

int run_ablate(const DataOptions& d, const TrainOptions& t, const std::string& axis_name,
               const std::vector<std::string>& values, const std::string& leave_out, std::size_t k,
               std::size_t workers, const std::string& out) {
  const trajdata::Dataset all = d.load();
  training::TrainConfig cfg = t.config(d);
  set_scene_depth(cfg, all);
  eval::SweepAxis axis;
  if (axis_name == "theta") {
    axis.kind = eval::SweepAxis::Kind::theta;
    if (values.empty()) {
      axis.thetas = eval::default_theta_values();
    } else {
      for (const auto& v : values) axis.thetas.push_back(std::stod(v));
    }
  } else if (axis_name == "factors") {
    axis.kind = eval::SweepAxis::Kind::factors;
    if (values.empty()) {
      axis.masks = eval::all_factor_masks();
    } else {
      for (const auto& v : values) {
        if (v.size() != 3 || v.find_first_not_of("01") != std::string::npos) {
          throw InvalidArgument("factor masks are three 0/1 digits, got '" + v + "'");
        }
        axis.masks.push_back({v[0] == '1', v[1] == '1', v[2] == '1'});
      }
    }
  } else {
    axis.kind = eval::SweepAxis::Kind::variant;
    const std::vector<std::string> names =
        values.empty() ? std::vector<std::string>{"full", "wo-sen", "wo-seq", "wo-ssa"} : values;
    for (const auto& v : names) axis.variants.push_back(model::variant_from_string(v));
  }
  trajdata::Dataset train_set = all, test_set = all;
  std::string scene = scene_label(all.scene_names);
  if (!leave_out.empty()) {
    train_set = trajdata::select_scenes(all, {leave_out}, true);
    test_set = trajdata::select_scenes(all, {leave_out}, false);
    cfg.leave_out = leave_out;
    scene = leave_out;
  }
  eval::EvalOptions opts;
  opts.k = k;
  opts.seed = t.seed;
  opts.workers = workers;
  const auto rows = eval::ablation_sweep(cfg, axis, train_set, test_set, opts, scene);
  write_output(eval::sweep_csv(rows), out);
  return kOk;
}

// ------------------------------------------------------------- gradcheck

int run_gradcheck(std::uint64_t seed, const std::string& variant) {
  model::ModelConfig config;
  config.variant = model::variant_from_string(variant);
  const auto result = selfcheck::end_to_end_grad_check(config.variant, seed);
  const auto names = model::init_params(config, seed).names;
  std::printf("max_rel_error=%.6e coordinates=%zu skipped=%zu worst=%s[%zu]\n",
              result.max_rel_error, result.coordinates, result.skipped,
              names[result.worst_param].c_str(), result.worst_index);
  return result.max_rel_error < selfcheck::kEndToEndTolerance ? kOk : kGradCheckFailed;
}

// ------------------------------------------------------------------ plot

int run_plot(const std::string& window_path, std::size_t window_index, const std::string& units,
             const std::string& ckpt_path, std::size_t k, std::uint64_t seed,
             plot::PlotOptions options, std::optional<std::size_t> frame, const std::string& out) {
  const auto raw = trajdata::read_trajectory_file(window_path, trajdata::units_from_string(units));
  std::size_t t_obs = 8, t_pred = 12;
  std::optional<training::Checkpoint> ckpt;
  if (!ckpt_path.empty()) {
    ckpt = training::load_checkpoint(ckpt_path);
    t_obs = ckpt->config.model.t_obs;
    t_pred = ckpt->config.model.t_pred;
    options.ssa = ckpt->config.model.ssa;
  }
  const auto windows = trajdata::build_windows(raw, t_obs, t_pred, 1);
  if (windows.empty()) throw EmptyDataset("no complete window in " + window_path);
  if (window_index >= windows.size()) {
    throw InvalidArgument("window index " + std::to_string(window_index) + " out of range (" +
                          std::to_string(windows.size()) + " windows)");
  }
  const auto& window = windows[window_index];
  options.adjacency_frame = frame;
  std::optional<model::TrajectorySet> mode, samples;
  if (ckpt) {
    std::optional<trajdata::SceneGrid> grid;
    fs::path grid_path(window_path);
    grid_path.replace_extension(".ssag");
    if (fs::exists(grid_path)) grid = trajdata::load_scene_grid(grid_path);
    const auto seq = model::model_forward(window, grid ? &*grid : nullptr, ckpt->params);
    numerics::Rng rng(seed);
    mode = model::predict_trajectories(seq, 1, rng, true);
    if (k > 1) samples = model::predict_trajectories(seq, k, rng, false);
  }
  write_output(plot::render_svg(window, options, mode ? &*mode : nullptr,
                                samples ? &*samples : nullptr),
               out);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Trajectory prediction with social soft attention graph convolution"};
  app.require_subcommand(1);

  std::string out, format = "csv";
  std::size_t k = 20, workers = 0;
  std::uint64_t seed = 0;
  auto add_format = [&](CLI::App* cmd, std::vector<std::string> allowed) {
    cmd->add_option("--format", format, "output format")->check(CLI::IsMember(allowed));
  };

  DataOptions ingest_data;
  auto* ingest = app.add_subcommand("ingest", "summarize trajectory files and their windows");
  ingest_data.add(ingest, true);
  ingest->add_option("--out", out, "output file (default stdout)");
  add_format(ingest, {"csv", "json"});

  synth::ScenarioSpec spec;
  std::string kind = "head_on";
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic scene");
  synth_cmd->add_option("--kind", kind, "head_on, receding, overtake, parallel, crossing, obstacle_gate")
      ->check(CLI::IsMember({"head_on", "receding", "overtake", "parallel", "crossing", "obstacle_gate"}));
  synth_cmd->add_option("--out", out, "output directory")->required();
  synth_cmd->add_option("--agents", spec.n_agents, "number of agents");
  synth_cmd->add_option("--episodes", spec.episodes, "independent episodes in the scene");
  synth_cmd->add_option("--duration", spec.duration, "sampled frames per episode");
  synth_cmd->add_option("--speed-min", spec.speed_min, "minimum speed per frame");
  synth_cmd->add_option("--speed-max", spec.speed_max, "maximum speed per frame");
  synth_cmd->add_option("--noise", spec.noise_sigma, "position noise standard deviation");
  synth_cmd->add_option("--seed", spec.seed, "random seed");
  synth_cmd->add_option("--name", spec.name, "scene name (default: the kind)");
  synth_cmd->add_flag("--avoidance", spec.avoidance, "script lateral evasion at encounters");
  spec.emit_grid = true;
  synth_cmd->add_flag("--grid,!--no-grid", spec.emit_grid,
                      "write an obstacle-free scene grid next to the trajectories (default on)");

  DataOptions train_data;
  TrainOptions train_opts;
  std::string leave_out, log_path, report, train_out = "out.ssac";
  bool loo = false;
  auto* train = app.add_subcommand("train", "train a model and write a checkpoint");
  train_data.add(train, true);
  train_opts.add(train);
  train->add_option("--leave-out", leave_out, "scene excluded from training");
  train->add_flag("--leave-one-out", loo, "run the leave-one-scene-out protocol");
  train->add_option("--out", train_out, "checkpoint path")->capture_default_str();
  train->add_option("--log", log_path, "per-epoch NLL CSV");
  train->add_option("--report", report, "leave-one-out report CSV (default stdout)");
  train->add_option("--k", k, "samples for the best-of-K report");
  train->add_option("--workers", workers, "evaluation threads (0 = all cores)");

  DataOptions eval_data;
  std::string ckpt_path, baseline = "model";
  std::vector<std::string> scenes;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  eval_data.add(eval_cmd, false);
  eval_cmd->add_option("--ckpt", ckpt_path, "checkpoint")->required();
  eval_cmd->add_option("--scene", scenes, "scene(s) to evaluate");
  eval_cmd->add_option("--k", k, "samples per agent (1 = mode)");
  eval_cmd->add_option("--seed", seed, "sampling seed");
  eval_cmd->add_option("--workers", workers, "threads (0 = all cores)");
  eval_cmd->add_option("--baseline", baseline, "model or linear")->check(CLI::IsMember({"model", "linear"}));
  eval_cmd->add_option("--out", out, "output file (default stdout)");
  add_format(eval_cmd, {"csv", "json"});

  DataOptions predict_data;
  std::size_t predict_k = 1;
  auto* predict = app.add_subcommand("predict", "write predicted trajectories");
  predict_data.add(predict, false);
  predict->add_option("--ckpt", ckpt_path, "checkpoint")->required();
  predict->add_option("--k", predict_k, "samples per agent (1 = mode)")->capture_default_str();
  predict->add_option("--seed", seed, "sampling seed");
  predict->add_option("--out", out, "output file (default stdout)");
  add_format(predict, {"csv", "json"});

  DataOptions ablate_data;
  TrainOptions ablate_opts;
  std::string axis = "theta";
  std::vector<std::string> values;
  auto* ablate = app.add_subcommand("ablate", "train and evaluate one model per setting");
  ablate_data.add(ablate, true);
  ablate_opts.add(ablate);
  ablate->add_option("--axis", axis, "theta, factors or variant")
      ->check(CLI::IsMember({"theta", "factors", "variant"}));
  ablate->add_option("--values", values, "axis values (default: the standard sweep)");
  ablate->add_option("--leave-out", leave_out, "held-out test scene");
  ablate->add_option("--k", k, "samples per agent (1 = mode)");
  ablate->add_option("--workers", workers, "parallel configurations (0 = all cores)");
  ablate->add_option("--out", out, "output file (default stdout)");

  std::string gc_variant = "full";
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of all gradients");
  gradcheck->add_option("--seed", seed, "seed for data and weights");
  gradcheck->add_option("--variant", gc_variant, "model variant")
      ->check(CLI::IsMember({"full", "wo-sen", "wo-seq", "wo-ssa"}));

  std::string window_path, units = "meters";
  std::size_t window_index = 0;
  std::optional<std::size_t> frame;
  plot::PlotOptions plot_opts;
  std::size_t plot_k = 1;
  std::string svg_format = "svg";
  auto* plot_cmd = app.add_subcommand("plot", "draw a window as SVG");
  plot_cmd->add_option("--window", window_path, "trajectory file")->required();
  plot_cmd->add_option("--index", window_index, "window index within the file");
  plot_cmd->add_option("--units", units, "meters or pixels");
  plot_cmd->add_flag("--adjacency", plot_opts.adjacency, "draw social attention edges");
  plot_cmd->add_option("--threshold", plot_opts.edge_threshold, "minimum drawn edge weight");
  plot_cmd->add_option("--frame", frame, "observed frame for the edges (default: last)");
  plot_cmd->add_option("--theta", plot_opts.ssa.theta, "self-attention value");
  plot_cmd->add_option("--ckpt", ckpt_path, "checkpoint for predictions");
  plot_cmd->add_option("--k", plot_k, "sample fan size (needs --ckpt)")->capture_default_str();
  plot_cmd->add_option("--seed", seed, "sampling seed");
  plot_cmd->add_option("--out", out, "output file (default stdout)");
  plot_cmd->add_option("--format", svg_format, "output format")->check(CLI::IsMember({"svg"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("usage", e.what());
    return kUsage;
  }

  try {
    if (*ingest) return run_ingest(ingest_data, format, out);
    if (*synth_cmd) return run_synth(spec, kind, out);
    if (*train) {
      return run_train(train_data, train_opts, leave_out, loo, train_out, log_path, report, k, workers);
    }
    if (*eval_cmd) {
      return run_eval(eval_data, ckpt_path, scenes, baseline, k, seed, workers, format, out);
    }
    if (*predict) return run_predict(predict_data, ckpt_path, predict_k, seed, format, out);
    if (*ablate) {
      return run_ablate(ablate_data, ablate_opts, axis, values, leave_out, k, workers, out);
    }
    if (*gradcheck) return run_gradcheck(seed, gc_variant);
    if (*plot_cmd) {
      return run_plot(window_path, window_index, units, ckpt_path, plot_k, seed, plot_opts, frame, out);
    }
  } catch (const Error& e) {
    report_error(e.code(), e.what());
    return exit_code_for(e);
  } catch (const std::exception& e) {
    report_error("internal", e.what());
    return kFailure;
  }
  return kUsage;
}
