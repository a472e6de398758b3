#include "ssagcn/training.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ssagcn/errors.hpp"

namespace ssagcn::training {

using numerics::Tape;
using numerics::Tensor;
using numerics::Var;
using trajdata::TrajectoryWindow;

void validate(const TrainConfig& cfg) {
  if (!(cfg.lr > 0.0) || !std::isfinite(cfg.lr)) throw InvalidArgument("learning rate must be positive");
  if (cfg.epochs < 1) throw InvalidArgument("epochs must be at least 1");
  if (cfg.window_stride < 1) throw InvalidArgument("window stride must be at least 1");
  if (!(cfg.grad_clip >= 0.0)) throw InvalidArgument("gradient clip must be non-negative");
  social::validate(cfg.model.ssa);
}

namespace {

Tensor displacement_targets(const TrajectoryWindow& window) {
  const std::size_t n = window.num_agents();
  Tensor targets({window.t_pred * n, 2});
  for (std::size_t tau = 0; tau < window.t_pred; ++tau)
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t t = window.t_obs + tau;
      const Vec2 d = window.at(t, i) - window.at(t - 1, i);
      targets.at(tau * n + i, 0) = d.x;
      targets.at(tau * n + i, 1) = d.y;
    }
  return targets;
}

}  // namespace

double window_nll(const model::GaussianSequence& seq, const TrajectoryWindow& window) {
  const std::size_t n = window.num_agents();
  if (seq.agents != n || seq.t_pred != window.t_pred) {
    throw ShapeError("gaussian sequence does not match window");
  }
  double total = 0.0;
  for (std::size_t tau = 0; tau < seq.t_pred; ++tau)
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t t = window.t_obs + tau;
      const Vec2 d = window.at(t, i) - window.at(t - 1, i);
      total += numerics::bivariate_nll(seq.at(tau, i), d.x, d.y);
    }
  return total / static_cast<double>(n);
}

Var window_loss(const Var& raw, const TrajectoryWindow& window) {
  const std::size_t n = window.num_agents();
  if (raw.shape() != numerics::Shape{window.t_pred, n, model::kGaussianDim}) {
    throw ShapeError("raw output " + numerics::shape_str(raw.shape()) + " does not match window");
  }
  const Var flat = numerics::reshape(raw, {window.t_pred * n, model::kGaussianDim});
  const Var total = numerics::gaussian_nll(flat, displacement_targets(window));
  return numerics::scale(total, 1.0 / static_cast<double>(n));
}

Var model_loss(Tape& tape, const model::BoundParams& bound, const TrajectoryWindow& window,
               const trajdata::SceneGrid* grid) {
  return window_loss(model::forward(tape, bound, window, grid).raw, window);
}

void sgd_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads, double lr) {
  if (params.size() != grads.size()) {
    throw ShapeError(std::to_string(params.size()) + " parameter arrays but " +
                     std::to_string(grads.size()) + " gradients");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k].shape() != grads[k].shape()) {
      throw ShapeError("gradient " + std::to_string(k) + " has shape " +
                       numerics::shape_str(grads[k].shape()) + ", parameter has " +
                       numerics::shape_str(params[k].shape()));
    }
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto p = params[k].data();
    const auto g = grads[k].data();
    for (std::size_t j = 0; j < p.size(); ++j) p[j] -= lr * g[j];
  }
}

double clip_gradients(std::vector<Tensor>& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& g : grads)
    for (const double v : g.data()) sq += v * v;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double factor = max_norm / norm;
    for (auto& g : grads)
      for (double& v : g.data()) v *= factor;
  }
  return norm;
}

void round_to_f32(model::ModelParams& params) {
  for (auto& t : params.tensors)
    for (double& v : t.data()) v = static_cast<double>(static_cast<float>(v));
}

Checkpoint train(const std::vector<TrajectoryWindow>& windows, const trajdata::Dataset& grids,
                 const TrainConfig& cfg, const EpochCallback& on_epoch) {
  validate(cfg);
  if (windows.empty()) throw EmptyDataset("no training windows");
  Checkpoint ckpt;
  ckpt.config = cfg;
  ckpt.params = model::init_params(cfg.model, numerics::derive_seed(cfg.seed, 0));
  numerics::Rng order_rng(numerics::derive_seed(cfg.seed, 1));

  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    order_rng.shuffle(order.begin(), order.end());
    double total = 0.0;
    for (const std::size_t index : order) {
      const TrajectoryWindow& window = windows[index];
      Tape tape;
      const model::BoundParams bound = model::bind(tape, ckpt.params, true);
      const Var loss = model_loss(tape, bound, window, grids.grid_for(window));
      const double value = loss.value().item();
      if (!std::isfinite(value)) throw NonFiniteLoss(index);
      tape.backward(loss);
      std::vector<Tensor> grads;
      grads.reserve(bound.vars.size());
      for (const auto& v : bound.vars) grads.push_back(v.grad());
      if (cfg.grad_clip > 0.0) clip_gradients(grads, cfg.grad_clip);
      sgd_step(ckpt.params.tensors, grads, cfg.lr);
      total += value;
    }
    const double mean = total / static_cast<double>(windows.size());
    ckpt.epoch_nll.push_back(mean);
    if (on_epoch) on_epoch({epoch, mean});
  }
  round_to_f32(ckpt.params);
  return ckpt;
}

Checkpoint train(const trajdata::Dataset& data, const TrainConfig& cfg,
                 const EpochCallback& on_epoch) {
  return train(data.windows, data, cfg, on_epoch);
}

namespace {

constexpr char kMagic[4] = {'S', 'S', 'A', 'C'};

nlohmann::json config_to_json(const TrainConfig& cfg) {
  const auto& m = cfg.model;
  return {
      {"lr", cfg.lr},
      {"epochs", cfg.epochs},
      {"seed", cfg.seed},
      {"batch_windows", 1},
      {"optimizer", "sgd"},
      {"init", "uniform_sqrt_inv_fan_in"},
      {"data_paths", cfg.data_paths},
      {"leave_out", cfg.leave_out},
      {"window_stride", cfg.window_stride},
      {"grad_clip", cfg.grad_clip},
      {"model",
       {{"t_obs", m.t_obs},
        {"t_pred", m.t_pred},
        {"embed_dim", m.embed_dim},
        {"scene_depth", m.scene_depth},
        {"key_dim", m.key_dim},
        {"scene_window", m.scene_window},
        {"variant", std::string(model::to_string(m.variant))},
        {"theta", m.ssa.theta},
        {"use_speed", m.ssa.use_speed},
        {"use_direction", m.ssa.use_direction},
        {"use_distance", m.ssa.use_distance},
        {"epsilon_dist", m.ssa.epsilon_dist}}},
  };
}

TrainConfig config_from_json(const nlohmann::json& j) {
  TrainConfig cfg;
  cfg.lr = j.at("lr").get<double>();
  cfg.epochs = j.at("epochs").get<std::size_t>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.data_paths = j.at("data_paths").get<std::vector<std::string>>();
  cfg.leave_out = j.at("leave_out").get<std::string>();
  cfg.window_stride = j.at("window_stride").get<std::size_t>();
  cfg.grad_clip = j.at("grad_clip").get<double>();
  const auto& m = j.at("model");
  cfg.model.t_obs = m.at("t_obs").get<std::size_t>();
  cfg.model.t_pred = m.at("t_pred").get<std::size_t>();
  cfg.model.embed_dim = m.at("embed_dim").get<std::size_t>();
  cfg.model.scene_depth = m.at("scene_depth").get<std::size_t>();
  cfg.model.key_dim = m.at("key_dim").get<std::size_t>();
  cfg.model.scene_window = m.at("scene_window").get<std::size_t>();
  cfg.model.variant = model::variant_from_string(m.at("variant").get<std::string>());
  cfg.model.ssa.theta = m.at("theta").get<double>();
  cfg.model.ssa.use_speed = m.at("use_speed").get<bool>();
  cfg.model.ssa.use_direction = m.at("use_direction").get<bool>();
  cfg.model.ssa.use_distance = m.at("use_distance").get<bool>();
  cfg.model.ssa.epsilon_dist = m.at("epsilon_dist").get<double>();
  return cfg;
}

template <class T>
void put_le(std::string& out, T value) {
  static_assert(std::endian::native == std::endian::little, "little-endian host required");
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

template <class T>
T get_le(std::string_view bytes, std::size_t& pos) {
  if (bytes.size() - pos < sizeof(T)) throw FormatError("checkpoint truncated");
  T value;
  std::memcpy(&value, bytes.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

}  // namespace

std::string encode_checkpoint(const Checkpoint& ckpt) {
  nlohmann::json tensors = nlohmann::json::array();
  for (std::size_t k = 0; k < ckpt.params.tensors.size(); ++k) {
    tensors.push_back({{"name", ckpt.params.names[k]}, {"shape", ckpt.params.tensors[k].shape()}});
  }
  const nlohmann::json header = {
      {"format", "ssagcn-checkpoint"},
      {"version", ckpt.version},
      {"config", config_to_json(ckpt.config)},
      {"tensors", tensors},
      {"num_parameters", ckpt.params.num_parameters()},
      {"epoch_nll", ckpt.epoch_nll},
  };
  const std::string text = header.dump();
  std::string out(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(out, ckpt.version);
  put_le<std::uint64_t>(out, text.size());
  out += text;
  for (const auto& t : ckpt.params.tensors)
    for (const double v : t.data()) put_le<float>(out, static_cast<float>(v));
  return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("not a checkpoint (bad magic)");
  }
  std::size_t pos = sizeof(kMagic);
  const auto version = get_le<std::uint32_t>(bytes, pos);
  if (version != kCheckpointVersion) {
    throw CheckpointVersionError("checkpoint version " + std::to_string(version) +
                                 ", expected " + std::to_string(kCheckpointVersion));
  }
  const auto header_len = get_le<std::uint64_t>(bytes, pos);
  if (bytes.size() - pos < header_len) throw FormatError("checkpoint header truncated");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(pos, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what());
  }
  pos += header_len;

  Checkpoint ckpt;
  ckpt.version = version;
  try {
    ckpt.config = config_from_json(header.at("config"));
    ckpt.epoch_nll = header.at("epoch_nll").get<std::vector<double>>();
    ckpt.params = model::init_params(ckpt.config.model, 0);
    const auto& tensors = header.at("tensors");
    if (tensors.size() != ckpt.params.tensors.size()) {
      throw FormatError("checkpoint has " + std::to_string(tensors.size()) +
                        " arrays, model expects " + std::to_string(ckpt.params.tensors.size()));
    }
    for (std::size_t k = 0; k < tensors.size(); ++k) {
      const auto name = tensors[k].at("name").get<std::string>();
      const auto shape = tensors[k].at("shape").get<numerics::Shape>();
      if (name != ckpt.params.names[k] || shape != ckpt.params.tensors[k].shape()) {
        throw FormatError("checkpoint array " + name + " " + numerics::shape_str(shape) +
                          " does not match model layout");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what());
  }
  for (auto& t : ckpt.params.tensors)
    for (double& v : t.data()) v = static_cast<double>(get_le<float>(bytes, pos));
  if (pos != bytes.size()) throw FormatError("trailing bytes after checkpoint data");
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileError("cannot write " + path.string());
  const std::string bytes = encode_checkpoint(ckpt);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FileError("cannot write " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open checkpoint " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return decode_checkpoint(buffer.str());
}

std::string training_log_csv(const Checkpoint& ckpt) {
  std::string out = "epoch,mean_nll\n";
  char buf[64];
  for (std::size_t e = 0; e < ckpt.epoch_nll.size(); ++e) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", e, ckpt.epoch_nll[e]);
    out += buf;
  }
  return out;
}

}  // namespace ssagcn::training
