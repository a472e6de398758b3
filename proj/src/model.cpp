#include "ssagcn/model.hpp"

#include <cmath>

#include "ssagcn/errors.hpp"
#include "ssagcn/sceneattn.hpp"

namespace ssagcn::model {

using numerics::Shape;
using numerics::Tape;
using numerics::Tensor;
using numerics::Var;

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::full: return "full";
    case Variant::wo_sen: return "wo-sen";
    case Variant::wo_seq: return "wo-seq";
    case Variant::wo_ssa: return "wo-ssa";
  }
  return "full";
}

Variant variant_from_string(std::string_view text) {
  std::string key;
  for (char c : text) {
    if (c == '_' || c == '/') c = '-';
    key.push_back(c);
  }
  if (key == "full") return Variant::full;
  if (key == "wo-sen" || key == "w-o-sen") return Variant::wo_sen;
  if (key == "wo-seq" || key == "w-o-seq") return Variant::wo_seq;
  if (key == "wo-ssa" || key == "w-o-ssa") return Variant::wo_ssa;
  throw InvalidArgument("unknown variant '" + std::string(text) + "'");
}

std::size_t ModelParams::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return i;
  }
  throw InvalidArgument("model has no parameter '" + std::string(name) + "'");
}

bool ModelParams::contains(std::string_view name) const {
  for (const auto& n : names) {
    if (n == name) return true;
  }
  return false;
}

std::size_t ModelParams::num_parameters() const {
  std::size_t total = 0;
  for (const auto& t : tensors) total += t.size();
  return total;
}

ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
  if (config.t_obs < 2 || config.t_pred < 1) throw InvalidArgument("invalid window lengths");
  if (config.uses_scene() && config.scene_depth == 0) {
    throw InvalidArgument("scene variants need a positive scene depth");
  }
  numerics::Rng rng(seed);
  ModelParams p;
  p.config = config;
  auto add_uniform = [&](std::string name, Shape shape, std::size_t fan_in) {
    Tensor t(std::move(shape));
    const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
    for (double& v : t.data()) v = rng.uniform(-bound, bound);
    p.names.push_back(std::move(name));
    p.tensors.push_back(std::move(t));
  };
  auto add_const = [&](std::string name, Shape shape, double value) {
    p.names.push_back(std::move(name));
    p.tensors.emplace_back(std::move(shape), value);
  };

  const std::size_t d_e = config.embed_dim;
  const std::size_t d_c = sceneattn::kContextDim;
  const std::size_t embed_in = 2 + (config.uses_scene() ? d_c : 0);
  add_uniform("embed.weight", {d_e, embed_in}, embed_in);
  add_uniform("embed.bias", {d_e}, embed_in);
  add_const("embed.slope", {d_e}, 0.25);
  if (config.uses_scene()) {
    const std::size_t depth = config.scene_depth;
    add_uniform("scene.key_proj", {config.key_dim, depth + 2}, depth + 2);
    add_uniform("scene.query", {config.key_dim}, config.key_dim);
    add_uniform("scene.value_proj", {d_c, depth}, depth);
  }
  add_uniform("gcn.weight", {d_e, d_e}, d_e);
  add_const("gcn.slope", {d_e}, 0.25);
  for (std::size_t layer = 0; layer < kTcnLayers; ++layer) {
    const std::size_t in = layer == 0 ? config.t_obs : config.t_pred;
    const std::size_t out = config.t_pred;
    const std::string prefix = "tcn." + std::to_string(layer);
    add_uniform(prefix + ".weight", {out, in, 3, 3}, in * 9);
    add_uniform(prefix + ".bias", {out}, in * 9);
    if (layer + 1 < kTcnLayers) add_const(prefix + ".slope", {out}, 0.25);
  }
  return p;
}

BoundParams bind(Tape& tape, const ModelParams& params, bool requires_grad) {
  BoundParams b;
  b.params = &params;
  b.vars.reserve(params.tensors.size());
  for (const auto& t : params.tensors) {
    b.vars.push_back(requires_grad ? tape.leaf(t) : tape.constant(t));
  }
  return b;
}

Var gcn_forward(const Var& features, const Tensor& adjacency, const Var& weight, const Var& slope) {
  const std::size_t n = features.value().dim(0);
  if (adjacency.shape() != Shape{n, n}) {
    throw ShapeError("gcn adjacency " + numerics::shape_str(adjacency.shape()) +
                     " does not match " + std::to_string(n) + " nodes");
  }
  Tape& tape = features.tape();
  const Var aggregated = numerics::matmul(tape.constant(adjacency), features);
  const Var mixed = numerics::matmul(aggregated, weight);
  return slope.defined() ? numerics::prelu(mixed, slope, 1) : mixed;
}

Var node_conv(const Var& x, const Var& weight, const Var& bias) {
  const Shape& s = x.shape();
  if (s.size() != 3) throw ShapeError("node_conv expects [C][N][F], got " + numerics::shape_str(s));
  const std::size_t c = s[0], n = s[1], f = s[2];
  const std::array<Var, 3> taps{numerics::mean_others(x, 1), x, numerics::max_others(x, 1)};
  // [C][N][3][F] viewed as [C][3N][F]: rows 3i..3i+2 hold agent i's taps.
  const Var rows = numerics::reshape(numerics::stack(taps, 2), {c, 3 * n, f});
  return numerics::conv2d(rows, weight, bias, {.stride_h = 3, .stride_w = 1, .pad_h = 0, .pad_w = 1});
}

TcnVars tcn_vars(const BoundParams& bound) {
  TcnVars v;
  for (std::size_t layer = 0; layer < kTcnLayers; ++layer) {
    const std::string prefix = "tcn." + std::to_string(layer);
    v.weight[layer] = bound.get(prefix + ".weight");
    v.bias[layer] = bound.get(prefix + ".bias");
    if (layer + 1 < kTcnLayers) v.slope[layer] = bound.get(prefix + ".slope");
  }
  return v;
}

Var tcn_forward(const Var& h, const TcnVars& stack) {
  if (h.value().rank() != 3) throw ShapeError("tcn input must be [T][N][F]");
  Var x = h;
  for (std::size_t layer = 0; layer < kTcnLayers; ++layer) {
    const Shape& ws = stack.weight[layer].shape();
    if (ws.size() != 4 || ws[1] != x.shape()[0]) {
      throw ShapeError("tcn layer " + std::to_string(layer) + " expects " +
                       std::to_string(ws.size() == 4 ? ws[1] : 0) + " channels, got " +
                       std::to_string(x.shape()[0]));
    }
    Var y = node_conv(x, stack.weight[layer], stack.bias[layer]);
    if (layer > 0) y = numerics::add(y, x);
    if (layer + 1 < kTcnLayers) y = numerics::prelu(y, stack.slope[layer], 0);
    x = y;
  }
  return x;
}

namespace {

Tensor adjacency_for(const ModelConfig& config, const trajdata::TrajectoryWindow& window,
                     const trajdata::DisplacementField& u, std::size_t t) {
  const std::size_t n = window.num_agents();
  if (config.variant == Variant::wo_ssa) {
    return social::symmetric_normalize(social::complete_graph(n));
  }
  const std::span<const Vec2> positions(&window.positions[t * n], n);
  const std::span<const Vec2> velocities(&u.u[t * n], n);
  return social::ssa_matrix(positions, velocities, config.ssa, t).normalized;
}

}  // namespace

ForwardTrace forward(Tape& tape, const BoundParams& bound, const trajdata::TrajectoryWindow& window,
                     const trajdata::SceneGrid* grid) {
  const ModelConfig& config = bound.params->config;
  if (window.t_obs != config.t_obs || window.t_pred != config.t_pred) {
    throw ShapeError("window is " + std::to_string(window.t_obs) + "+" +
                     std::to_string(window.t_pred) + " frames, model expects " +
                     std::to_string(config.t_obs) + "+" + std::to_string(config.t_pred));
  }
  const std::size_t n = window.num_agents();
  if (n == 0) throw ShapeError("window has no agents");
  if (config.uses_scene()) {
    if (grid == nullptr) {
      throw MissingScene("variant " + std::string(to_string(config.variant)) +
                         " needs a scene grid for '" + window.source + "'");
    }
    if (grid->depth != config.scene_depth) {
      throw ShapeError("scene grid depth " + std::to_string(grid->depth) +
                       " does not match model depth " + std::to_string(config.scene_depth));
    }
  }
  const trajdata::DisplacementField u = trajdata::displacements(window);
  ForwardTrace trace;

  auto contexts_at = [&](std::size_t t) {
    std::vector<Var> rows;
    rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto cells = sceneattn::gather_scene_window(*grid, window.at(t, i), config.scene_window);
      const Var c = sceneattn::scene_attention(tape, cells, bound.get("scene.key_proj"),
                                               bound.get("scene.query"),
                                               bound.get("scene.value_proj"));
      rows.push_back(numerics::reshape(c, {1, sceneattn::kContextDim}));
    }
    return numerics::concat(rows, 0);
  };
  if (config.variant == Variant::wo_seq) {
    const Var last = contexts_at(config.t_obs - 1);
    trace.contexts.assign(config.t_obs, last);
  } else if (config.uses_scene()) {
    for (std::size_t t = 0; t < config.t_obs; ++t) trace.contexts.push_back(contexts_at(t));
  }

  const Var& gcn_weight = bound.get("gcn.weight");
  const Var& gcn_slope = bound.get("gcn.slope");
  std::vector<Var> steps;
  for (std::size_t t = 0; t < config.t_obs; ++t) {
    Tensor motion({n, 2});
    for (std::size_t i = 0; i < n; ++i) {
      motion.at(i, 0) = u.at(t, i).x;
      motion.at(i, 1) = u.at(t, i).y;
    }
    Var inputs = tape.constant(std::move(motion));
    if (config.uses_scene()) {
      const std::array<Var, 2> parts{inputs, trace.contexts[t]};
      inputs = numerics::concat(parts, 1);
    }
    const Var v = sceneattn::embed_nodes(inputs, bound.get("embed.weight"),
                                         bound.get("embed.bias"), bound.get("embed.slope"));
    Tensor adjacency = adjacency_for(config, window, u, t);
    const Var v_prime = gcn_forward(v, adjacency, gcn_weight, gcn_slope);
    trace.node_features.push_back(v);
    trace.post_gcn.push_back(v_prime);
    trace.adjacency.push_back(std::move(adjacency));
    steps.push_back(v_prime);
  }
  const Var h = numerics::stack(steps, 0);
  trace.raw = tcn_forward(h, tcn_vars(bound));
  return trace;
}

GaussianSequence to_gaussian_sequence(const Tensor& raw, const trajdata::TrajectoryWindow& window) {
  const std::size_t n = window.num_agents();
  if (raw.shape() != Shape{window.t_pred, n, kGaussianDim}) {
    throw ShapeError("raw output " + numerics::shape_str(raw.shape()) +
                     " does not match window");
  }
  GaussianSequence seq;
  seq.t_pred = window.t_pred;
  seq.agents = n;
  seq.params.resize(seq.t_pred * n);
  for (std::size_t tau = 0; tau < seq.t_pred; ++tau)
    for (std::size_t i = 0; i < n; ++i) {
      std::array<double, 5> r{};
      for (std::size_t k = 0; k < 5; ++k) r[k] = raw.at(tau, i, k);
      seq.at(tau, i) = numerics::constrain_gaussian(r);
    }
  seq.origin.resize(n);
  for (std::size_t i = 0; i < n; ++i) seq.origin[i] = window.at(window.t_obs - 1, i);
  return seq;
}

GaussianSequence model_forward(const trajdata::TrajectoryWindow& window,
                               const trajdata::SceneGrid* grid, const ModelParams& params) {
  Tape tape(false);
  const BoundParams bound = bind(tape, params, false);
  const ForwardTrace trace = forward(tape, bound, window, grid);
  return to_gaussian_sequence(trace.raw.value(), window);
}

TrajectorySet predict_trajectories(const GaussianSequence& seq, std::size_t k, numerics::Rng& rng,
                                   bool mode) {
  if (k < 1) throw InvalidArgument("need at least one trajectory sample");
  if (mode) k = 1;
  TrajectorySet out(k, seq.t_pred, seq.agents);
  for (std::size_t s = 0; s < k; ++s) {
    std::vector<Vec2> current = seq.origin;
    for (std::size_t tau = 0; tau < seq.t_pred; ++tau) {
      for (std::size_t i = 0; i < seq.agents; ++i) {
        const auto& g = seq.at(tau, i);
        Vec2 step{g.mu_x, g.mu_y};
        if (!mode) {
          const auto [dx, dy] = numerics::sample_bivariate(g, rng);
          step = {dx, dy};
        }
        current[i] += step;
        out.at(s, tau, i) = current[i];
      }
    }
  }
  return out;
}

TrajectorySet ground_truth(const trajdata::TrajectoryWindow& window) {
  TrajectorySet gt(1, window.t_pred, window.num_agents());
  for (std::size_t tau = 0; tau < window.t_pred; ++tau)
    for (std::size_t i = 0; i < window.num_agents(); ++i)
      gt.at(0, tau, i) = window.at(window.t_obs + tau, i);
  return gt;
}

}  // namespace ssagcn::model
