#pragma once

// Forward pass: per observed step, embed every agent's displacement with its
// scene context, aggregate over the social graph with one GCN layer, then
// extrapolate with a six-layer temporal stack that treats time as channels.
// Each output is an unconstrained 5-vector per agent and future step,
// interpreted as a bivariate Gaussian over that step's displacement.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ssagcn/numerics/autodiff.hpp"
#include "ssagcn/numerics/gaussian.hpp"
#include "ssagcn/numerics/rng.hpp"
#include "ssagcn/scene_grid.hpp"
#include "ssagcn/social.hpp"
#include "ssagcn/trajdata.hpp"

namespace ssagcn::model {

enum class Variant {
  full,    // sequential scene attention + social soft attention
  wo_sen,  // no scene pathway
  wo_seq,  // scene attention at the last observed step only, broadcast
  wo_ssa,  // normalized complete graph instead of social soft attention
};

std::string_view to_string(Variant v);
// Accepts "full", "wo-sen", "wo_sen", "w/o-sen" and the analogues.
Variant variant_from_string(std::string_view text);

inline constexpr std::size_t kTcnLayers = 6;
inline constexpr std::size_t kGaussianDim = 5;

struct ModelConfig {
  std::size_t t_obs = 8;
  std::size_t t_pred = 12;
  std::size_t embed_dim = kGaussianDim;
  std::size_t scene_depth = 1;
  std::size_t key_dim = 16;
  std::size_t scene_window = 16;
  Variant variant = Variant::full;
  social::SsaConfig ssa;

  bool uses_scene() const noexcept { return variant != Variant::wo_sen; }
};

// Learnable arrays in declaration order.
class ModelParams {
 public:
  ModelConfig config;
  std::vector<std::string> names;
  std::vector<numerics::Tensor> tensors;

  std::size_t index_of(std::string_view name) const;
  bool contains(std::string_view name) const;
  numerics::Tensor& get(std::string_view name) { return tensors[index_of(name)]; }
  const numerics::Tensor& get(std::string_view name) const { return tensors[index_of(name)]; }
  std::size_t num_parameters() const;
};

// Weights uniform in +-sqrt(1/fan_in), PReLU slopes 0.25.
ModelParams init_params(const ModelConfig& config, std::uint64_t seed);

// Parameters bound as tape variables, aligned with ModelParams::tensors.
struct BoundParams {
  const ModelParams* params = nullptr;
  std::vector<numerics::Var> vars;

  const numerics::Var& get(std::string_view name) const { return vars[params->index_of(name)]; }
};

BoundParams bind(numerics::Tape& tape, const ModelParams& params, bool requires_grad);

// act(A V W). `slope` may be undefined for a linear layer.
numerics::Var gcn_forward(const numerics::Var& features, const numerics::Tensor& adjacency,
                          const numerics::Var& weight, const numerics::Var& slope);

// Permutation-equivariant 3x3 stencil over the (agent, feature) plane with
// time as channels. The three agent-axis taps read the mean over the other
// agents, the agent itself, and the elementwise max over the other agents;
// the feature-axis taps use unit zero padding. x [C][N][F], weight
// [O][C][3][3], bias [O] -> [O][N][F].
numerics::Var node_conv(const numerics::Var& x, const numerics::Var& weight,
                        const numerics::Var& bias);

struct TcnVars {
  std::array<numerics::Var, kTcnLayers> weight;
  std::array<numerics::Var, kTcnLayers> bias;
  std::array<numerics::Var, kTcnLayers - 1> slope;
};

TcnVars tcn_vars(const BoundParams& bound);

// [T_obs][N][F] -> [T_pred][N][F]. Layer 1 changes the channel count;
// layers 2..6 add a residual; layers 1..5 end in PReLU.
numerics::Var tcn_forward(const numerics::Var& h, const TcnVars& stack);

// Intermediate values of one forward pass, kept for inspection.
struct ForwardTrace {
  numerics::Var raw;                           // [T_pred][N][5]
  std::vector<numerics::Var> contexts;         // per observed step, [N][d_c]
  std::vector<numerics::Var> node_features;    // per observed step, [N][d_e]
  std::vector<numerics::Var> post_gcn;         // per observed step, [N][d_e]
  std::vector<numerics::Tensor> adjacency;     // per observed step, [N][N]
};

ForwardTrace forward(numerics::Tape& tape, const BoundParams& bound,
                     const trajdata::TrajectoryWindow& window,
                     const trajdata::SceneGrid* grid);

struct GaussianSequence {
  std::size_t t_pred = 0;
  std::size_t agents = 0;
  std::vector<numerics::GaussianParams> params;  // [T_pred][N], per-step displacement
  std::vector<Vec2> origin;                      // [N], last observed positions

  const numerics::GaussianParams& at(std::size_t tau, std::size_t i) const {
    return params[tau * agents + i];
  }
  numerics::GaussianParams& at(std::size_t tau, std::size_t i) { return params[tau * agents + i]; }
};

GaussianSequence to_gaussian_sequence(const numerics::Tensor& raw,
                                      const trajdata::TrajectoryWindow& window);

GaussianSequence model_forward(const trajdata::TrajectoryWindow& window,
                               const trajdata::SceneGrid* grid, const ModelParams& params);

// Absolute positions [K][T_pred][N].
struct TrajectorySet {
  std::size_t k = 0;
  std::size_t t_pred = 0;
  std::size_t agents = 0;
  std::vector<Vec2> points;

  TrajectorySet() = default;
  TrajectorySet(std::size_t k_, std::size_t t_pred_, std::size_t agents_)
      : k(k_), t_pred(t_pred_), agents(agents_), points(k_ * t_pred_ * agents_) {}

  const Vec2& at(std::size_t s, std::size_t t, std::size_t i) const {
    return points[(s * t_pred + t) * agents + i];
  }
  Vec2& at(std::size_t s, std::size_t t, std::size_t i) { return points[(s * t_pred + t) * agents + i]; }
};

// Samples each displacement independently and accumulates from the origin.
// With `mode` set, a single trajectory built from the means is returned.
TrajectorySet predict_trajectories(const GaussianSequence& seq, std::size_t k, numerics::Rng& rng,
                                   bool mode = false);

// Future ground truth of a window as a single-sample set.
TrajectorySet ground_truth(const trajdata::TrajectoryWindow& window);

}  // namespace ssagcn::model
