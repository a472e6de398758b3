#pragma once

// Scene context per agent and node embedding.
//
// The context is scaled dot-product attention over the local block of grid
// cells around the agent: each cell's key is a projection of its features
// together with its offset from the agent, scored against a learned global
// query; the context is the attention-weighted, bias-free projection of the
// cell features.

#include <cstddef>
#include <span>
#include <vector>

#include "ssagcn/geometry.hpp"
#include "ssagcn/numerics/autodiff.hpp"
#include "ssagcn/scene_grid.hpp"

namespace ssagcn::sceneattn {

inline constexpr std::size_t kContextDim = 8;
inline constexpr std::size_t kDefaultKeyDim = 16;
inline constexpr std::size_t kDefaultWindow = 16;
inline constexpr std::size_t kDefaultEmbedDim = 5;

struct SceneAttnParams {
  numerics::Tensor key_proj;    // [d_k][D + 2]
  numerics::Tensor query;       // [d_k]
  numerics::Tensor value_proj;  // [d_c][D]
  std::size_t window = kDefaultWindow;
};

struct EmbedParams {
  numerics::Tensor weight;  // [d_e][in]
  numerics::Tensor bias;    // [d_e]
  numerics::Tensor slope;   // [d_e], PReLU
};

// Cells attended by one agent: features [S][D] and offsets [S][2] of each
// cell centre from the agent, in units of the window size.
struct SceneWindow {
  numerics::Tensor features;
  numerics::Tensor offsets;
  std::size_t row_begin = 0, row_end = 0, col_begin = 0, col_end = 0;
};

SceneWindow gather_scene_window(const trajdata::SceneGrid& grid, const Vec2& p,
                                std::size_t window);

// Context vector [d_c] on the tape.
numerics::Var scene_attention(numerics::Tape& tape, const SceneWindow& cells,
                              const numerics::Var& key_proj, const numerics::Var& query,
                              const numerics::Var& value_proj);

struct SceneAttentionResult {
  std::vector<double> context;  // [d_c]
  std::vector<double> weights;  // [S]
  SceneWindow cells;
};

SceneAttentionResult scene_attention(const trajdata::SceneGrid& grid, const Vec2& p,
                                     const SceneAttnParams& params);

// act(X W^T + b) for a batch of node inputs X [N][in].
numerics::Var embed_nodes(const numerics::Var& inputs, const numerics::Var& weight,
                          const numerics::Var& bias, const numerics::Var& slope);

// Single node: act(weight . [motion; context] + bias). Pass an empty context
// when the scene pathway is disabled.
std::vector<double> embed_node(std::span<const double> motion, std::span<const double> context,
                               const EmbedParams& params);

}  // namespace ssagcn::sceneattn
