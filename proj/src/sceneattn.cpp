#include "ssagcn/sceneattn.hpp"

#include <algorithm>
#include <cmath>

#include "ssagcn/errors.hpp"

namespace ssagcn::sceneattn {

using numerics::Tape;
using numerics::Tensor;
using numerics::Var;

namespace {

// Half-open index range of length `window` around `center`, clipped to
// [0, extent); the whole extent when it is not larger than the window.
std::pair<std::size_t, std::size_t> block_range(std::size_t center, std::size_t extent,
                                                std::size_t window) {
  if (extent <= window) return {0, extent};
  const auto begin = static_cast<std::ptrdiff_t>(center) - static_cast<std::ptrdiff_t>(window / 2);
  const auto end = begin + static_cast<std::ptrdiff_t>(window);
  return {static_cast<std::size_t>(std::max<std::ptrdiff_t>(begin, 0)),
          static_cast<std::size_t>(std::min<std::ptrdiff_t>(end, static_cast<std::ptrdiff_t>(extent)))};
}

double clamp_coordinate(double v, std::size_t extent) {
  if (std::isnan(v)) return 0.0;
  return std::clamp(v, 0.0, static_cast<double>(extent));
}

}  // namespace

SceneWindow gather_scene_window(const trajdata::SceneGrid& grid, const Vec2& p,
                                std::size_t window) {
  if (window == 0) throw InvalidArgument("scene attention window must be positive");
  const Vec2 cell = trajdata::world_to_cell(grid, p);
  const double ax = clamp_coordinate(cell.x, grid.width);
  const double ay = clamp_coordinate(cell.y, grid.height);
  const auto col = std::min<std::size_t>(static_cast<std::size_t>(ax), grid.width - 1);
  const auto row = std::min<std::size_t>(static_cast<std::size_t>(ay), grid.height - 1);

  SceneWindow w;
  std::tie(w.col_begin, w.col_end) = block_range(col, grid.width, window);
  std::tie(w.row_begin, w.row_end) = block_range(row, grid.height, window);
  const std::size_t cells = (w.row_end - w.row_begin) * (w.col_end - w.col_begin);
  const std::size_t depth = grid.depth;
  w.features = Tensor({cells, depth});
  w.offsets = Tensor({cells, 2});
  const double inv_window = 1.0 / static_cast<double>(window);
  std::size_t s = 0;
  for (std::size_t r = w.row_begin; r < w.row_end; ++r) {
    for (std::size_t c = w.col_begin; c < w.col_end; ++c, ++s) {
      for (std::size_t d = 0; d < depth; ++d) w.features.at(s, d) = grid.at(r, c, d);
      w.offsets.at(s, 0) = (static_cast<double>(c) + 0.5 - ax) * inv_window;
      w.offsets.at(s, 1) = (static_cast<double>(r) + 0.5 - ay) * inv_window;
    }
  }
  return w;
}

Var scene_attention(Tape& tape, const SceneWindow& cells, const Var& key_proj, const Var& query,
                    const Var& value_proj) {
  const std::size_t depth = cells.features.dim(1);
  const std::size_t d_k = query.value().size();
  if (key_proj.shape() != numerics::Shape{d_k, depth + 2}) {
    throw ShapeError("scene attention key projection has shape " +
                     numerics::shape_str(key_proj.shape()));
  }
  if (value_proj.value().rank() != 2 || value_proj.value().dim(1) != depth) {
    throw ShapeError("scene attention value projection has shape " +
                     numerics::shape_str(value_proj.shape()));
  }
  const std::size_t s = cells.features.dim(0);
  Tensor augmented({s, depth + 2});
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t d = 0; d < depth; ++d) augmented.at(i, d) = cells.features.at(i, d);
    augmented.at(i, depth) = cells.offsets.at(i, 0);
    augmented.at(i, depth + 1) = cells.offsets.at(i, 1);
  }
  const Var keys = numerics::matmul(tape.constant(std::move(augmented)),
                                    numerics::transpose(key_proj));            // [S][d_k]
  const Var scores = numerics::matmul(keys, numerics::reshape(query, {d_k, 1}));  // [S][1]
  const Var weights = numerics::softmax(numerics::scale(
      numerics::reshape(scores, {1, s}), 1.0 / std::sqrt(static_cast<double>(d_k))));
  const Var pooled = numerics::matmul(weights, tape.constant(cells.features));  // [1][D]
  const Var context = numerics::matmul(pooled, numerics::transpose(value_proj));  // [1][d_c]
  return numerics::reshape(context, {value_proj.value().dim(0)});
}

SceneAttentionResult scene_attention(const trajdata::SceneGrid& grid, const Vec2& p,
                                     const SceneAttnParams& params) {
  SceneAttentionResult result;
  result.cells = gather_scene_window(grid, p, params.window);
  Tape tape(false);
  const Var key = tape.constant(params.key_proj);
  const Var query = tape.constant(params.query);
  const Var value = tape.constant(params.value_proj);
  const Var context = scene_attention(tape, result.cells, key, query, value);
  result.context.assign(context.value().data().begin(), context.value().data().end());

  // Recompute the weights for inspection.
  const std::size_t s = result.cells.features.dim(0);
  const std::size_t depth = result.cells.features.dim(1);
  const std::size_t d_k = params.query.size();
  std::vector<double> scores(s, 0.0);
  for (std::size_t i = 0; i < s; ++i) {
    double score = 0.0;
    for (std::size_t k = 0; k < d_k; ++k) {
      double key_k = 0.0;
      for (std::size_t d = 0; d < depth; ++d) {
        key_k += params.key_proj.at(k, d) * result.cells.features.at(i, d);
      }
      key_k += params.key_proj.at(k, depth) * result.cells.offsets.at(i, 0);
      key_k += params.key_proj.at(k, depth + 1) * result.cells.offsets.at(i, 1);
      score += params.query[k] * key_k;
    }
    scores[i] = score / std::sqrt(static_cast<double>(d_k));
  }
  const double mx = *std::max_element(scores.begin(), scores.end());
  double z = 0.0;
  result.weights.resize(s);
  for (std::size_t i = 0; i < s; ++i) z += result.weights[i] = std::exp(scores[i] - mx);
  for (double& w : result.weights) w /= z;
  return result;
}

Var embed_nodes(const Var& inputs, const Var& weight, const Var& bias, const Var& slope) {
  if (inputs.value().rank() != 2 || weight.value().rank() != 2 ||
      inputs.value().dim(1) != weight.value().dim(1)) {
    throw ShapeError("embedding input " + numerics::shape_str(inputs.shape()) +
                     " does not match weight " + numerics::shape_str(weight.shape()));
  }
  const Var linear = numerics::add_bias(numerics::matmul(inputs, numerics::transpose(weight)), bias);
  return numerics::prelu(linear, slope, 1);
}

std::vector<double> embed_node(std::span<const double> motion, std::span<const double> context,
                               const EmbedParams& params) {
  const std::size_t in = motion.size() + context.size();
  if (params.weight.rank() != 2 || params.weight.dim(1) != in) {
    throw ShapeError("embedding expects input dimension " +
                     std::to_string(params.weight.rank() == 2 ? params.weight.dim(1) : 0) +
                     ", got " + std::to_string(in));
  }
  Tape tape(false);
  Tensor x({1, in});
  std::copy(motion.begin(), motion.end(), x.data().begin());
  std::copy(context.begin(), context.end(), x.data().begin() + static_cast<std::ptrdiff_t>(motion.size()));
  const Var v = embed_nodes(tape.constant(std::move(x)), tape.constant(params.weight),
                            tape.constant(params.bias), tape.constant(params.slope));
  return {v.value().data().begin(), v.value().data().end()};
}

}  // namespace ssagcn::sceneattn
