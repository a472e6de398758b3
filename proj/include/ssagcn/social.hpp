#pragma once

// Social soft attention: a hand-designed edge weight combining relative
// speed, approach direction and distance between two agents.

#include <cstddef>
#include <span>
#include <string>

#include "ssagcn/geometry.hpp"
#include "ssagcn/numerics/tensor.hpp"

namespace ssagcn::social {

struct SsaConfig {
  // Raw self-attention placed on the diagonal before normalization.
  double theta = 0.10;
  bool use_speed = true;
  bool use_direction = true;
  bool use_distance = true;
  double epsilon_dist = 1e-6;
};

void validate(const SsaConfig& cfg);

struct PairGeometry {
  Vec2 rel_pos;  // p_j - p_i
  Vec2 rel_vel;  // u_i - u_j
  double distance = 0.0;
  double speed_i = 0.0;
  double speed_j = 0.0;
  // Angle between u_i and (p_j - p_i); 0 when agent i is stationary.
  double cos_alpha = 0.0;
  // Angle between u_j and (p_i - p_j); 0 when agent j is stationary.
  double cos_beta = 0.0;
};

PairGeometry pair_geometry(const Vec2& p_i, const Vec2& u_i, const Vec2& p_j, const Vec2& u_j,
                           const SsaConfig& cfg);

// Edge weight in angle form, honoring the factor masks in `cfg`.
double ssa_weight(const PairGeometry& g, const SsaConfig& cfg);
// The same weight with every factor on, computed as
// max(0, (u_i - u_j) . (p_j - p_i) / l^2).
double ssa_weight_closed_form(const PairGeometry& g);

struct AttentionMatrix {
  numerics::Tensor raw;         // [N][N]
  numerics::Tensor normalized;  // [N][N], row-wise softmax of raw
  std::size_t timestep = 0;
};

AttentionMatrix ssa_matrix(std::span<const Vec2> positions, std::span<const Vec2> velocities,
                           const SsaConfig& cfg, std::size_t timestep = 0);

// D^-1/2 (A + I) D^-1/2 with D the degree matrix of A + I.
numerics::Tensor symmetric_normalize(const numerics::Tensor& adjacency);

// Adjacency used when social attention is ablated: ones off the diagonal.
numerics::Tensor complete_graph(std::size_t n);

// Row-major CSV with 9 significant digits.
std::string to_csv(const numerics::Tensor& matrix);

}  // namespace ssagcn::social
