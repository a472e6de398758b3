#include "ssagcn/social.hpp"

#include <algorithm>
#include <cmath>

#include "ssagcn/errors.hpp"

namespace ssagcn::social {

using numerics::Tensor;

void validate(const SsaConfig& cfg) {
  if (!(cfg.epsilon_dist > 0.0)) throw InvalidArgument("epsilon_dist must be positive");
  if (!std::isfinite(cfg.theta)) throw InvalidArgument("theta must be finite");
}

PairGeometry pair_geometry(const Vec2& p_i, const Vec2& u_i, const Vec2& p_j, const Vec2& u_j,
                           const SsaConfig& cfg) {
  PairGeometry g;
  g.rel_pos = p_j - p_i;
  g.rel_vel = u_i - u_j;
  g.distance = std::max(norm(g.rel_pos), cfg.epsilon_dist);
  g.speed_i = norm(u_i);
  g.speed_j = norm(u_j);
  if (g.speed_i > 0.0) g.cos_alpha = dot(u_i, g.rel_pos) / (g.speed_i * g.distance);
  if (g.speed_j > 0.0) g.cos_beta = -dot(u_j, g.rel_pos) / (g.speed_j * g.distance);
  return g;
}

double ssa_weight(const PairGeometry& g, const SsaConfig& cfg) {
  if (!cfg.use_speed && !cfg.use_direction && !cfg.use_distance) return 1.0;
  const double si = cfg.use_speed ? g.speed_i : 1.0;
  const double sj = cfg.use_speed ? g.speed_j : 1.0;
  const double ca = cfg.use_direction ? g.cos_alpha : 1.0;
  const double cb = cfg.use_direction ? g.cos_beta : 1.0;
  const double denominator = cfg.use_distance ? g.distance : 1.0;
  return std::max(0.0, (si * ca + sj * cb) / denominator);
}

double ssa_weight_closed_form(const PairGeometry& g) {
  return std::max(0.0, dot(g.rel_vel, g.rel_pos) / (g.distance * g.distance));
}

AttentionMatrix ssa_matrix(std::span<const Vec2> positions, std::span<const Vec2> velocities,
                           const SsaConfig& cfg, std::size_t timestep) {
  validate(cfg);
  const std::size_t n = positions.size();
  if (velocities.size() != n) throw ShapeError("ssa_matrix: positions/velocities mismatch");
  AttentionMatrix m;
  m.timestep = timestep;
  m.raw = Tensor({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    m.raw.at(i, i) = cfg.theta;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double w = ssa_weight(
          pair_geometry(positions[i], velocities[i], positions[j], velocities[j], cfg), cfg);
      m.raw.at(i, j) = w;
      m.raw.at(j, i) = w;
    }
  }
  m.normalized = Tensor({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    double mx = m.raw.at(i, 0);
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, m.raw.at(i, j));
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      m.normalized.at(i, j) = std::exp(m.raw.at(i, j) - mx);
      z += m.normalized.at(i, j);
    }
    for (std::size_t j = 0; j < n; ++j) m.normalized.at(i, j) /= z;
  }
  return m;
}

Tensor symmetric_normalize(const Tensor& adjacency) {
  if (adjacency.rank() != 2 || adjacency.dim(0) != adjacency.dim(1)) {
    throw ShapeError("symmetric_normalize expects a square matrix");
  }
  const std::size_t n = adjacency.dim(0);
  Tensor a_hat = adjacency;
  for (std::size_t i = 0; i < n; ++i) a_hat.at(i, i) += 1.0;
  std::vector<double> inv_sqrt_degree(n);
  for (std::size_t i = 0; i < n; ++i) {
    double degree = 0.0;
    for (std::size_t j = 0; j < n; ++j) degree += a_hat.at(i, j);
    inv_sqrt_degree[i] = 1.0 / std::sqrt(degree);
  }
  Tensor out({n, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      out.at(i, j) = inv_sqrt_degree[i] * a_hat.at(i, j) * inv_sqrt_degree[j];
  return out;
}

Tensor complete_graph(std::size_t n) {
  Tensor a({n, n}, 1.0);
  for (std::size_t i = 0; i < n; ++i) a.at(i, i) = 0.0;
  return a;
}

std::string to_csv(const Tensor& matrix) {
  std::string out;
  char buf[64];
  const std::size_t rows = matrix.dim(0), cols = matrix.dim(1);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      std::snprintf(buf, sizeof(buf), "%.9g", matrix.at(i, j));
      if (j) out += ',';
      out += buf;
    }
    out += '\n';
  }
  return out;
}

}  // namespace ssagcn::social
