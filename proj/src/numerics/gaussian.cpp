#include "ssagcn/numerics/gaussian.hpp"

#include <algorithm>
#include <cmath>

namespace ssagcn::numerics {

GaussianParams constrain_gaussian(const std::array<double, 5>& raw) {
  return GaussianParams{raw[0], raw[1], std::exp(raw[2]), std::exp(raw[3]), std::tanh(raw[4])};
}

double bivariate_nll(const GaussianParams& g, double x, double y) {
  const double zx = (x - g.mu_x) / g.sigma_x;
  const double zy = (y - g.mu_y) / g.sigma_y;
  const double om = std::max(1.0 - g.rho * g.rho, kCorrelationFloor);
  const double q = zx * zx + zy * zy - 2.0 * g.rho * zx * zy;
  return kLogTwoPi + std::log(g.sigma_x) + std::log(g.sigma_y) + 0.5 * std::log(om) +
         q / (2.0 * om);
}

std::pair<double, double> sample_bivariate(const GaussianParams& g, Rng& rng) {
  const auto [z1, z2] = rng.normal_pair();
  const double om = std::max(1.0 - g.rho * g.rho, 0.0);
  return {g.mu_x + g.sigma_x * z1, g.mu_y + g.sigma_y * (g.rho * z1 + std::sqrt(om) * z2)};
}

}  // namespace ssagcn::numerics
