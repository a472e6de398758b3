#pragma once

#include <array>
#include <utility>

#include "ssagcn/numerics/rng.hpp"

namespace ssagcn::numerics {

inline constexpr double kLogTwoPi = 1.8378770664093453;
// Lower bound applied to 1 - rho^2 inside the likelihood.
inline constexpr double kCorrelationFloor = 1e-9;

struct GaussianParams {
  double mu_x = 0.0;
  double mu_y = 0.0;
  double sigma_x = 1.0;
  double sigma_y = 1.0;
  double rho = 0.0;
};

// mu passes through, sigma = exp(raw), rho = tanh(raw).
GaussianParams constrain_gaussian(const std::array<double, 5>& raw);

// Negative log density of (x, y).
double bivariate_nll(const GaussianParams& g, double x, double y);

std::pair<double, double> sample_bivariate(const GaussianParams& g, Rng& rng);

}  // namespace ssagcn::numerics
