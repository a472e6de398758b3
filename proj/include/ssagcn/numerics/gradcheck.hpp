#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "ssagcn/numerics/autodiff.hpp"

namespace ssagcn::numerics {

// Builds a scalar loss on `tape` from variables bound to the parameters.
using LossFn = std::function<Var(Tape& tape, const std::vector<Var>& params)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_param = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t coordinates = 0;
  // Coordinates whose probes straddled a kink at every tried step.
  std::size_t skipped = 0;
};

struct GradCheckOptions {
  double step = 1e-5;
  // Step is divided by 10 while probes cross a kink, down to this bound.
  double min_step = 1e-7;
};

// Compares reverse-mode gradients with central differences coordinate by
// coordinate. Relative error is |g_ad - g_fd| / (|g_ad| + |g_fd| + 1e-12).
// Probes must share the base point's tape branch signature. If only one side
// crosses a kink a one-sided second-order difference is used on the other;
// if both do the step shrinks. `params` are restored to
// their original values on return.
GradCheckResult grad_check(const LossFn& f, std::vector<Tensor>& params,
                           const GradCheckOptions& opts = {});
GradCheckResult grad_check(const LossFn& f, std::vector<Tensor>& params, double step);

// Reverse-mode gradients of `f` at `params`.
std::vector<Tensor> gradients(const LossFn& f, const std::vector<Tensor>& params,
                              double* loss = nullptr);

}  // namespace ssagcn::numerics
