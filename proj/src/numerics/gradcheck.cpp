#include "ssagcn/numerics/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>

namespace ssagcn::numerics {

std::vector<Tensor> gradients(const LossFn& f, const std::vector<Tensor>& params, double* loss) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (const auto& p : params) vars.push_back(tape.leaf(p));
  Var out = f(tape, vars);
  tape.backward(out);
  if (loss) *loss = out.value().item();
  std::vector<Tensor> grads;
  grads.reserve(vars.size());
  for (const auto& v : vars) grads.push_back(v.grad());
  return grads;
}

namespace {

struct Probe {
  double loss;
  std::uint64_t signature;
};

Probe evaluate(const LossFn& f, const std::vector<Tensor>& params) {
  Tape tape(false);
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (const auto& p : params) vars.push_back(tape.constant(p));
  const double loss = f(tape, vars).value().item();
  return {loss, tape.branch_signature()};
}

}  // namespace

GradCheckResult grad_check(const LossFn& f, std::vector<Tensor>& params,
                           const GradCheckOptions& opts) {
  const std::vector<Tensor> analytic = gradients(f, params);
  const Probe base = evaluate(f, params);
  GradCheckResult result;
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (std::size_t i = 0; i < params[p].size(); ++i) {
      const double original = params[p][i];
      auto probe = [&](double offset) -> std::optional<double> {
        params[p][i] = original + offset;
        const Probe r = evaluate(f, params);
        params[p][i] = original;
        if (r.signature != base.signature) return std::nullopt;
        return r.loss;
      };
      std::optional<double> numeric;
      for (double h = opts.step; h >= opts.min_step * (1.0 - 1e-9) && !numeric; h /= 10.0) {
        const auto up = probe(h);
        const auto down = probe(-h);
        if (up && down) {
          numeric = (*up - *down) / (2.0 * h);
        } else if (up || down) {
          // One side crosses a kink: second-order one-sided difference on the other.
          const double sign = up ? 1.0 : -1.0;
          if (const auto far = probe(2.0 * sign * h)) {
            numeric = sign * (-3.0 * base.loss + 4.0 * (up ? *up : *down) - *far) / (2.0 * h);
          }
        }
      }
      ++result.coordinates;
      if (!numeric) {
        ++result.skipped;
        continue;
      }
      const double ad = analytic[p][i];
      double err = std::abs(ad - *numeric) / (std::abs(ad) + std::abs(*numeric) + 1e-12);
      if (!std::isfinite(err)) err = 1.0;
      if (err > result.max_rel_error || result.coordinates - result.skipped == 1) {
        result.max_rel_error = err;
        result.worst_param = p;
        result.worst_index = i;
        result.worst_analytic = ad;
        result.worst_numeric = *numeric;
      }
    }
  }
  return result;
}

GradCheckResult grad_check(const LossFn& f, std::vector<Tensor>& params, double step) {
  GradCheckOptions opts;
  opts.step = step;
  opts.min_step = std::min(opts.min_step, step);
  return grad_check(f, params, opts);
}

}  // namespace ssagcn::numerics
