#include "ssagcn/selfcheck.hpp"

#include "ssagcn/synth.hpp"
#include "ssagcn/training.hpp"

namespace ssagcn::selfcheck {

numerics::GradCheckResult end_to_end_grad_check(model::Variant variant, std::uint64_t seed,
                                                double step) {
  synth::ScenarioSpec spec;
  spec.kind = synth::ScenarioKind::overtake;
  spec.n_agents = 3;
  spec.duration = 20;
  spec.seed = seed;
  spec.emit_grid = true;
  const auto generated = synth::generate(spec);
  const auto windows = trajdata::build_windows(generated.scene);
  model::ModelConfig config;
  config.variant = variant;
  const model::ModelParams params = model::init_params(config, seed);
  const trajdata::SceneGrid* grid = generated.grid ? &*generated.grid : nullptr;
  const auto& window = windows.front();
  auto loss = [&](numerics::Tape& tape, const std::vector<numerics::Var>& vars) {
    model::BoundParams bound{&params, vars};
    return training::model_loss(tape, bound, window, grid);
  };
  std::vector<numerics::Tensor> values = params.tensors;
  return numerics::grad_check(loss, values, step);
}

}  // namespace ssagcn::selfcheck
