#pragma once

#include <cstdint>

#include "ssagcn/model.hpp"
#include "ssagcn/numerics/gradcheck.hpp"

namespace ssagcn::selfcheck {

inline constexpr double kEndToEndStep = 1e-4;
inline constexpr double kEndToEndTolerance = 1e-4;

// Finite-difference check of the training loss on the first window of a
// 3-agent overtake scene with a scene grid. Data and weights both come from
// `seed`.
numerics::GradCheckResult end_to_end_grad_check(model::Variant variant, std::uint64_t seed,
                                                double step = kEndToEndStep);

}  // namespace ssagcn::selfcheck
