#pragma once

#include <cstddef>
#include <functional>

namespace ssagcn {

// Runs fn(i) for i in [0, n) on up to `workers` threads. Every index runs
// exactly once; if any call throws, the exception from the lowest failing
// index is rethrown after all threads finish.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

}  // namespace ssagcn
