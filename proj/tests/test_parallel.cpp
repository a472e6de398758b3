#include <atomic>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "ssagcn/parallel.hpp"

TEST_SUITE("parallel") {
  TEST_CASE("every index runs exactly once") {
    for (std::size_t workers : {0u, 1u, 3u, 16u}) {
      std::vector<std::atomic<int>> hits(257);
      ssagcn::parallel_for(hits.size(), workers, [&](std::size_t i) { ++hits[i]; });
      for (const auto& h : hits) CHECK(h.load() == 1);
    }
    bool called = false;
    ssagcn::parallel_for(0, 4, [&](std::size_t) { called = true; });
    CHECK(!called);
  }

  TEST_CASE("the lowest failing index is reported after all work finishes") {
    std::atomic<int> done{0};
    try {
      ssagcn::parallel_for(100, 8, [&](std::size_t i) {
        ++done;
        if (i % 30 == 7) throw std::runtime_error(std::to_string(i));
      });
      FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()) == "7");
    }
    CHECK(done.load() == 100);
  }
}
