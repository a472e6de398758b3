#include <fstream>
#include <set>

#include "doctest.h"
#include "ssagcn/errors.hpp"
#include "ssagcn/social.hpp"
#include "ssagcn/synth.hpp"
#include "support.hpp"

using namespace ssagcn;
using namespace ssagcn::synth;

namespace {

ScenarioSpec clean(ScenarioKind kind, std::size_t agents, std::uint64_t seed = 1) {
  ScenarioSpec spec;
  spec.kind = kind;
  spec.n_agents = agents;
  spec.noise_sigma = 0.0;
  spec.duration = 30;
  spec.seed = seed;
  return spec;
}

// Whole episode as one window so every frame has positions and displacements.
trajdata::TrajectoryWindow whole(const GeneratedScene& g, std::size_t duration) {
  const auto w = trajdata::build_windows(g.scene, duration - 1, 1);
  REQUIRE(w.size() == 1);
  return w.front();
}

social::AttentionMatrix attention_at(const trajdata::TrajectoryWindow& w,
                                     const trajdata::DisplacementField& u, std::size_t t) {
  const std::size_t n = w.num_agents();
  return social::ssa_matrix(std::span<const Vec2>(&w.positions[t * n], n),
                            std::span<const Vec2>(&u.u[t * n], n), {}, t);
}

}  // namespace

TEST_SUITE("synth") {
  TEST_CASE("head-on pairs attend to each other before they meet") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto g = generate(clean(ScenarioKind::head_on, 2, seed));
      const auto w = whole(g, 30);
      const auto u = trajdata::displacements(w);
      REQUIRE(g.event_frames.size() == 1);
      for (std::size_t t = 0; t < g.event_frames[0]; ++t) {
        const auto a = attention_at(w, u, t);
        CHECK(a.raw.at(0, 1) > 0.0);
        CHECK(a.raw.at(1, 0) > 0.0);
      }
    }
  }

  TEST_CASE("receding pairs never attend") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto w = whole(generate(clean(ScenarioKind::receding, 2, seed)), 30);
      const auto u = trajdata::displacements(w);
      for (std::size_t t = 0; t < w.num_frames(); ++t) {
        const auto a = attention_at(w, u, t);
        CHECK(a.raw.at(0, 1) == 0.0);
        CHECK(a.raw.at(1, 0) == 0.0);
      }
    }
  }

  TEST_CASE("an overtaking follower attends more to the leader than the leader to it") {
    const auto g = generate(clean(ScenarioKind::overtake, 3, 2));
    const auto w = whole(g, 30);
    const auto u = trajdata::displacements(w);
    const std::size_t pass = g.event_frames[0];
    REQUIRE(pass > 2);
    for (std::size_t t = 1; t < pass; ++t) {
      const auto a = attention_at(w, u, t);
      CHECK(a.raw.at(1, 0) == a.raw.at(0, 1));
      CHECK(a.normalized.at(1, 0) > a.normalized.at(0, 1));
    }
  }

  TEST_CASE("gate walkers stay out of the wall") {
    ScenarioSpec spec = clean(ScenarioKind::obstacle_gate, 4, 3);
    spec.duration = 60;
    const auto g = generate(spec);
    REQUIRE(g.grid.has_value());
    CHECK(g.grid->depth == 1u);
    std::size_t wall = 0;
    for (float v : g.grid->data) wall += v > 0.5f;
    CHECK(wall > 0u);
    CHECK(wall < g.grid->data.size());
    std::set<std::int64_t> crossed;
    for (const auto& r : g.scene.records) {
      const Vec2 c = trajdata::world_to_cell(*g.grid, {r.x, r.y});
      if (c.x < 0 || c.y < 0 || c.x >= g.grid->width || c.y >= g.grid->height) continue;
      CHECK(g.grid->at(std::size_t(c.y), std::size_t(c.x), 0) == 0.0f);
      if (r.x > 0.5) crossed.insert(r.agent_id);
    }
    CHECK(crossed.size() == 4);
  }

  TEST_CASE("generated scenes round-trip through the text format") {
    for (ScenarioKind kind : {ScenarioKind::head_on, ScenarioKind::receding, ScenarioKind::overtake,
                              ScenarioKind::parallel, ScenarioKind::crossing, ScenarioKind::obstacle_gate}) {
      ScenarioSpec spec;
      spec.kind = kind;
      spec.n_agents = kind == ScenarioKind::overtake ? 3 : 2;
      spec.episodes = 2;
      const auto g = generate(spec);
      const auto back = trajdata::parse_trajectory_file(trajdata::format_trajectory_file(g.scene));
      REQUIRE(back.records.size() == g.scene.records.size());
      CHECK(back.records.size() == spec.n_agents * spec.duration * 2);
      for (std::size_t k = 0; k < back.records.size(); ++k) {
        CHECK(back.records[k].frame_id == g.scene.records[k].frame_id);
        CHECK(back.records[k].agent_id == g.scene.records[k].agent_id);
        CHECK(back.records[k].x == g.scene.records[k].x);
        CHECK(back.records[k].y == g.scene.records[k].y);
      }
    }
  }

  TEST_CASE("generation is reproducible from kind and seed") {
    for (double noise : {0.0, 0.01}) {
      ScenarioSpec spec = clean(ScenarioKind::crossing, 4, 9);
      spec.noise_sigma = noise;
      const auto a = generate(spec);
      const auto b = generate(spec);
      CHECK(trajdata::format_trajectory_file(a.scene) == trajdata::format_trajectory_file(b.scene));
      spec.seed = 10;
      CHECK(trajdata::format_trajectory_file(generate(spec).scene) !=
            trajdata::format_trajectory_file(a.scene));
    }
  }

  TEST_CASE("optional empty grid covers the scene") {
    ScenarioSpec spec = clean(ScenarioKind::head_on, 4);
    spec.emit_grid = true;
    const auto g = generate(spec);
    REQUIRE(g.grid.has_value());
    for (float v : g.grid->data) CHECK(v == 0.0f);
    for (const auto& r : g.scene.records) {
      const Vec2 c = trajdata::world_to_cell(*g.grid, {r.x, r.y});
      CHECK(c.x >= 0);
      CHECK(c.y >= 0);
      CHECK(c.x < double(g.grid->width));
      CHECK(c.y < double(g.grid->height));
    }
    spec.emit_grid = false;
    CHECK(!generate(spec).grid.has_value());
  }

  TEST_CASE("files land next to each other") {
    const auto dir = testsupport::scratch_dir("synth_write");
    ScenarioSpec spec = clean(ScenarioKind::parallel, 3);
    spec.emit_grid = true;
    spec.name = "lanes";
    write_scene(generate(spec), dir);
    CHECK(std::filesystem::exists(dir / "lanes.txt"));
    CHECK(std::filesystem::exists(dir / "lanes.ssag"));
  }

  TEST_CASE("invalid specs") {
    ScenarioSpec spec;
    spec.duration = 19;
    CHECK_THROWS_AS(generate(spec), InvalidArgument);
    spec = ScenarioSpec{};
    spec.speed_min = 0;
    CHECK_THROWS_AS(validate(spec), InvalidArgument);
    spec = ScenarioSpec{};
    spec.kind = ScenarioKind::overtake;
    spec.n_agents = 2;
    CHECK_THROWS_AS(validate(spec), InvalidArgument);
    CHECK(kind_from_string("obstacle_gate") == ScenarioKind::obstacle_gate);
    CHECK_THROWS_AS(kind_from_string("stampede"), InvalidArgument);
  }
}
