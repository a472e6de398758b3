#include <fstream>

#include "doctest.h"
#include "ssagcn/dataset.hpp"
#include "ssagcn/errors.hpp"
#include "ssagcn/synth.hpp"
#include "support.hpp"

using namespace ssagcn;
using namespace ssagcn::trajdata;

namespace {

std::filesystem::path corpus_dir(const std::string& name) {
  const auto dir = testsupport::scratch_dir(name);
  synth::ScenarioSpec spec;
  spec.duration = 22;
  spec.kind = synth::ScenarioKind::head_on;
  spec.emit_grid = true;
  synth::write_scene(synth::generate(spec), dir);
  spec.kind = synth::ScenarioKind::parallel;
  spec.emit_grid = false;
  synth::write_scene(synth::generate(spec), dir);
  spec.kind = synth::ScenarioKind::receding;
  synth::write_scene(synth::generate(spec), dir);
  std::ofstream(dir / "notes.md") << "ignored\n";
  return dir;
}

}  // namespace

TEST_SUITE("dataset") {
  TEST_CASE("a directory loads every trajectory file with sibling grids") {
    const auto dir = corpus_dir("ds_dir");
    const Dataset data = load_dataset({dir}, {});
    CHECK(data.scene_names == std::vector<std::string>{"head_on", "parallel", "receding"});
    CHECK(data.windows.size() == 9);
    CHECK(data.grids.size() == 1);
    for (const auto& w : data.windows) {
      if (w.source == "head_on") CHECK(data.grid_for(w) != nullptr);
      else CHECK(data.grid_for(w) == nullptr);
    }
  }

  TEST_CASE("single files and window options") {
    const auto dir = corpus_dir("ds_file");
    const Dataset data = load_dataset({dir / "parallel.txt"}, {8, 12, 2});
    CHECK(data.scene_names == std::vector<std::string>{"parallel"});
    CHECK(data.windows.size() == 2);
    CHECK(data.windows[1].start_frame - data.windows[0].start_frame == 20);
    CHECK_THROWS_AS(load_dataset({dir / "missing.txt"}, {}), FileError);
  }

  TEST_CASE("scene selection keeps or drops whole scenes") {
    const Dataset data = load_dataset({corpus_dir("ds_select")}, {});
    const Dataset only = select_scenes(data, {"head_on"}, false);
    CHECK(only.scene_names == std::vector<std::string>{"head_on"});
    CHECK(only.windows.size() == 3);
    CHECK(only.grids.size() == 1);
    const Dataset rest = select_scenes(data, {"head_on"}, true);
    CHECK(rest.scene_names.size() == 2);
    CHECK(rest.grids.empty());
    for (const auto& w : rest.windows) CHECK(w.source != "head_on");
    CHECK_THROWS_AS(select_scenes(data, {"zara"}, false), InvalidArgument);
  }

  TEST_CASE("scene names must be unique") {
    synth::ScenarioSpec spec;
    const auto g = synth::generate(spec);
    CHECK_THROWS_AS(make_dataset({{g.scene, std::nullopt}, {g.scene, std::nullopt}}, {}), InvalidArgument);
  }
}
