#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "ssagcn/training.hpp"
#include "support.hpp"

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run cli(const fs::path& dir, const std::string& args) {
  const std::string cmd = "cd '" + dir.string() + "' && '" SSAGCN_CLI_PATH "' " + args +
                          " > stdout.txt 2> stderr.txt";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(dir / "stdout.txt");
  r.err = slurp(dir / "stderr.txt");
  return r;
}

std::string without_runtime(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + "\n";
  return out;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("usage errors exit 2 with one machine-readable line") {
    const auto dir = testsupport::scratch_dir("cli_usage");
    Run r = cli(dir, "");
    CHECK(r.code == 2);
    r = cli(dir, "train --data x --bogus");
    CHECK(r.code == 2);
    CHECK(r.err.rfind("error: code=usage msg=", 0) == 0);
    CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
    CHECK(cli(dir, "train --data x --variant none").code == 2);
    CHECK(cli(dir, "--help").code == 0);
  }

  TEST_CASE("input failures have distinct exit codes") {
    const auto dir = testsupport::scratch_dir("cli_errors");
    CHECK(cli(dir, "train --data missing/").code == 3);
    CHECK(cli(dir, "eval --ckpt missing.ssac").code == 3);

    std::ofstream(dir / "bad.txt") << "0 1 0 0\n10 1 zero 0\n";
    Run r = cli(dir, "ingest --data bad.txt");
    CHECK(r.code == 5);
    CHECK(r.err.find("code=parse_error") != std::string::npos);

    REQUIRE(cli(dir, "synth --kind receding --no-grid --out plain").code == 0);
    r = cli(dir, "train --data plain --epochs 1");
    CHECK(r.code == 7);
    CHECK(r.err.find("code=missing_scene") != std::string::npos);

    REQUIRE(cli(dir, "train --data plain --epochs 1 --variant wo-sen --out m.ssac").code == 0);
    std::string bytes = slurp(dir / "m.ssac");
    bytes[4] = 9;
    std::ofstream(dir / "future.ssac", std::ios::binary) << bytes;
    r = cli(dir, "eval --ckpt future.ssac");
    CHECK(r.code == 4);
    CHECK(r.err.find("code=checkpoint_version") != std::string::npos);
  }

  TEST_CASE("synth, train and eval pipeline is reproducible") {
    const auto dir = testsupport::scratch_dir("cli_pipeline");
    REQUIRE(cli(dir, "synth --kind head_on --out d/").code == 0);
    CHECK(fs::exists(dir / "d" / "head_on.txt"));
    CHECK(fs::exists(dir / "d" / "head_on.ssag"));
    REQUIRE(cli(dir, "train --data d/ --epochs 50 --seed 7 --log log.csv").code == 0);
    const std::string first = slurp(dir / "out.ssac");
    const std::string log = slurp(dir / "log.csv");
    CHECK(std::count(log.begin(), log.end(), '\n') == 51);
    Run eval = cli(dir, "eval --ckpt out.ssac --k 20");
    REQUIRE(eval.code == 0);
    CHECK(eval.out.rfind("scene,K,ade,fde,collision_pct,n_windows,runtime_s\nhead_on,20,", 0) == 0);

    REQUIRE(cli(dir, "train --data d/ --epochs 50 --seed 7").code == 0);
    CHECK(slurp(dir / "out.ssac") == first);
    CHECK(without_runtime(cli(dir, "eval --ckpt out.ssac --k 20").out) == without_runtime(eval.out));
    const auto ckpt = ssagcn::training::decode_checkpoint(first);
    CHECK(ckpt.epoch_nll.size() == 50);

    Run json = cli(dir, "eval --ckpt out.ssac --k 1 --format json");
    CHECK(json.code == 0);
    CHECK(json.out.find("\"collision_rule\": \"mode\"") != std::string::npos);
    Run predict = cli(dir, "predict --ckpt out.ssac --k 3 --seed 2");
    CHECK(predict.code == 0);
    CHECK(predict.out == cli(dir, "predict --ckpt out.ssac --k 3 --seed 2").out);
  }

  TEST_CASE("gradcheck reports its error and passes") {
    const auto dir = testsupport::scratch_dir("cli_gradcheck");
    const Run r = cli(dir, "gradcheck --seed 1");
    CHECK(r.code == 0);
    CHECK(r.out.find("max_rel_error=") != std::string::npos);
  }

  TEST_CASE("plot draws one line per attention edge") {
    const auto dir = testsupport::scratch_dir("cli_plot");
    REQUIRE(cli(dir, "synth --kind overtake --agents 3 --duration 20 --out d").code == 0);
    const Run r = cli(dir, "plot --window d/overtake.txt --adjacency --out g.svg");
    REQUIRE(r.code == 0);
    const std::string svg = slurp(dir / "g.svg");
    CHECK(svg.rfind("<svg", 0) == 0);
    std::size_t edges = 0;
    for (auto pos = svg.find("ssa-edge"); pos != std::string::npos; pos = svg.find("ssa-edge", pos + 1)) ++edges;
    CHECK(edges > 0);
    CHECK(edges <= 6);
  }

  TEST_CASE("ingest and ablate emit reports") {
    const auto dir = testsupport::scratch_dir("cli_reports");
    REQUIRE(cli(dir, "synth --kind crossing --duration 21 --out d").code == 0);
    Run r = cli(dir, "ingest --data d");
    REQUIRE(r.code == 0);
    CHECK(r.out.find("crossing,") != std::string::npos);
    r = cli(dir, "ablate --data d --axis variant --values full wo-ssa --epochs 1 --out sweep.csv");
    REQUIRE(r.code == 0);
    const std::string csv = slurp(dir / "sweep.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  }
}
