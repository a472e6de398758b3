// Acceptance runner: one PASS/FAIL/SKIP line per criterion. Pass criterion
// numbers as arguments to run a subset.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "ssagcn/errors.hpp"
#include "ssagcn/eval.hpp"
#include "ssagcn/model.hpp"
#include "ssagcn/numerics/gaussian.hpp"
#include "ssagcn/protocol.hpp"
#include "ssagcn/selfcheck.hpp"
#include "ssagcn/social.hpp"
#include "ssagcn/synth.hpp"
#include "ssagcn/training.hpp"

namespace fs = std::filesystem;
using namespace ssagcn;

namespace {

enum class Status { pass, fail, skip };

struct Outcome {
  Status status = Status::fail;
  std::string detail;
};

Outcome verdict(bool ok, std::string detail) { return {ok ? Status::pass : Status::fail, std::move(detail)}; }

Vec2 random_point(numerics::Rng& rng, double extent) {
  return {rng.uniform(-extent, extent), rng.uniform(-extent, extent)};
}

Vec2 rotate(const Vec2& v, double a) {
  return {std::cos(a) * v.x - std::sin(a) * v.y, std::sin(a) * v.x + std::cos(a) * v.y};
}

double max_offdiag_diff(const numerics::Tensor& a, const numerics::Tensor& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.dim(0); ++i)
    for (std::size_t j = 0; j < a.dim(1); ++j)
      if (i != j) worst = std::max(worst, std::abs(a.at(i, j) - b.at(i, j)));
  return worst;
}

// ------------------------------------------------------------------- 1

Outcome ssa_oracle() {
  numerics::Rng rng(1);
  const social::SsaConfig cfg;
  double worst = 0.0;
  std::size_t receding = 0, receding_nonzero = 0;
  for (int k = 0; k < 10000; ++k) {
    const Vec2 pi = random_point(rng, 8), pj = random_point(rng, 8);
    const Vec2 ui = random_point(rng, 1.5), uj = random_point(rng, 1.5);
    const auto g = social::pair_geometry(pi, ui, pj, uj, cfg);
    const double angle_form = social::ssa_weight(g, cfg);
    worst = std::max(worst, std::abs(angle_form - social::ssa_weight_closed_form(g)));
    const Vec2 du = ui - uj, r = pj - pi;
    if (du.x * r.x + du.y * r.y < 0.0) {
      ++receding;
      receding_nonzero += angle_form != 0.0;
    }
  }
  double asym = 0.0;
  for (int k = 0; k < 200; ++k) {
    std::vector<Vec2> p, u;
    for (int i = 0; i < 6; ++i) {
      p.push_back(random_point(rng, 6));
      u.push_back(random_point(rng, 1));
    }
    const auto m = social::ssa_matrix(p, u, cfg).raw;
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = 0; j < 6; ++j) asym = std::max(asym, std::abs(m.at(i, j) - m.at(j, i)));
  }
  return verdict(worst < 1e-9 && asym == 0.0 && receding_nonzero == 0,
                 fmt::format("max |angle-closed|={:.2e}, max asymmetry={:.1e}, receding pairs {} with {} nonzero",
                             worst, asym, receding, receding_nonzero));
}

// ------------------------------------------------------------------- 2

Outcome invariance() {
  numerics::Rng rng(2);
  const social::SsaConfig cfg;
  double worst[4] = {0, 0, 0, 0};
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng.below(7);
    std::vector<Vec2> p, u;
    for (std::size_t i = 0; i < n; ++i) {
      p.push_back(random_point(rng, 6));
      u.push_back(random_point(rng, 1));
    }
    const auto base = social::ssa_matrix(p, u, cfg).raw;
    const Vec2 shift = random_point(rng, 50), drift = random_point(rng, 2);
    const double angle = rng.uniform(-std::numbers::pi, std::numbers::pi), s = rng.uniform(0.1, 10);
    auto moved = p, rp = p, ru = u, du = u, sp = p, su = u;
    for (std::size_t i = 0; i < n; ++i) {
      moved[i] += shift;
      rp[i] = rotate(p[i], angle);
      ru[i] = rotate(u[i], angle);
      du[i] += drift;
      sp[i] = s * p[i];
      su[i] = s * u[i];
    }
    worst[0] = std::max(worst[0], max_offdiag_diff(base, social::ssa_matrix(moved, u, cfg).raw));
    worst[1] = std::max(worst[1], max_offdiag_diff(base, social::ssa_matrix(rp, ru, cfg).raw));
    worst[2] = std::max(worst[2], max_offdiag_diff(base, social::ssa_matrix(p, du, cfg).raw));
    worst[3] = std::max(worst[3], max_offdiag_diff(base, social::ssa_matrix(sp, su, cfg).raw));
  }
  const double all = *std::max_element(std::begin(worst), std::end(worst));
  return verdict(all < 1e-9, fmt::format("translation {:.1e}, rotation {:.1e}, velocity offset {:.1e}, scale {:.1e}",
                                         worst[0], worst[1], worst[2], worst[3]));
}

// ------------------------------------------------------------------- 3

Outcome gradient_fidelity() {
  const auto r = selfcheck::end_to_end_grad_check(model::Variant::full, 1, selfcheck::kEndToEndStep);
  return verdict(r.max_rel_error < selfcheck::kEndToEndTolerance,
                 fmt::format("max relative error {:.3e} over {} coordinates ({} skipped at kinks)",
                             r.max_rel_error, r.coordinates, r.skipped));
}

// ------------------------------------------------------------------- 4

Outcome sampling() {
  const std::vector<numerics::GaussianParams> cases{
      {2.0, -1.5, 0.5, 0.8, 0.0}, {1.0, 3.0, 0.3, 0.6, 0.9}, {-2.5, 1.2, 0.7, 0.4, -0.6}};
  numerics::Rng rng(4);
  const double n = 1e5;
  double worst_mu = 0, worst_sigma = 0, worst_rho = 0;
  for (const auto& g : cases) {
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (int k = 0; k < 100000; ++k) {
      const auto [x, y] = numerics::sample_bivariate(g, rng);
      sx += x;
      sy += y;
      sxx += x * x;
      syy += y * y;
      sxy += x * y;
    }
    const double mx = sx / n, my = sy / n;
    const double vx = sxx / n - mx * mx, vy = syy / n - my * my, cxy = sxy / n - mx * my;
    worst_mu = std::max({worst_mu, std::abs(mx - g.mu_x) / std::abs(g.mu_x), std::abs(my - g.mu_y) / std::abs(g.mu_y)});
    worst_sigma = std::max({worst_sigma, std::abs(std::sqrt(vx) - g.sigma_x) / g.sigma_x,
                            std::abs(std::sqrt(vy) - g.sigma_y) / g.sigma_y});
    worst_rho = std::max(worst_rho, std::abs(cxy / std::sqrt(vx * vy) - g.rho));
  }
  return verdict(worst_mu < 0.01 && worst_sigma < 0.02 && worst_rho < 0.02,
                 fmt::format("mu rel {:.4f}, sigma rel {:.4f}, rho abs {:.4f}", worst_mu, worst_sigma, worst_rho));
}

// ------------------------------------------------------------------- 5

Outcome parameter_count() {
  model::ModelConfig c;
  c.variant = model::Variant::wo_sen;
  const std::size_t n = model::init_params(c, 0).num_parameters();
  return verdict(n >= 7200 && n <= 7900, fmt::format("{} learnable parameters", n));
}

// ------------------------------------------------------------------- 6

Outcome overfit() {
  trajdata::TrajectoryWindow w;
  w.t_obs = 8;
  w.t_pred = 12;
  w.agent_ids = {1};
  w.source = "cv";
  for (int t = 0; t < 20; ++t) w.positions.push_back({0.4 * t, 0.1 * t});
  trajdata::Dataset data;
  data.windows = {w};
  data.scene_names = {"cv"};
  trajdata::SceneGrid grid;
  grid.height = grid.width = 40;
  grid.depth = 1;
  grid.data.assign(1600, 0.0f);
  grid.world_to_grid = trajdata::AxisAlignedTransform{4, 4, 10, 10}.matrix();
  data.grids["cv"] = grid;

  training::TrainConfig cfg;
  cfg.epochs = 500;
  const auto ckpt = training::train(data, cfg);
  eval::EvalOptions opts;
  opts.k = 1;
  const double ade = eval::evaluate(ckpt, data, opts, "cv").ade;
  std::size_t rises = 0;
  const auto& nll = ckpt.epoch_nll;
  for (std::size_t e = 50; e < nll.size(); ++e) {
    double now = 0, before = 0;
    for (std::size_t k = e - 49; k <= e; ++k) now += nll[k];
    for (std::size_t k = e - 50; k < e; ++k) before += nll[k];
    rises += now > before;
  }
  return verdict(ade < 0.05 && rises == 0,
                 fmt::format("mode ADE {:.4f} (needs < 0.05), NLL {:.3f} -> {:.3f}, {} moving-average rises",
                             ade, nll.front(), nll.back(), rises));
}

// ------------------------------------------------------------------- 7

trajdata::Dataset interaction_corpus() {
  std::vector<trajdata::Scene> scenes;
  struct Part {
    synth::ScenarioKind kind;
    std::size_t agents, episodes, duration;
  };
  std::uint64_t seed = 11;
  for (const Part& part : {Part{synth::ScenarioKind::head_on, 2, 3, 42}, Part{synth::ScenarioKind::receding, 2, 3, 42},
                           Part{synth::ScenarioKind::overtake, 3, 2, 50}}) {
    synth::ScenarioSpec spec;
    spec.kind = part.kind;
    spec.n_agents = part.agents;
    spec.episodes = part.episodes;
    spec.duration = part.duration;
    spec.avoidance = true;
    spec.emit_grid = true;
    spec.seed = seed++;
    const auto g = synth::generate(spec);
    scenes.push_back({g.scene, g.grid});
  }
  return trajdata::make_dataset(scenes, {});
}

Outcome behavioral_separation() {
  const auto data = interaction_corpus();
  eval::EvalOptions opts;
  opts.k = 1;
  const double linear = eval::evaluate(eval::linear_predictor(), data.windows, data, opts, "all").collision_pct;
  double col[2] = {0, 0}, ade[2] = {0, 0};
  const model::Variant variants[2] = {model::Variant::full, model::Variant::wo_ssa};
  for (int v = 0; v < 2; ++v) {
    training::TrainConfig cfg;
    cfg.epochs = 50;
    cfg.seed = 5;
    cfg.grad_clip = 1.0;
    cfg.model.variant = variants[v];
    try {
      const auto ckpt = training::train(data, cfg);
      const auto r = eval::evaluate(ckpt, data, opts, "all");
      col[v] = r.collision_pct;
      ade[v] = r.ade;
    } catch (const Error& e) {
      return verdict(false, fmt::format("{} training failed: {}", model::to_string(variants[v]), e.what()));
    }
  }
  return verdict(col[0] < linear && col[1] > col[0],
                 fmt::format("{} windows; collision_pct full {:.3f}, wo-ssa {:.3f}, linear {:.3f}; "
                             "mode ADE full {:.3f}, wo-ssa {:.3f}",
                             data.windows.size(), col[0], col[1], linear, ade[0], ade[1]));
}

// ------------------------------------------------------------------- 8

double dist(const Vec2& a, const Vec2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

Outcome metric_oracles() {
  numerics::Rng rng(8);
  double worst = 0.0;
  for (int c = 0; c < 1000; ++c) {
    const std::size_t k = 1 + rng.below(8), t = 1 + rng.below(14), n = 1 + rng.below(6);
    model::TrajectorySet samples(k, t, n), gt(1, t, n);
    for (auto& p : samples.points) p = random_point(rng, 2);
    for (auto& p : gt.points) p = random_point(rng, 2);
    double ade_sum = 0, fde_sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double best_ade = INFINITY, best_fde = INFINITY;
      for (std::size_t s = 0; s < k; ++s) {
        double total = 0;
        for (std::size_t tau = 0; tau < t; ++tau) total += dist(samples.at(s, tau, i), gt.at(0, tau, i));
        const double a = total / double(t), f = dist(samples.at(s, t - 1, i), gt.at(0, t - 1, i));
        if (s == 0) {
          worst = std::max(worst, std::abs(eval::ade(eval::agent_track(samples, 0, i), eval::agent_track(gt, 0, i)) - a));
          worst = std::max(worst, std::abs(eval::fde(eval::agent_track(samples, 0, i), eval::agent_track(gt, 0, i)) - f));
        }
        best_ade = std::min(best_ade, a);
        best_fde = std::min(best_fde, f);
      }
      ade_sum += best_ade;
      fde_sum += best_fde;
    }
    const auto bk = eval::best_of_k(samples, gt);
    worst = std::max({worst, std::abs(bk.ade - ade_sum / double(n)), std::abs(bk.fde - fde_sum / double(n))});

    const double threshold = rng.uniform(0.05, 1.5);
    std::size_t pairs = 0, hits = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        ++pairs;
        double closest = INFINITY;
        for (std::size_t tau = 0; tau < t; ++tau) closest = std::min(closest, dist(samples.at(0, tau, i), samples.at(0, tau, j)));
        hits += closest < threshold;
      }
    const double expected = pairs ? 100.0 * double(hits) / double(pairs) : 0.0;
    worst = std::max(worst, std::abs(eval::collision_pct(samples, threshold) - expected));
  }
  return verdict(worst < 1e-12, fmt::format("max deviation {:.1e} over 1000 cases", worst));
}

// ------------------------------------------------------------------- 9

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string drop_runtime(const std::string& csv) {
  const auto header_end = csv.find('\n');
  const auto header = csv.substr(0, header_end);
  const auto col = std::count(header.begin(), header.begin() + long(header.find("runtime_s")), ',');
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
    if (std::size_t(col) < fields.size()) fields.erase(fields.begin() + col);
    for (const auto& f : fields) out += f + ",";
    out += "\n";
  }
  return out;
}

Outcome cli_determinism() {
  const fs::path root = fs::temp_directory_path() / "ssagcn_acceptance_determinism";
  fs::remove_all(root);
  const std::vector<std::string> steps{
      "synth --kind overtake --agents 3 --episodes 2 --duration 30 --seed 3 --out data",
      "train --data data --epochs 5 --seed 7 --log log.csv --out model.ssac",
      "eval --ckpt model.ssac --k 20 --seed 2 --out eval.csv",
      "eval --ckpt model.ssac --k 1 --format json --out eval.json",
      "predict --ckpt model.ssac --k 3 --seed 4 --out pred.csv",
      "ablate --data data --axis theta --values 0.05 0.1 --epochs 2 --seed 1 --out sweep.csv",
      "plot --window data/overtake.txt --adjacency --ckpt model.ssac --k 5 --seed 1 --out plot.svg",
  };
  std::vector<std::string> runs[2];
  for (int r = 0; r < 2; ++r) {
    const fs::path dir = root / std::to_string(r);
    fs::create_directories(dir);
    for (const auto& step : steps) {
      const std::string cmd = "cd '" + dir.string() + "' && '" SSAGCN_CLI_PATH "' " + step + " > /dev/null 2>&1";
      const int status = std::system(cmd.c_str());
      if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
        return verdict(false, fmt::format("'{}' exited with status {}", step, WEXITSTATUS(status)));
      }
    }
    for (const char* file : {"data/overtake.txt", "data/overtake.ssag", "model.ssac", "log.csv", "pred.csv", "plot.svg"})
      runs[r].push_back(slurp(dir / file));
    runs[r].push_back(drop_runtime(slurp(dir / "eval.csv")));
    runs[r].push_back(drop_runtime(slurp(dir / "sweep.csv")));
    std::string json = slurp(dir / "eval.json");
    const auto at = json.find("\"runtime_s\"");
    if (at != std::string::npos) json.erase(at, json.find('\n', at) - at);
    runs[r].push_back(json);
  }
  std::size_t differing = 0;
  for (std::size_t k = 0; k < runs[0].size(); ++k) differing += runs[0][k] != runs[1][k] || runs[0][k].empty();
  fs::remove_all(root);
  return verdict(differing == 0, fmt::format("{} commands, {} artifacts compared, {} differ", steps.size(),
                                             runs[0].size(), differing));
}

// ------------------------------------------------------------------- 10

Outcome extended_run() {
  const char* dir = std::getenv("SSAGCN_ETH_UCY_DIR");
  if (dir == nullptr) return {Status::skip, "set SSAGCN_ETH_UCY_DIR to the processed ETH/UCY scene files to run"};
  const auto data = trajdata::load_dataset({dir}, {});
  training::TrainConfig cfg;
  cfg.epochs = 200;
  cfg.lr = 0.001;
  cfg.model.ssa.theta = 0.10;
  const bool grids = data.grids.size() == data.scene_names.size();
  cfg.model.variant = grids ? model::Variant::full : model::Variant::wo_sen;
  if (grids) cfg.model.scene_depth = data.grids.begin()->second.depth;
  eval::EvalOptions opts;
  opts.k = 20;
  const auto result = training::leave_one_out(data, cfg, opts);
  return {Status::pass, fmt::format("{} variant, K=20 AVG ADE/FDE {:.3f} / {:.3f} against target 0.13 / 0.24 "
                                    "(ratio {:.2f} / {:.2f}, informative only)",
                                    model::to_string(cfg.model.variant), result.best_avg.ade, result.best_avg.fde,
                                    result.best_avg.ade / 0.13, result.best_avg.fde / 0.24)};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;  // 0 = unbounded
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "SSA oracle equivalence", 5, ssa_oracle},
      {2, "SSA invariance suite", 5, invariance},
      {3, "end-to-end gradient fidelity", 60, gradient_fidelity},
      {4, "Gaussian sampling statistics", 10, sampling},
      {5, "parameter count", 0, parameter_count},
      {6, "single-window overfit", 120, overfit},
      {7, "behavioral separation", 900, behavioral_separation},
      {8, "metric oracles", 5, metric_oracles},
      {9, "CLI determinism", 0, cli_determinism},
      {10, "extended public-data run", 0, extended_run},
  };
  std::set<int> wanted;
  for (int k = 1; k < argc; ++k) wanted.insert(std::atoi(argv[k]));

  int failures = 0;
  for (const auto& c : criteria) {
    if (!wanted.empty() && !wanted.contains(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {Status::fail, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (o.status == Status::pass && c.budget_s > 0 && secs >= c.budget_s) {
      o.status = Status::fail;
      o.detail += fmt::format("; over the {:.0f} s budget", c.budget_s);
    }
    const char* tag = o.status == Status::pass ? "PASS" : o.status == Status::fail ? "FAIL" : "SKIP";
    failures += o.status == Status::fail;
    std::printf("%s criterion %d: %s: %s [%.2f s]\n", tag, c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
