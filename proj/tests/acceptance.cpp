// Acceptance suite: one PASS/FAIL line per criterion. A criterion passes only
// if its checks hold and it finishes within its time budget.
//
// Usage: acceptance [AC1 AC2 ...]   (no arguments runs every criterion)

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "momenta/classification.hpp"
#include "momenta/dynamics.hpp"
#include "momenta/gradcheck.hpp"
#include "momenta/landscapes.hpp"
#include "momenta/neural_model.hpp"
#include "momenta/ode_solver.hpp"
#include "momenta/parallel.hpp"
#include "momenta/series.hpp"
#include "momenta/stability.hpp"
#include "momenta/trajectory.hpp"

using namespace momenta;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;  // failures first, then measurements

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      notes.insert(notes.begin(), "FAILED: " + what);
    }
  }
  void note(const std::string& s) { notes.push_back(s); }
};

std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

struct Criterion {
  std::string id;
  std::string title;
  double budget_s;
  std::function<Outcome()> run;
};

// ---------------------------------------------------------------------------

Outcome adjoint_gate() {
  Outcome o;
  double worst = 0.0;
  for (auto k : all_kinds())
    for (std::uint64_t seed : {0u, 1u, 2u}) {
      GradcheckOptions opts;  // d = 2, one hidden layer of 8, tol 1e-10, δ = 1e-5
      const auto rep = gradcheck(DynamicsSpec::defaults_for(k), seed, opts);
      const std::string tag = std::string(model_name(k)) + " seed " + std::to_string(seed);
      o.require(rep.param_count <= 200 && opts.state_dim <= 4, tag + " exceeds the size limits");
      o.require(rep.solver_ok, tag + " solver failure");
      o.require(rep.max_rel_err < 1e-3, tag + " max_rel_err " + num(rep.max_rel_err));
      worst = std::max(worst, rep.max_rel_err);
    }
  o.note("worst max_rel_err " + num(worst) + " over 6 formulations x 3 seeds");
  return o;
}

double first_entry(const FlowOutcome& f) {
  return f.first_time_within_radius.value_or(std::numeric_limits<double>::infinity());
}

Outcome trajectory_ordering() {
  Outcome o;
  bool adam_fastest_somewhere = false;
  for (const Landscape* land : {&rosenbrock(), &beale()}) {
    const auto exp = run_trajectory_experiment(*land, land->default_start);
    const auto& gf = exp.flow(FlowKind::GradientFlow);
    const auto& hb = exp.flow(FlowKind::HeavyBall);
    const auto& ad = exp.flow(FlowKind::Adam);
    o.require(ad.result.ok(), land->name + " adamode solve failed");
    o.require(ad.final_distance <= hb.final_distance, land->name + " adamode farther than hbode");
    o.require(ad.final_distance <= gf.final_distance, land->name + " adamode farther than gradient flow");
    if (first_entry(ad) < first_entry(hb) && first_entry(ad) < first_entry(gf)) adam_fastest_somewhere = true;
    o.note(land->name + " final distance gf/hb/adam " + num(gf.final_distance) + "/" + num(hb.final_distance) +
           "/" + num(ad.final_distance) + ", first entry " + num(first_entry(gf)) + "/" + num(first_entry(hb)) +
           "/" + num(first_entry(ad)));
  }
  o.require(adam_fastest_somewhere, "adamode is not first into the ball on either landscape");
  return o;
}

Outcome stability_ordering() {
  Outcome o;
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    StabilityConfig cfg;
    cfg.seed = seed;
    DuffingConfig dc;
    dc.seed = seed;
    o.require(cfg.activation == Activation::ReLU, "probe fields must use an unbounded activation");
    const auto r = run_stability_probe(duffing_series(dc), cfg);
    const auto& adam = r.model(DynamicsKind::Adam);
    const auto& hb = r.model(DynamicsKind::HeavyBall);
    const std::string tag = "seed " + std::to_string(seed);
    o.require(adam.status == SolveStatus::Success && !adam.blowup_at, tag + " adamnode did not reach t1");
    const double gap = hb.final_log10_norm() - adam.final_log10_norm();
    o.require(gap >= 3.0, tag + " log10 gap " + num(gap));
    o.note(tag + ": hbnode " + num(hb.final_log10_norm()) + ", adamnode " + num(adam.final_log10_norm()) +
           ", ghbnode " + num(r.model(DynamicsKind::GeneralizedHeavyBall).final_log10_norm()) + ", spread " +
           num(r.param_spread));
  }
  return o;
}

struct Counter {
  RhsFn inner;
  std::size_t calls = 0;
  RhsFn fn() {
    return [this](double t, std::span<const double> y, std::span<double> dy) {
      ++calls;
      inner(t, y, dy);
    };
  }
};

Outcome solver_battery() {
  Outcome o;
  auto nfe_exact = [&](const Counter& c, const SolveResult& r, const std::string& what) {
    o.require(c.calls == r.nfe, what + " nfe counter " + std::to_string(r.nfe) + " vs " + std::to_string(c.calls));
    o.require(r.nfe == 1 + 6 * (r.accepted_steps + r.rejected_steps), what + " nfe breaks the FSAL identity");
  };

  {  // y' = (1, 2t, 3t², 4t³): the 5th-order weights integrate quartics exactly
    Counter c{[](double t, std::span<const double>, std::span<double> dy) {
      dy[0] = 1.0;
      dy[1] = 2 * t;
      dy[2] = 3 * t * t;
      dy[3] = 4 * t * t * t;
    }};
    const double y0[] = {0, 0, 0, 0};
    const double ts[] = {0.5, 1.5, 2.0};
    const auto r = solve_dopri45(c.fn(), y0, 0.0, 2.0, IntegratorConfig::tight(1e-6), ts);
    o.require(r.ok(), "polynomial solve failed");
    double err = 0.0;
    for (std::size_t k = 0; k < 4; ++k) err = std::max(err, std::abs(r.y_final[k] - std::pow(2.0, double(k + 1))));
    o.require(err <= 1e-12, "polynomial error " + num(err));
    nfe_exact(c, r, "polynomial");
  }
  {
    Counter c{[](double, std::span<const double> y, std::span<double> dy) { dy[0] = y[0]; }};
    const double y0[] = {1.0};
    const double ts[] = {1.0};
    const auto r = solve_dopri45(c.fn(), y0, 0.0, 1.0, IntegratorConfig::tight(1e-12), ts);
    const double err = std::abs(r.y_final[0] - std::numbers::e);
    o.require(r.ok() && err <= 1e-8, "e^t error " + num(err));
    nfe_exact(c, r, "e^t");
    o.note("e^t err " + num(err));
  }
  {
    Counter c{[](double, std::span<const double> y, std::span<double> dy) {
      dy[0] = y[1];
      dy[1] = -y[0];
    }};
    const double y0[] = {1.0, 0.0};
    const double T = 2 * std::numbers::pi;
    const double ts[] = {T};
    const auto r = solve_dopri45(c.fn(), y0, 0.0, T, IntegratorConfig::tight(1e-10), ts);
    const double err = std::hypot(r.y_final[0] - 1.0, r.y_final[1]);
    o.require(r.ok() && err <= 1e-7, "oscillator return error " + num(err));
    nfe_exact(c, r, "oscillator");
    o.note("oscillator err " + num(err));
  }
  {
    std::vector<double> errs;
    for (std::size_t n : {10, 20, 40, 80}) {
      Counter c{[](double, std::span<const double> y, std::span<double> dy) { dy[0] = y[0]; }};
      const double y0[] = {1.0};
      const double ts[] = {1.0};
      const auto r = solve_rk4(c.fn(), y0, 0.0, 1.0, n, ts);
      o.require(r.nfe == 4 * n && c.calls == r.nfe, "rk4 nfe with n=" + std::to_string(n));
      errs.push_back(std::abs(r.y_final[0] - std::numbers::e));
    }
    std::string ratios;
    for (std::size_t i = 1; i < errs.size(); ++i) {
      const double ratio = errs[i - 1] / errs[i];
      o.require(ratio >= 14.0 && ratio <= 18.0, "rk4 ratio " + num(ratio));
      ratios += (i > 1 ? "," : "") + num(ratio);
    }
    o.note("rk4 ratios " + ratios);
  }
  return o;
}

Outcome dynamics_invariants() {
  Outcome o;
  {
    const auto spec = DynamicsSpec::adam_node(AdamParams{}, InitialMoments{0.0, 0.0});
    double floor = 0.0;
    for (std::uint64_t trial = 0; trial < 20; ++trial) {
      FieldNet field = init_field_net(field_shape_for(spec, 2, {16}), 100 + trial);
      ParamVec p = field.params();
      std::mt19937_64 rng(trial);
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      for (double& x : p) x += 0.5 * u(rng);
      field.set_params(p);
      const NeuralOde model(spec, field, 2);
      const double h0[] = {u(rng), u(rng)};
      std::vector<double> ts;
      for (int k = 1; k <= 100; ++k) ts.push_back(0.1 * k);
      const auto r =
          solve_dopri45(model.rhs_fn(), model.initial_state(h0, 1), 0.0, 10.0, IntegratorConfig::tight(1e-8), ts);
      o.require(r.ok(), "v trial " + std::to_string(trial) + " solve failed");
      for (const auto& z : r.states) floor = std::min({floor, z[4], z[5]});
    }
    o.require(floor >= -1e-6, "v floor " + num(floor));
    o.note("v floor " + num(floor));
  }
  {
    const double bound = 0.25;
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto spec = DynamicsSpec::generalized_heavy_ball({}, bound);
      FieldNet field = init_field_net(field_shape_for(spec, 3, {16}), seed);
      ParamVec p = field.params();
      for (double& x : p) x *= 4.0;
      field.set_params(p);
      const NeuralOde model(spec, field, 3);
      std::mt19937_64 rng(seed);
      std::normal_distribution<double> n(0.0, 3.0);
      StateVec z0(6);
      for (double& x : z0) x = n(rng);
      RhsFn rhs = [&](double t, std::span<const double> z, std::span<double> dz) {
        model.rhs(t, z, dz);
        for (std::size_t i = 0; i < 3; ++i) worst = std::max(worst, std::abs(dz[i]));
      };
      const double ts[] = {30.0};
      o.require(solve_dopri45(rhs, z0, 0.0, 30.0, {}, ts).ok(), "ghb solve failed");
    }
    o.require(worst <= bound, "ghb |dh/dt| reached " + num(worst));
    o.note("ghb max |dh/dt| " + num(worst) + " (bound " + num(bound) + ")");
  }
  {
    const AdamParams flow{0.9, 0.99, 1e-5};
    const GradFn quad = [](std::span<const double> x, std::span<double> g) { std::copy(x.begin(), x.end(), g.begin()); };
    const double T = 2.0;
    const double y0[] = {1.0, 0.0, 1.0};
    const double ts[] = {T};
    const auto ref = solve_dopri45(adam_flow(quad, flow), y0, 0.0, T, IntegratorConfig::tight(1e-12), ts);
    std::vector<double> errs;
    for (double s : {1e-2, 1e-3, 1e-4}) {
      const AdamParams disc{1 - s * (1 - flow.alpha), 1 - s * (1 - flow.beta), flow.epsilon};
      AdamIterate it{{1.0}, {0.0}, {1.0}};
      for (long k = 0; k < std::lround(T / s); ++k) it = discrete_adam_step(it, quad, s, disc);
      errs.push_back(std::abs(it.x[0] - ref.y_final[0]) + std::abs(it.m[0] - ref.y_final[1]) +
                     std::abs(it.v[0] - ref.y_final[2]));
    }
    o.require(errs[0] > errs[1] && errs[1] > errs[2], "continuous-limit error not monotone in s");
    o.note("discrete-vs-flow error " + num(errs[0]) + " > " + num(errs[1]) + " > " + num(errs[2]));
  }
  return o;
}

Outcome efficacy_direction() {
  Outcome o;
  struct Cell {
    DynamicsKind kind;
    std::uint64_t seed;
    TrainResult result;
  };
  std::vector<Cell> cells;
  for (std::uint64_t seed : {0u, 1u, 2u})
    for (auto k : {DynamicsKind::Adam, DynamicsKind::Vanilla}) cells.push_back({k, seed, {}});
  parallel_for(cells.size(), [&](std::size_t i) {
    TrainConfig cfg;
    cfg.model = DynamicsSpec::defaults_for(cells[i].kind);
    cfg.seed = cells[i].seed;
    cfg.data.seed = cells[i].seed;
    cells[i].result = run_classification(cfg);
  });
  int wins = 0;
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    const TrainResult* adam = nullptr;
    const TrainResult* node = nullptr;
    for (const auto& c : cells)
      if (c.seed == seed) (c.kind == DynamicsKind::Adam ? adam : node) = &c.result;
    const std::string tag = "seed " + std::to_string(seed);
    o.require(!adam->diverged && !adam->records.empty(), tag + " adamnode training diverged");
    o.require(!node->diverged && !node->records.empty(), tag + " node training diverged");
    if (adam->records.empty() || node->records.empty()) continue;
    const auto& a = adam->records.back();
    const auto& n = node->records.back();
    o.require(a.test_accuracy >= 0.95, tag + " adamnode accuracy " + num(a.test_accuracy));
    if (a.efficacy_fwd > n.efficacy_fwd) ++wins;
    o.note(tag + ": adamnode acc " + num(a.test_accuracy) + " eff " + num(a.efficacy_fwd) + ", node acc " +
           num(n.test_accuracy) + " eff " + num(n.efficacy_fwd));
  }
  o.require(wins >= 2, "adamnode efficacy higher on only " + std::to_string(wins) + " of 3 seeds");
  return o;
}

// ---------------------------------------------------------------------------
// CLI contracts

const fs::path kWork = fs::temp_directory_path() / "momenta_acceptance";

int cli(const std::string& args) {
  const std::string cmd = std::string(MOMENTA_CLI_PATH) + " " + args + " > " + (kWork / "cli.log").string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string first_data_header(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#') return line;
  return "";
}

Outcome format_contracts() {
  Outcome o;
  fs::remove_all(kWork);
  fs::create_directories(kWork);
  const auto dir = [](const std::string& name) { return (kWork / name).string(); };
  std::ofstream(kWork / "tiny.json") << R"({"n_points": 64, "state_dim": 2, "hidden": [8], "batch": 16})";
  std::ofstream(kWork / "unstable.json") << R"({"n_points": 200})";
  std::ofstream(kWork / "unknown.json") << R"({"temperature": 1})";
  std::ofstream(kWork / "empty.csv") << "t,x,y,dynamics\n";

  struct Run {
    std::string args, a, b;
  };
  const std::string tiny = (kWork / "tiny.json").string();
  const std::vector<Run> runs = {
      {"trajectory --landscape rosenbrock --out ", dir("tr_a"), dir("tr_b")},
      {"trajectory --landscape beale --out ", dir("tb_a"), dir("tb_b")},
      {"stability --seed 1 --out ", dir("st_a"), dir("st_b")},
      {"train --epochs 2 --seed 3 --config " + tiny + " --out ", dir("tn_a"), dir("tn_b")},
  };
  for (const auto& r : runs) {
    o.require(cli(r.args + r.a) == 0, "'" + r.args + "' failed");
    o.require(cli(r.args + r.b) == 0, "'" + r.args + "' failed on repeat");
  }
  const std::vector<std::pair<std::string, std::string>> files = {
      {"tr", "trajectory.csv"}, {"tr", "trajectory.svg"}, {"tb", "trajectory.csv"}, {"tb", "trajectory.svg"},
      {"st", "stability.csv"},  {"st", "stability.svg"},  {"tn", "efficacy.csv"},   {"tn", "efficacy.svg"},
      {"tn", "loss.svg"},
  };
  for (const auto& [run, file] : files) {
    const auto a = slurp(kWork / (run + "_a") / file), b = slurp(kWork / (run + "_b") / file);
    o.require(!a.empty() && a == b, run + "/" + file + " differs between runs");
  }
  o.require(first_data_header(slurp(kWork / "tr_a/trajectory.csv")) == "t,x,y,dynamics", "trajectory header");
  o.require(first_data_header(slurp(kWork / "st_a/stability.csv")) == "t,log10_norm,model", "stability header");
  o.require(first_data_header(slurp(kWork / "tn_a/efficacy.csv")) ==
                "epoch,train_loss,test_accuracy,forward_nfe,backward_nfe,efficacy_fwd,efficacy_bwd",
            "efficacy header");
  for (const auto& d : {"tr_a", "st_a", "tn_a"})
    o.require(fs::exists(kWork / d / "config.resolved.json"), std::string(d) + " lacks config.resolved.json");

  const std::string traj_csv = (kWork / "tr_a/trajectory.csv").string();
  o.require(cli("plot --in " + traj_csv + " --kind trajectory --out " + dir("p/a.svg")) == 0, "plot failed");
  o.require(cli("plot --in " + traj_csv + " --kind trajectory --out " + dir("p/b.svg")) == 0, "plot failed");
  o.require(slurp(kWork / "p/a.svg") == slurp(kWork / "p/b.svg"), "plot output differs between runs");
  o.require(slurp(kWork / "p/a.svg") == slurp(kWork / "tr_a/trajectory.svg"), "plot differs from the run's figure");

  struct ExitCase {
    std::string args;
    int code;
  };
  const std::vector<ExitCase> cases = {
      {"gradcheck --out " + dir("g0"), 0},
      {"gradcheck --tol 0 --out " + dir("g1"), 1},
      {"frobnicate", 2},
      {"trajectory --landscape himmelblau --out " + dir("e1"), 2},
      {"trajectory --config " + (kWork / "unknown.json").string() + " --out " + dir("e2"), 2},
      {"train --model lstm --out " + dir("e3"), 2},
      {"stability --probe csv:/nonexistent.csv --out " + dir("e4"), 2},
      {"plot --in " + traj_csv + " --kind stability --out " + dir("e5/x.svg"), 2},
      {"plot --in " + (kWork / "empty.csv").string() + " --kind trajectory --out " + dir("e6/x.svg"), 2},
      {"trajectory --x0 1e200,1e200 --T 5 --out " + dir("e7"), 3},
      {"train --model sonode --lr 1000 --epochs 3 --config " + (kWork / "unstable.json").string() + " --out " +
           dir("e8"),
       4},
  };
  for (const auto& c : cases) {
    const int got = cli(c.args);
    o.require(got == c.code, "'" + c.args + "' exited " + std::to_string(got) + ", expected " + std::to_string(c.code));
  }
  o.require(first_data_header(slurp(kWork / "e8/efficacy.csv")).rfind("epoch,", 0) == 0,
            "diverged training left no efficacy table");
  o.note(std::to_string(files.size()) + " files compared, " + std::to_string(cases.size()) + " exit codes checked");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {"AC1", "adjoint gradients match finite differences for all six formulations", 300, adjoint_gate},
      {"AC2", "adaptive flow reaches the minimizer closer and faster on both landscapes", 60, trajectory_ordering},
      {"AC3", "adamnode hidden-state norm stays >=3 decades below hbnode", 120, stability_ordering},
      {"AC4", "solver battery", 30, solver_battery},
      {"AC5", "dynamics invariants", 60, dynamics_invariants},
      {"AC6", "adamnode accuracy and efficacy on two spirals", 900, efficacy_direction},
      {"AC7", "determinism, headers and exit codes", 60, format_contracts},
  };
  std::set<std::string> only(argv + 1, argv + argc);
  int failures = 0;
  for (const auto& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.require(secs <= c.budget_s, "took " + num(secs) + " s, budget " + num(c.budget_s) + " s");
    std::printf("%s %s  %s  [%.1f s / %.0f s]\n", c.id.c_str(), o.pass ? "PASS" : "FAIL", c.title.c_str(), secs,
                c.budget_s);
    for (const auto& n : o.notes) std::printf("    %s\n", n.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
