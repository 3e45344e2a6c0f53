// momenta: command-line front end for the experiments and verification suites.
//
// Exit codes: 0 success, 1 verification failure, 2 usage/config error,
// 3 solver failure, 4 training divergence.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "momenta/classification.hpp"
#include "momenta/gradcheck.hpp"
#include "momenta/plots.hpp"
#include "momenta/stability.hpp"
#include "momenta/trajectory.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace momenta;

namespace {

enum ExitCode { kOk = 0, kVerificationFailed = 1, kUsage = 2, kSolverFailure = 3, kDiverged = 4 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Flag values as entered, kept only for flags that were actually given.
class FlagSet {
 public:
  template <typename T>
  CLI::Option* add(CLI::App* app, const std::string& flag, const std::string& key, T& target,
                   const std::string& help) {
    CLI::Option* opt = app->add_option(flag, target, help);
    entries_.push_back({opt, key, [&target](json& j, const std::string& k) { j[k] = target; }});
    return opt;
  }

  json given() const {
    json j = json::object();
    for (const auto& e : entries_)
      if (e.opt->count() > 0) e.store(j, e.key);
    return j;
  }

 private:
  struct Entry {
    CLI::Option* opt;
    std::string key;
    std::function<void(json&, const std::string&)> store;
  };
  std::vector<Entry> entries_;
};

json load_config_file(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw UsageError("config file " + path + " is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw UsageError("config file must hold a JSON object");
  return j;
}

/// defaults <- file <- flags. Unknown keys in the file are rejected.
json resolve(const json& defaults, const json& file, const json& flags) {
  for (const auto& [k, v] : file.items())
    if (!defaults.contains(k)) throw UsageError("unknown config key '" + k + "'");
  json r = defaults;
  for (const auto& [k, v] : file.items()) r[k] = v;
  for (const auto& [k, v] : flags.items()) r[k] = v;
  return r;
}

template <typename T>
T get(const json& j, const std::string& key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw UsageError("config key '" + key + "': " + e.what());
  }
}

IntegratorConfig solver_from(const json& j) {
  IntegratorConfig c;
  c.rtol = get<double>(j, "rtol");
  c.atol = get<double>(j, "atol");
  c.max_steps = get<std::size_t>(j, "max_steps");
  c.validate();
  return c;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path.string());
  out << content;
  if (!out) throw UsageError("failed writing " + path.string());
}

/// Creates the output directory and echoes the resolved configuration.
fs::path prepare_out_dir(const fs::path& dir, const json& resolved) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw UsageError("cannot create output directory " + dir.string() + ": " + ec.message());
  write_file(dir / "config.resolved.json", resolved.dump(2) + "\n");
  return dir;
}

std::vector<double> parse_pair(const std::string& s) {
  const auto fields = split_csv_line(s);
  std::vector<double> out;
  for (const auto& f : fields) {
    double v = 0.0;
    if (!parse_double(f, v)) throw UsageError("cannot parse '" + s + "' as a,b");
    out.push_back(v);
  }
  if (out.size() != 2) throw UsageError("expected two comma-separated numbers, got '" + s + "'");
  return out;
}

std::string render_from_csv_text(const std::string& csv, PlotKind kind) {
  std::istringstream in(csv);
  return render_svg(plot_from_csv(read_csv(in), kind));
}

// ---------------------------------------------------------------------------

struct TrajectoryCmd {
  FlagSet flags;
  std::string config, landscape, x0, out;
  double T = 0.0, rtol = 0.0, atol = 0.0;
  long long seed = 0;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "JSON config file");
    flags.add(app, "--landscape", "landscape", landscape, "rosenbrock|beale");
    flags.add(app, "--x0", "x0", x0, "start point a,b (default: landscape default)");
    flags.add(app, "--T", "T", T, "horizon");
    flags.add(app, "--rtol", "rtol", rtol, "solver relative tolerance");
    flags.add(app, "--atol", "atol", atol, "solver absolute tolerance");
    flags.add(app, "--seed", "seed", seed, "seed (the flows are deterministic)");
    flags.add(app, "--out", "out_dir", out, "output directory");
  }

  int run() {
    const TrajectoryConfig d;
    const json defaults = {{"landscape", "rosenbrock"},
                           {"x0", nullptr},
                           {"T", d.T},
                           {"samples", d.samples},
                           {"radius", d.radius},
                           {"hb_gamma", d.hb_gamma},
                           {"adam",
                            {{"alpha", d.adam.alpha},
                             {"beta", d.adam.beta},
                             {"epsilon", d.adam.epsilon},
                             {"v0", d.adam_init.v0},
                             {"m0", d.adam_init.m0}}},
                           {"rtol", d.solver.rtol},
                           {"atol", d.solver.atol},
                           {"max_steps", d.solver.max_steps},
                           {"seed", 0},
                           {"out_dir", "out/trajectory"}};
    json flag_values = flags.given();
    if (flag_values.contains("x0")) {
      const auto p = parse_pair(flag_values["x0"].get<std::string>());
      flag_values["x0"] = p;
    }
    json r = resolve(defaults, load_config_file(config), flag_values);
    const Landscape& land = landscape_from_name(get<std::string>(r, "landscape"));
    if (r["x0"].is_null()) r["x0"] = land.default_start;
    const auto x0v = get<std::vector<double>>(r, "x0");
    if (x0v.size() != 2) throw UsageError("x0 must have two entries");

    TrajectoryConfig cfg;
    cfg.T = get<double>(r, "T");
    cfg.samples = get<std::size_t>(r, "samples");
    cfg.radius = get<double>(r, "radius");
    cfg.hb_gamma = get<double>(r, "hb_gamma");
    const json& a = r.at("adam");
    for (const auto& [k, v] : a.items())
      if (k != "alpha" && k != "beta" && k != "epsilon" && k != "v0" && k != "m0")
        throw UsageError("unknown adam key '" + k + "'");
    cfg.adam = {a.value("alpha", d.adam.alpha), a.value("beta", d.adam.beta), a.value("epsilon", d.adam.epsilon)};
    cfg.adam_init = {a.value("m0", d.adam_init.m0), a.value("v0", d.adam_init.v0)};
    cfg.solver = solver_from(r);
    cfg.validate();

    const fs::path dir = prepare_out_dir(get<std::string>(r, "out_dir"), r);
    const TrajectoryExperiment exp = run_trajectory_experiment(land, {x0v[0], x0v[1]}, cfg);
    std::ostringstream csv;
    write_trajectory_csv(csv, exp);
    write_file(dir / "trajectory.csv", csv.str());
    const json summary = trajectory_summary(exp);
    write_file(dir / "summary.json", summary.dump(2) + "\n");
    write_file(dir / "trajectory.svg", render_from_csv_text(csv.str(), PlotKind::Trajectory));

    bool any_ok = false;
    for (const auto& f : exp.flows) {
      any_ok = any_ok || !f.blew_up;
      std::printf("%-14s final_distance=%s first_within_%s=%s status=%s\n", std::string(flow_name(f.kind)).c_str(),
                  format_number(f.final_distance).c_str(), format_number(cfg.radius).c_str(),
                  f.first_time_within_radius ? format_number(*f.first_time_within_radius).c_str() : "never",
                  std::string(to_string(f.result.status)).c_str());
    }
    return any_ok ? kOk : kSolverFailure;
  }
};

struct StabilityCmd {
  FlagSet flags;
  std::string config, probe, models, out;
  double t1 = 0.0;
  long long seed = 0;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "JSON config file");
    flags.add(app, "--t1", "t1", t1, "horizon");
    flags.add(app, "--probe", "probe", probe, "synthetic | csv:PATH");
    flags.add(app, "--models", "models", models, "all | comma-separated model names");
    flags.add(app, "--seed", "seed", seed, "parameter and generator seed");
    flags.add(app, "--out", "out_dir", out, "output directory");
  }

  int run() {
    const StabilityConfig d;
    const json defaults = {{"t1", d.t1},
                           {"grid", d.grid},
                           {"probe", "synthetic"},
                           {"models", "all"},
                           {"seed", 0},
                           {"state_dim", d.state_dim},
                           {"hidden", d.hidden},
                           {"activation", std::string(to_string(d.activation))},
                           {"fairness_limit", d.fairness_limit},
                           {"rtol", d.solver.rtol},
                           {"atol", d.solver.atol},
                           {"max_steps", d.solver.max_steps},
                           {"out_dir", "out/stability"}};
    const json r = resolve(defaults, load_config_file(config), flags.given());

    StabilityConfig cfg;
    cfg.t1 = get<double>(r, "t1");
    cfg.grid = get<std::size_t>(r, "grid");
    cfg.seed = get<std::uint64_t>(r, "seed");
    cfg.state_dim = get<std::size_t>(r, "state_dim");
    cfg.hidden = get<std::vector<std::size_t>>(r, "hidden");
    cfg.activation = activation_from_string(get<std::string>(r, "activation"));
    cfg.fairness_limit = get<double>(r, "fairness_limit");
    cfg.solver = solver_from(r);
    const json& m = r.at("models");
    if (m.is_array()) {
      cfg.models.clear();
      for (const auto& n : m) cfg.models.push_back(kind_from_name(n.get<std::string>()));
    } else if (get<std::string>(r, "models") != "all") {
      cfg.models.clear();
      for (const auto& n : split_csv_line(get<std::string>(r, "models"))) cfg.models.push_back(kind_from_name(n));
    }
    cfg.validate();

    const std::string probe_src = get<std::string>(r, "probe");
    Series series;
    if (probe_src == "synthetic") {
      DuffingConfig dc;
      dc.seed = cfg.seed;
      series = duffing_series(dc);
    } else if (probe_src.rfind("csv:", 0) == 0) {
      const std::string path = probe_src.substr(4);
      if (!fs::is_regular_file(path)) throw UsageError("cannot open probe file " + path);
      series = ingest_series_csv(path);
    } else {
      throw UsageError("probe must be 'synthetic' or 'csv:PATH'");
    }

    const fs::path dir = prepare_out_dir(get<std::string>(r, "out_dir"), r);
    const StabilityResult res = run_stability_probe(series, cfg);
    std::ostringstream csv;
    write_stability_csv(csv, res);
    write_file(dir / "stability.csv", csv.str());
    write_file(dir / "summary.json", stability_summary(res).dump(2) + "\n");
    write_file(dir / "stability.svg", render_from_csv_text(csv.str(), PlotKind::Stability));

    bool any_ok = false;
    for (const auto& mn : res.models) {
      any_ok = any_ok || !mn.blowup_at;
      std::printf("%-9s params=%zu log10|h(t1)|=%s%s\n", std::string(model_name(mn.kind)).c_str(), mn.param_count,
                  format_number(mn.final_log10_norm()).c_str(),
                  mn.blowup_at ? (" blowup_at=" + format_number(*mn.blowup_at)).c_str() : "");
    }
    return any_ok ? kOk : kSolverFailure;
  }
};

struct TrainCmd {
  FlagSet flags;
  std::string config, dataset, model, out;
  long long epochs = 0, batch = 0, seed = 0;
  double lr = 0.0;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "JSON config file");
    flags.add(app, "--dataset", "dataset", dataset, "spirals|moons");
    flags.add(app, "--model", "model", model, valid_model_names());
    flags.add(app, "--epochs", "epochs", epochs, "training epochs");
    flags.add(app, "--lr", "lr", lr, "optimizer learning rate");
    flags.add(app, "--batch", "batch", batch, "mini-batch size");
    flags.add(app, "--seed", "seed", seed, "data, split and initialization seed");
    flags.add(app, "--out", "out_dir", out, "output directory");
  }

  int run() {
    const TrainConfig d;
    const json defaults = {{"dataset", "spirals"},
                           {"model", "adamnode"},
                           {"dynamics", json::object()},
                           {"epochs", d.epochs},
                           {"lr", d.lr},
                           {"batch", d.batch},
                           {"seed", 0},
                           {"n_points", d.data.n},
                           {"noise", d.data.noise},
                           {"turns", d.data.turns},
                           {"train_fraction", d.train_fraction},
                           {"state_dim", d.state_dim},
                           {"hidden", d.hidden},
                           {"activation", std::string(to_string(d.activation))},
                           {"learn_initial_momentum", d.learn_initial_momentum},
                           {"rtol", d.solver.rtol},
                           {"atol", d.solver.atol},
                           {"max_steps", d.solver.max_steps},
                           {"out_dir", "out/train"}};
    json r = resolve(defaults, load_config_file(config), flags.given());
    if (get<long long>(r, "epochs") < 0) throw UsageError("epochs must be >= 0");
    if (get<long long>(r, "batch") <= 0) throw UsageError("batch must be >= 1");

    TrainConfig cfg;
    const DynamicsKind kind = kind_from_name(get<std::string>(r, "model"));
    json dyn = to_json(DynamicsSpec::defaults_for(kind));
    const json& over = r.at("dynamics");
    if (!over.is_object()) throw UsageError("dynamics must be an object");
    for (const auto& [k, v] : over.items()) {
      if (k == "kind") {
        if (kind_from_name(v.get<std::string>()) != kind) throw UsageError("dynamics.kind disagrees with model");
        continue;
      }
      if (!dyn.contains(k)) throw UsageError("dynamics key '" + k + "' does not apply to " + dyn["kind"].get<std::string>());
      dyn[k] = v;
    }
    cfg.model = dynamics_from_json(dyn);
    r["dynamics"] = dyn;
    cfg.data.kind = dataset_from_name(get<std::string>(r, "dataset"));
    cfg.data.n = get<std::size_t>(r, "n_points");
    cfg.data.noise = get<double>(r, "noise");
    cfg.data.turns = get<double>(r, "turns");
    cfg.seed = get<std::uint64_t>(r, "seed");
    cfg.data.seed = cfg.seed;
    cfg.train_fraction = get<double>(r, "train_fraction");
    cfg.epochs = get<std::size_t>(r, "epochs");
    cfg.lr = get<double>(r, "lr");
    cfg.batch = get<std::size_t>(r, "batch");
    cfg.state_dim = get<std::size_t>(r, "state_dim");
    cfg.hidden = get<std::vector<std::size_t>>(r, "hidden");
    cfg.activation = activation_from_string(get<std::string>(r, "activation"));
    cfg.learn_initial_momentum = get<bool>(r, "learn_initial_momentum");
    cfg.solver = solver_from(r);
    cfg.validate();

    const fs::path dir = prepare_out_dir(get<std::string>(r, "out_dir"), r);
    const std::size_t n_train =
        static_cast<std::size_t>(std::lround(cfg.train_fraction * static_cast<double>(cfg.data.n)));
    const std::size_t batches = (n_train + cfg.batch - 1) / cfg.batch;

    std::ofstream csv(dir / "efficacy.csv", std::ios::binary);
    if (!csv) throw UsageError("cannot write efficacy.csv");
    std::ostringstream text;
    write_efficacy_csv_header(text, batches);
    csv << text.str() << std::flush;
    const TrainResult res = run_classification(cfg, [&](const EfficacyRecord& rec) {
      std::ostringstream row;
      write_efficacy_row(row, rec);
      text << row.str();
      csv << row.str() << std::flush;
    });
    csv.close();
    write_file(dir / "summary.json", training_summary(cfg, res).dump(2) + "\n");
    if (!res.records.empty()) {
      write_file(dir / "loss.svg", render_from_csv_text(text.str(), PlotKind::Loss));
      write_file(dir / "efficacy.svg", render_from_csv_text(text.str(), PlotKind::Efficacy));
    }

    std::printf("initial test_accuracy=%s\n", format_number(res.initial.accuracy).c_str());
    if (!res.records.empty()) {
      const auto& f = res.records.back();
      std::printf("epoch %zu test_accuracy=%s efficacy_fwd=%s efficacy_bwd=%s\n", f.epoch,
                  format_number(f.test_accuracy).c_str(), format_number(f.efficacy_fwd).c_str(),
                  format_number(f.efficacy_bwd).c_str());
    }
    if (res.diverged) {
      std::fprintf(stderr, "training diverged: %s\n", res.divergence_reason.c_str());
      return kDiverged;
    }
    return kOk;
  }
};

struct GradcheckCmd {
  FlagSet flags;
  std::string config, model, out;
  long long seed = 0;
  double tol = 0.0;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "JSON config file");
    flags.add(app, "--model", "model", model, valid_model_names() + "|all");
    flags.add(app, "--seed", "seed", seed, "model seed");
    flags.add(app, "--tol", "tol", tol, "pass iff max relative error < tol");
    flags.add(app, "--out", "out_dir", out, "output directory");
  }

  int run() {
    const GradcheckOptions d;
    const json defaults = {{"model", "adamnode"},
                           {"seed", 0},
                           {"tol", 1e-3},
                           {"state_dim", d.state_dim},
                           {"hidden", d.hidden},
                           {"t1", d.t1},
                           {"solver_tol", d.solver_tol},
                           {"fd_delta", d.fd_delta},
                           {"variant", "exact"},
                           {"out_dir", "out/gradcheck"}};
    const json r = resolve(defaults, load_config_file(config), flags.given());
    const double tol = get<double>(r, "tol");
    if (!(tol >= 0.0)) throw UsageError("tol must be >= 0");
    GradcheckOptions opts;
    opts.state_dim = get<std::size_t>(r, "state_dim");
    opts.hidden = get<std::vector<std::size_t>>(r, "hidden");
    opts.t1 = get<double>(r, "t1");
    opts.solver_tol = get<double>(r, "solver_tol");
    opts.fd_delta = get<double>(r, "fd_delta");
    const std::string variant = get<std::string>(r, "variant");
    if (variant != "exact" && variant != "literal") throw UsageError("variant must be exact or literal");
    opts.variant = variant == "exact" ? AdjointVariant::Exact : AdjointVariant::Literal;
    if (opts.state_dim == 0 || !(opts.fd_delta > 0.0) || !(opts.t1 > 0.0) || !(opts.solver_tol > 0.0))
      throw UsageError("state_dim, t1, solver_tol and fd_delta must be positive");
    const std::string name = get<std::string>(r, "model");
    std::vector<DynamicsKind> kinds;
    if (name == "all")
      kinds = all_kinds();
    else
      kinds.push_back(kind_from_name(name));
    const std::uint64_t seed_v = get<std::uint64_t>(r, "seed");

    const fs::path dir = prepare_out_dir(get<std::string>(r, "out_dir"), r);
    json reports = json::array();
    bool pass = true, solver_ok = true;
    for (DynamicsKind k : kinds) {
      const GradcheckReport rep = gradcheck(DynamicsSpec::defaults_for(k), seed_v, opts);
      json j = to_json(rep);
      j["tol"] = tol;
      j["passed"] = rep.passes(tol);
      reports.push_back(j);
      pass = pass && rep.passes(tol);
      solver_ok = solver_ok && rep.solver_ok;
    }
    const json out = kinds.size() == 1 ? reports[0] : reports;
    write_file(dir / "gradcheck.json", out.dump(2) + "\n");
    std::cout << out.dump(2) << "\n";
    if (!solver_ok) return kSolverFailure;
    return pass ? kOk : kVerificationFailed;
  }
};

struct PlotCmd {
  FlagSet flags;
  std::string config, in, kind, out;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "JSON config file");
    flags.add(app, "--in", "in", in, "input CSV");
    flags.add(app, "--kind", "kind", kind, "trajectory|stability|efficacy|loss");
    flags.add(app, "--out", "out", out, "output SVG path");
  }

  int run() {
    const json defaults = {{"in", ""}, {"kind", ""}, {"out", ""}};
    const json r = resolve(defaults, load_config_file(config), flags.given());
    const std::string in_path = get<std::string>(r, "in"), out_path = get<std::string>(r, "out");
    if (in_path.empty() || out_path.empty()) throw UsageError("--in and --out are required");
    const PlotKind k = plot_kind_from_name(get<std::string>(r, "kind"));

    fs::path parent = fs::path(out_path).parent_path();
    if (parent.empty()) parent = ".";
    prepare_out_dir(parent, r);
    CsvTable table;
    try {
      table = read_csv_file(in_path);
    } catch (const std::runtime_error& e) {
      throw UsageError(e.what());
    }
    write_file(out_path, render_svg(plot_from_csv(table, k)));
    std::printf("wrote %s\n", out_path.c_str());
    return kOk;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"momenta: momentum and adaptive continuous-depth models"};
  app.require_subcommand(1);
  TrajectoryCmd trajectory;
  StabilityCmd stability;
  TrainCmd train;
  GradcheckCmd gradcheck_cmd;
  PlotCmd plot;
  auto* c_traj = app.add_subcommand("trajectory", "optimization flows on a 2-D landscape");
  auto* c_stab = app.add_subcommand("stability", "hidden-state norm growth probe");
  auto* c_train = app.add_subcommand("train", "toy classification with efficacy records");
  auto* c_grad = app.add_subcommand("gradcheck", "adjoint vs finite-difference gradients");
  auto* c_plot = app.add_subcommand("plot", "regenerate an SVG from a CSV");
  trajectory.attach(c_traj);
  stability.attach(c_stab);
  train.attach(c_train);
  gradcheck_cmd.attach(c_grad);
  plot.attach(c_plot);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (c_traj->parsed()) return trajectory.run();
    if (c_stab->parsed()) return stability.run();
    if (c_train->parsed()) return train.run();
    if (c_grad->parsed()) return gradcheck_cmd.run();
    if (c_plot->parsed()) return plot.run();
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const SeriesParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const CsvSchemaError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const json::exception& e) {
    std::fprintf(stderr, "error: config: %s\n", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kSolverFailure;
  }
  return kUsage;
}
