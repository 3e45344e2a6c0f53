#include "momenta/trajectory.hpp"

#include <cmath>
#include <stdexcept>

#include "momenta/csv_io.hpp"

namespace momenta {

std::string_view flow_name(FlowKind k) {
  switch (k) {
    case FlowKind::GradientFlow: return "gradient_flow";
    case FlowKind::HeavyBall: return "hbode";
    case FlowKind::Adam: return "adamode";
  }
  return "unknown";
}

IntegratorConfig TrajectoryConfig::default_solver() {
  IntegratorConfig c;
  c.rtol = 1e-8;
  c.atol = 1e-10;
  c.max_steps = 5'000'000;
  return c;
}

void TrajectoryConfig::validate() const {
  if (!(T > 0.0) || !std::isfinite(T)) throw std::invalid_argument("T must be positive and finite");
  if (samples < 2) throw std::invalid_argument("samples must be >= 2");
  if (!(radius > 0.0)) throw std::invalid_argument("radius must be positive");
  if (!(hb_gamma > 0.0)) throw std::invalid_argument("hb_gamma must be positive");
  if (!(adam_init.v0 >= 0.0)) throw std::invalid_argument("adam v0 must be nonnegative");
  adam.validate();
  solver.validate();
}

const FlowOutcome& TrajectoryExperiment::flow(FlowKind k) const {
  for (const auto& f : flows)
    if (f.kind == k) return f;
  throw std::out_of_range("flow not present");
}

TrajectoryExperiment run_trajectory_experiment(const Landscape& landscape, std::array<double, 2> x0,
                                               const TrajectoryConfig& cfg) {
  cfg.validate();
  if (!std::isfinite(x0[0]) || !std::isfinite(x0[1])) throw std::invalid_argument("x0 must be finite");

  TrajectoryExperiment exp;
  exp.landscape = landscape.name;
  exp.x0 = x0;
  exp.minimizer = landscape.minimizer;
  exp.T = cfg.T;
  exp.radius = cfg.radius;
  exp.times.resize(cfg.samples);
  for (std::size_t i = 0; i < cfg.samples; ++i)
    exp.times[i] = cfg.T * static_cast<double>(i) / static_cast<double>(cfg.samples - 1);
  // The first sample coincides with t0, which the solver does not accept.
  const std::span<const double> grid(exp.times.data() + 1, exp.times.size() - 1);

  const GradFn grad = landscape.grad_fn();
  for (FlowKind k : {FlowKind::GradientFlow, FlowKind::HeavyBall, FlowKind::Adam}) {
    RhsFn rhs;
    StateVec z0{x0[0], x0[1]};
    switch (k) {
      case FlowKind::GradientFlow: rhs = gradient_flow(grad); break;
      case FlowKind::HeavyBall:
        rhs = heavy_ball_flow(grad, cfg.hb_gamma);
        z0.insert(z0.end(), {0.0, 0.0});
        break;
      case FlowKind::Adam:
        rhs = adam_flow(grad, cfg.adam);
        z0.insert(z0.end(), {cfg.adam_init.m0, cfg.adam_init.m0, cfg.adam_init.v0, cfg.adam_init.v0});
        break;
    }
    FlowOutcome out;
    out.kind = k;
    out.result = solve_dopri45(rhs, z0, 0.0, cfg.T, cfg.solver, grid);
    out.result.ts.insert(out.result.ts.begin(), 0.0);
    out.result.states.insert(out.result.states.begin(), z0);
    out.blew_up = !out.result.ok();
    for (std::size_t i = 0; i < out.result.ts.size(); ++i) {
      const auto& s = out.result.states[i];
      const double d = std::hypot(s[0] - exp.minimizer[0], s[1] - exp.minimizer[1]);
      out.distance.push_back(d);
      if (!out.first_time_within_radius && d < cfg.radius) out.first_time_within_radius = out.result.ts[i];
    }
    out.final_distance = out.distance.back();
    exp.flows.push_back(std::move(out));
  }
  return exp;
}

void write_trajectory_csv(std::ostream& out, const TrajectoryExperiment& exp) {
  out << "t,x,y,dynamics\n";
  for (const auto& f : exp.flows) {
    const std::string name(flow_name(f.kind));
    for (std::size_t i = 0; i < f.result.ts.size(); ++i)
      out << format_number(f.result.ts[i]) << ',' << format_number(f.result.states[i][0]) << ','
          << format_number(f.result.states[i][1]) << ',' << name << '\n';
  }
  out << "# minimizer " << exp.landscape << ' ' << format_number(exp.minimizer[0]) << ' '
      << format_number(exp.minimizer[1]) << '\n';
}

nlohmann::json trajectory_summary(const TrajectoryExperiment& exp) {
  nlohmann::json flows = nlohmann::json::object();
  for (const auto& f : exp.flows) {
    flows[std::string(flow_name(f.kind))] = {
        {"final_distance", f.final_distance},
        {"first_time_within_radius",
         f.first_time_within_radius ? nlohmann::json(*f.first_time_within_radius) : nlohmann::json(nullptr)},
        {"status", std::string(to_string(f.result.status))},
        {"t_reached", f.result.t_reached},
        {"nfe", f.result.nfe},
        {"blew_up", f.blew_up}};
  }
  return {{"landscape", exp.landscape}, {"x0", exp.x0},         {"minimizer", exp.minimizer},
          {"T", exp.T},                 {"radius", exp.radius}, {"flows", flows}};
}

}  // namespace momenta
