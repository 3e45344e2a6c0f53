#pragma once

// Optimization-flow comparison on a 2-D landscape: gradient flow, heavy-ball
// ODE and Adam ODE integrated from the same start over [0, T].

#include <array>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "momenta/dynamics.hpp"
#include "momenta/landscapes.hpp"
#include "momenta/ode_solver.hpp"

namespace momenta {

enum class FlowKind { GradientFlow, HeavyBall, Adam };

/// "gradient_flow", "hbode", "adamode".
std::string_view flow_name(FlowKind k);

struct TrajectoryConfig {
  double T = 200.0;
  std::size_t samples = 2001;  // uniform grid over [0, T], endpoints included
  double radius = 0.1;         // ball used for the first-entry time
  double hb_gamma = 0.9;
  AdamParams adam{0.0, 0.9999, 1e-8};
  InitialMoments adam_init{0.0, 0.01};
  IntegratorConfig solver = default_solver();

  static IntegratorConfig default_solver();
  void validate() const;
};

struct FlowOutcome {
  FlowKind kind = FlowKind::GradientFlow;
  SolveResult result;
  std::vector<double> distance;  // ‖x(t) - x*‖ on the sample grid
  double final_distance = 0.0;   // at the last reached sample
  std::optional<double> first_time_within_radius;
  bool blew_up = false;
};

struct TrajectoryExperiment {
  std::string landscape;
  std::array<double, 2> x0{};
  std::array<double, 2> minimizer{};
  double T = 0.0;
  double radius = 0.0;
  std::vector<double> times;
  std::vector<FlowOutcome> flows;  // gradient flow, HBODE, AdamODE

  const FlowOutcome& flow(FlowKind k) const;
};

TrajectoryExperiment run_trajectory_experiment(const Landscape& landscape, std::array<double, 2> x0,
                                               const TrajectoryConfig& cfg = {});

/// Header `t,x,y,dynamics`; rows grouped by flow, up to the last reached sample,
/// then a `# minimizer <landscape> <x> <y>` line.
void write_trajectory_csv(std::ostream& out, const TrajectoryExperiment& exp);

/// {landscape, x0, minimizer, T, radius, flows: {name: {final_distance,
/// first_time_within_radius, status, nfe, blew_up}}}.
nlohmann::json trajectory_summary(const TrajectoryExperiment& exp);

}  // namespace momenta
