#pragma once

// Norm-growth probe: randomly initialized, parameter-fair models of every
// formulation are driven by the same input sequence and ‖h(t)‖₂ is sampled on
// a shared uniform grid up to t1. A solver failure marks a blow-up.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include <json.hpp>

#include "momenta/dynamics.hpp"
#include "momenta/field_net.hpp"
#include "momenta/neural_model.hpp"
#include "momenta/series.hpp"

namespace momenta {

std::vector<DynamicsKind> all_kinds();

struct StabilityConfig {
  std::vector<DynamicsKind> models = all_kinds();
  std::uint64_t seed = 0;
  double t1 = 64.0;
  std::size_t grid = 257;  // samples over [0, t1], endpoints included
  std::size_t state_dim = 2;
  std::vector<std::size_t> hidden = {64, 64};
  Activation activation = Activation::ReLU;
  bool zero_fields = false;  // all field parameters zero
  double fairness_limit = 0.10;
  IntegratorConfig solver = default_solver();

  static IntegratorConfig default_solver();
  void validate() const;
};

struct ModelNorms {
  DynamicsKind kind = DynamicsKind::Vanilla;
  std::size_t param_count = 0;
  std::vector<double> log10_norm;  // one per reached grid sample
  std::optional<double> blowup_at;
  SolveStatus status = SolveStatus::Success;
  std::size_t nfe = 0;

  /// log10‖h(t1)‖, +inf after a blow-up.
  double final_log10_norm() const;
};

struct StabilityResult {
  std::vector<double> times;
  std::vector<ModelNorms> models;
  double param_spread = 0.0;  // (max - min) / min over the compared models

  const ModelNorms& model(DynamicsKind k) const;
};

/// Relative spread (max - min) / min of a set of parameter counts.
double parameter_spread(std::span<const std::size_t> counts);

/// The model a probe run integrates for one formulation.
NeuralOde probe_model(DynamicsKind kind, const StabilityConfig& cfg);

/// Throws std::invalid_argument when the models' parameter counts differ by
/// more than cfg.fairness_limit or the probe is shorter than state_dim.
StabilityResult run_stability_probe(const Series& probe, const StabilityConfig& cfg = {});

/// Header `t,log10_norm,model`; one `# blowup_at <model> <t>` line per blow-up
/// after the rows.
void write_stability_csv(std::ostream& out, const StabilityResult& r);

nlohmann::json stability_summary(const StabilityResult& r);

}  // namespace momenta
