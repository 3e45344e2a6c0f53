#include "momenta/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "momenta/csv_io.hpp"
#include "momenta/parallel.hpp"

namespace momenta {

std::vector<DynamicsKind> all_kinds() {
  return {DynamicsKind::Vanilla,   DynamicsKind::Augmented,           DynamicsKind::SecondOrder,
          DynamicsKind::HeavyBall, DynamicsKind::GeneralizedHeavyBall, DynamicsKind::Adam};
}

IntegratorConfig StabilityConfig::default_solver() {
  IntegratorConfig c;
  c.rtol = 1e-6;
  c.atol = 1e-6;
  c.max_steps = 200'000;
  return c;
}

void StabilityConfig::validate() const {
  if (models.empty()) throw std::invalid_argument("no models selected");
  if (!(t1 > 0.0) || !std::isfinite(t1)) throw std::invalid_argument("t1 must be positive and finite");
  if (grid < 2) throw std::invalid_argument("grid must be >= 2");
  if (state_dim == 0) throw std::invalid_argument("state_dim must be >= 1");
  solver.validate();
}

double ModelNorms::final_log10_norm() const {
  if (blowup_at || log10_norm.empty()) return std::numeric_limits<double>::infinity();
  return log10_norm.back();
}

const ModelNorms& StabilityResult::model(DynamicsKind k) const {
  for (const auto& m : models)
    if (m.kind == k) return m;
  throw std::out_of_range("model not in probe result");
}

double parameter_spread(std::span<const std::size_t> counts) {
  if (counts.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
  return static_cast<double>(*hi - *lo) / static_cast<double>(std::max<std::size_t>(*lo, 1));
}

NeuralOde probe_model(DynamicsKind kind, const StabilityConfig& cfg) {
  const DynamicsSpec spec = DynamicsSpec::defaults_for(kind);
  const FieldShape shape = field_shape_for(spec, cfg.state_dim, cfg.hidden, cfg.activation, true);
  FieldNet field = cfg.zero_fields ? FieldNet(shape) : init_field_net(shape, cfg.seed);
  return NeuralOde(spec, std::move(field), cfg.state_dim);
}

StabilityResult run_stability_probe(const Series& probe, const StabilityConfig& cfg) {
  cfg.validate();
  if (probe.size() < std::max<std::size_t>(cfg.state_dim, 2))
    throw std::invalid_argument("probe series shorter than the state dimension");

  std::vector<NeuralOde> models;
  std::vector<std::size_t> counts;
  for (DynamicsKind k : cfg.models) {
    models.push_back(probe_model(k, cfg));
    counts.push_back(models.back().param_count());
  }
  StabilityResult res;
  res.param_spread = parameter_spread(counts);
  if (res.param_spread >= cfg.fairness_limit)
    throw std::invalid_argument("parameter counts differ by " + format_number(100 * res.param_spread) +
                                "%, above the fairness limit");

  res.times.resize(cfg.grid);
  for (std::size_t i = 0; i < cfg.grid; ++i)
    res.times[i] = cfg.t1 * static_cast<double>(i) / static_cast<double>(cfg.grid - 1);
  const std::span<const double> grid(res.times.data() + 1, res.times.size() - 1);

  // Probe time [0, t1] maps linearly onto the series' time span.
  const double s0 = probe.t.front(), span = probe.t.back() - probe.t.front();
  auto conditioner = [&probe, s0, span, t1 = cfg.t1](double t) { return probe.input_at(s0 + span * t / t1); };
  const StateVec h0(probe.output.begin(), probe.output.begin() + static_cast<std::ptrdiff_t>(cfg.state_dim));

  res.models.resize(models.size());
  parallel_for(models.size(), [&](std::size_t i) {
    NeuralOde& model = models[i];
    model.set_conditioner(conditioner);
    const StateVec z0 = model.initial_state(h0, 1);
    const SolveResult sol = solve_dopri45(model.rhs_fn(), z0, 0.0, cfg.t1, cfg.solver, grid);
    ModelNorms& out = res.models[i];
    out.kind = cfg.models[i];
    out.param_count = counts[i];
    out.status = sol.status;
    out.nfe = sol.nfe;
    auto log_norm = [&](std::span<const double> z) {
      double s = 0.0;
      for (std::size_t j = 0; j < model.width(); ++j) s += z[j] * z[j];
      return std::log10(std::sqrt(s));
    };
    out.log10_norm.push_back(log_norm(z0));
    for (const auto& z : sol.states) out.log10_norm.push_back(log_norm(z));
    if (!sol.ok()) out.blowup_at = sol.t_reached;
  });
  return res;
}

void write_stability_csv(std::ostream& out, const StabilityResult& r) {
  out << "t,log10_norm,model\n";
  for (const auto& m : r.models) {
    const std::string name(model_name(m.kind));
    for (std::size_t i = 0; i < m.log10_norm.size(); ++i)
      out << format_number(r.times[i]) << ',' << format_number(m.log10_norm[i]) << ',' << name << '\n';
  }
  for (const auto& m : r.models)
    if (m.blowup_at) out << "# blowup_at " << model_name(m.kind) << ' ' << format_number(*m.blowup_at) << '\n';
}

nlohmann::json stability_summary(const StabilityResult& r) {
  nlohmann::json models = nlohmann::json::object();
  for (const auto& m : r.models) {
    const double f = m.final_log10_norm();
    models[std::string(model_name(m.kind))] = {
        {"param_count", m.param_count},
        {"final_log10_norm", std::isfinite(f) ? nlohmann::json(f) : nlohmann::json(nullptr)},
        {"blowup_at", m.blowup_at ? nlohmann::json(*m.blowup_at) : nlohmann::json(nullptr)},
        {"status", std::string(to_string(m.status))},
        {"nfe", m.nfe}};
  }
  return {{"t1", r.times.back()}, {"grid", r.times.size()}, {"param_spread", r.param_spread}, {"models", models}};
}

}  // namespace momenta
