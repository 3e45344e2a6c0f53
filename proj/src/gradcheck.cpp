#include "momenta/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace momenta {

TerminalLoss quadratic_h_loss(StateVec target) {
  return [target = std::move(target)](const NeuralOde& model, std::span<const double> z1, std::span<double> grad) {
    const std::size_t batch = model.batch_of(z1), sd = model.sample_dim(), w = model.width();
    if (target.size() != batch * w) throw std::invalid_argument("loss target must be batch x width");
    std::fill(grad.begin(), grad.end(), 0.0);
    double L = 0.0;
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t i = 0; i < w; ++i) {
        const double r = z1[b * sd + i] - target[b * w + i];
        L += 0.5 * r * r;
        grad[b * sd + i] = r;
      }
    return L;
  };
}

TerminalLoss constant_loss(double value) {
  return [value](const NeuralOde&, std::span<const double>, std::span<double> grad) {
    std::fill(grad.begin(), grad.end(), 0.0);
    return value;
  };
}

double relative_error(double value, double reference) {
  return std::abs(value - reference) / std::max(std::abs(reference), 1e-8);
}

GradcheckReport gradcheck_model(NeuralOde model, std::span<const double> h0, std::size_t batch,
                                const TerminalLoss& loss, const GradcheckOptions& opts) {
  const IntegratorConfig cfg = IntegratorConfig::tight(opts.solver_tol);
  const StateVec z0 = model.initial_state(h0, batch);
  const double samples[] = {opts.t1};

  GradcheckReport rep;
  rep.formulation = std::string(model_name(model.spec().kind));
  rep.param_count = model.param_count();

  auto solve_loss = [&](const NeuralOde& m, std::size_t* nfe) -> std::pair<double, StateVec> {
    const SolveResult sol = solve_dopri45(m.rhs_fn(), z0, opts.t0, opts.t1, cfg, samples);
    if (nfe) *nfe = sol.nfe;
    if (!sol.ok()) {
      rep.solver_ok = false;
      return {std::numeric_limits<double>::quiet_NaN(), sol.y_final};
    }
    StateVec g(sol.y_final.size());
    const double L = loss(m, sol.y_final, g);
    return {L, sol.y_final};
  };

  const auto [L, z1] = solve_loss(model, &rep.forward_nfe);
  if (!rep.solver_ok) return rep;
  StateVec dLdz(z1.size());
  loss(model, z1, dLdz);
  AdjointOptions aopts;
  aopts.variant = opts.variant;
  aopts.initial_state = z0;
  const AdjointRun run = backward(model, z1, dLdz, opts.t0, opts.t1, cfg, aopts);
  rep.backward_nfe = run.backward_nfe;
  if (run.status == AdjointStatus::SolverFailure) {
    rep.solver_ok = false;
    return rep;
  }
  rep.adjoint_grad = run.grad_params;

  const ParamVec theta = model.params();
  rep.fd_grad.resize(theta.size());
  NeuralOde probe = model;
  std::vector<ParamCheck> checks;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    ParamVec p = theta;
    p[i] = theta[i] + opts.fd_delta;
    probe.set_params(p);
    const double Lp = solve_loss(probe, nullptr).first;
    p[i] = theta[i] - opts.fd_delta;
    probe.set_params(p);
    const double Lm = solve_loss(probe, nullptr).first;
    const double fd = (Lp - Lm) / (2.0 * opts.fd_delta);
    rep.fd_grad[i] = fd;
    const ParamCheck c{i, rep.adjoint_grad[i], fd, relative_error(rep.adjoint_grad[i], fd)};
    rep.max_rel_err = std::max(rep.max_rel_err, c.rel_err);
    rep.max_abs_err = std::max(rep.max_abs_err, std::abs(c.adjoint - c.finite_difference));
    checks.push_back(c);
  }
  if (!rep.solver_ok) rep.max_rel_err = std::numeric_limits<double>::infinity();
  std::sort(checks.begin(), checks.end(), [](const ParamCheck& a, const ParamCheck& b) {
    return a.rel_err != b.rel_err ? a.rel_err > b.rel_err : a.index < b.index;
  });
  checks.resize(std::min(checks.size(), opts.report_worst));
  rep.per_param_worst = std::move(checks);
  return rep;
}

GradcheckReport gradcheck(const DynamicsSpec& spec, std::uint64_t seed, const GradcheckOptions& opts) {
  const std::size_t d = opts.state_dim;
  FieldNet field = init_field_net(field_shape_for(spec, d, opts.hidden, opts.activation, opts.time_conditioned), seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  ParamVec p = field.params();
  for (double& x : p) x += 0.1 * u(rng);  // break the zero-bias structure
  field.set_params(p);

  NeuralOde model(spec, std::move(field), d);
  StateVec h0(d), target(model.width());
  for (double& x : h0) x = 2.0 * u(rng);
  for (double& x : target) x = 2.0 * u(rng);
  const TerminalLoss loss = opts.loss ? opts.loss : quadratic_h_loss(target);
  GradcheckReport rep = gradcheck_model(std::move(model), h0, 1, loss, opts);
  rep.seed = seed;
  return rep;
}

nlohmann::json to_json(const GradcheckReport& r) {
  nlohmann::json worst = nlohmann::json::array();
  for (const auto& c : r.per_param_worst)
    worst.push_back({{"index", c.index},
                     {"adjoint", c.adjoint},
                     {"finite_difference", c.finite_difference},
                     {"rel_err", c.rel_err}});
  return nlohmann::json{{"formulation", r.formulation},
                        {"seed", r.seed},
                        {"param_count", r.param_count},
                        {"max_rel_err", r.solver_ok ? nlohmann::json(r.max_rel_err) : nlohmann::json(nullptr)},
                        {"max_abs_err", r.max_abs_err},
                        {"solver_ok", r.solver_ok},
                        {"forward_nfe", r.forward_nfe},
                        {"backward_nfe", r.backward_nfe},
                        {"per_param_worst", worst}};
}

}  // namespace momenta
