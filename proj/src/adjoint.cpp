#include "momenta/adjoint.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace momenta {

std::string_view to_string(AdjointStatus s) {
  switch (s) {
    case AdjointStatus::Success: return "success";
    case AdjointStatus::SolverFailure: return "solver_failure";
    case AdjointStatus::ReconstructionDivergence: return "reconstruction_divergence";
  }
  return "unknown";
}

std::size_t adjoint_costate_rhs(const NeuralOde& model, AdjointVariant variant, double t,
                                std::span<const double> z, std::span<const double> costate,
                                std::span<double> dcostate, std::span<double> dz) {
  const std::size_t batch = model.batch_of(z), sd = model.sample_dim(), w = model.width();
  const std::size_t n = z.size(), P = model.param_count();
  const FieldNet& field = model.field();
  const std::size_t fd = field.state_dim(), Pf = field.param_count();
  if (costate.size() != n + P || dcostate.size() != n + P) throw std::invalid_argument("costate size mismatch");

  const auto& spec = model.spec();
  const auto a = costate.first(n);
  auto da = dcostate.first(n);
  auto dtheta = dcostate.subspan(n, P);
  std::fill(dtheta.begin(), dtheta.end(), 0.0);

  StateVec x(batch * fd), f(batch * w), cot(batch * w), gx(batch * fd);
  model.gather_field_input(z, x);
  FieldNet::Tape tape;
  field.forward_batch(x, batch, model.condition(t), tape, f);
  if (!dz.empty()) model.derivative_from_field(z, f, dz);

  // Cotangent fed through the field, and the sign it enters da_h / da_θ with.
  double sign = -1.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const double* ab = a.data() + b * sd;
    double* cb = cot.data() + b * w;
    switch (spec.kind) {
      case DynamicsKind::Vanilla:
      case DynamicsKind::Augmented: std::copy_n(ab, w, cb); break;
      case DynamicsKind::SecondOrder:
      case DynamicsKind::HeavyBall:
      case DynamicsKind::GeneralizedHeavyBall: std::copy_n(ab + w, w, cb); break;
      case DynamicsKind::Adam: {
        sign = 1.0;
        const auto& p = *spec.adam;
        const double* fb = f.data() + b * w;
        for (std::size_t i = 0; i < w; ++i) {
          const double am = ab[w + i], av = ab[2 * w + i];
          cb[i] = variant == AdjointVariant::Exact
                      ? (1.0 - p.alpha) * am - 2.0 * (1.0 - p.beta) * fb[i] * av
                      : am - av;
        }
        break;
      }
    }
  }
  field.backward_batch(tape, cot, gx, dtheta.first(Pf), sign);

  std::size_t clamps = 0;
  for (std::size_t b = 0; b < batch; ++b) {
    const double* zb = z.data() + b * sd;
    const double* ab = a.data() + b * sd;
    const double* gb = gx.data() + b * fd;
    double* db = da.data() + b * sd;
    switch (spec.kind) {
      case DynamicsKind::Vanilla:
      case DynamicsKind::Augmented:
        for (std::size_t i = 0; i < w; ++i) db[i] = -gb[i];
        break;
      case DynamicsKind::SecondOrder:
        for (std::size_t i = 0; i < w; ++i) {
          db[i] = -gb[i];
          db[w + i] = -ab[i] - gb[w + i];
        }
        break;
      case DynamicsKind::HeavyBall:
      case DynamicsKind::GeneralizedHeavyBall: {
        const double gamma = spec.hb->gamma();
        double dot = 0.0;
        for (std::size_t i = 0; i < w; ++i) {
          const double m = zb[w + i];
          const double mask =
              spec.saturation_bound ? (std::abs(m) < *spec.saturation_bound ? 1.0 : 0.0) : 1.0;
          db[i] = -gb[i];
          db[w + i] = mask * ab[i] + gamma * ab[w + i];
          dot += ab[w + i] * m;
        }
        dtheta[Pf] += spec.hb->gamma_grad() * dot;
        break;
      }
      case DynamicsKind::Adam: {
        const auto& p = *spec.adam;
        for (std::size_t i = 0; i < w; ++i) {
          const double m = zb[w + i], v = zb[2 * w + i];
          if (v < 0.0) ++clamps;
          const double s2 = std::max(v, 0.0) + p.epsilon;
          const double s = std::sqrt(s2);
          // ∂(-m/sqrt(v+ε))/∂v vanishes where the clamp is active.
          const double dv_term = v < 0.0 ? 0.0 : ab[i] * m / (2.0 * s2 * s);
          db[i] = gb[i];
          db[w + i] = ab[i] / s + (1.0 - p.alpha) * ab[w + i];
          db[2 * w + i] = -dv_term + (1.0 - p.beta) * ab[2 * w + i];
        }
        break;
      }
    }
  }
  return clamps;
}

void adjoint_rhs_adam(const NeuralOde& model, AdjointVariant variant, double t, std::span<const double> joint,
                      std::span<double> djoint) {
  if (model.spec().kind != DynamicsKind::Adam) throw std::invalid_argument("adjoint_rhs_adam needs adamnode");
  const std::size_t n = (joint.size() - model.param_count()) / 2;
  adjoint_costate_rhs(model, variant, t, joint.first(n), joint.subspan(n), djoint.subspan(n), djoint.first(n));
}

void adjoint_rhs_generic(const NeuralOde& model, double t, std::span<const double> joint,
                         std::span<double> djoint) {
  if (model.spec().kind == DynamicsKind::Adam) throw std::invalid_argument("use adjoint_rhs_adam for adamnode");
  const std::size_t n = (joint.size() - model.param_count()) / 2;
  adjoint_costate_rhs(model, AdjointVariant::Exact, t, joint.first(n), joint.subspan(n), djoint.subspan(n),
                      djoint.first(n));
}

AdjointRun backward(const NeuralOde& model, std::span<const double> z1, std::span<const double> loss_grad,
                    double t0, double t1, const IntegratorConfig& cfg, const AdjointOptions& opts) {
  const std::size_t n = z1.size(), P = model.param_count();
  model.batch_of(z1);
  if (loss_grad.size() != n) throw std::invalid_argument("loss gradient must match the terminal state");
  if (opts.mode == ForwardStateMode::Stored && (opts.stored == nullptr || opts.stored->dim() != n))
    throw std::invalid_argument("stored mode needs the forward dense trajectory");

  AdjointRun run;
  run.reconstruction_error = std::numeric_limits<double>::quiet_NaN();
  if (t0 == t1) {
    run.grad_initial_state.assign(loss_grad.begin(), loss_grad.end());
    run.grad_params.assign(P, 0.0);
    if (opts.initial_state) run.reconstruction_error = 0.0;
    return run;
  }

  const double samples[] = {t0};
  std::size_t clamps = 0;
  SolveResult sol;
  if (opts.mode == ForwardStateMode::Recompute) {
    StateVec joint(2 * n + P, 0.0);
    std::copy(z1.begin(), z1.end(), joint.begin());
    std::copy(loss_grad.begin(), loss_grad.end(), joint.begin() + static_cast<std::ptrdiff_t>(n));
    RhsFn rhs = [&](double t, std::span<const double> y, std::span<double> dy) {
      clamps += adjoint_costate_rhs(model, opts.variant, t, y.first(n), y.subspan(n), dy.subspan(n), dy.first(n));
    };
    sol = solve_dopri45(rhs, joint, t1, t0, cfg, samples);
  } else {
    StateVec costate(n + P, 0.0);
    std::copy(loss_grad.begin(), loss_grad.end(), costate.begin());
    StateVec z(n);
    RhsFn rhs = [&](double t, std::span<const double> y, std::span<double> dy) {
      opts.stored->evaluate(t, z);
      clamps += adjoint_costate_rhs(model, opts.variant, t, z, y, dy);
    };
    sol = solve_dopri45(rhs, costate, t1, t0, cfg, samples);
  }

  run.backward_nfe = sol.nfe;
  run.v_clamps = clamps;
  run.solver_status = sol.status;
  if (!sol.ok()) {
    run.status = AdjointStatus::SolverFailure;
    return run;
  }
  const StateVec& out = sol.states.back();
  const std::size_t off = opts.mode == ForwardStateMode::Recompute ? n : 0;
  run.grad_initial_state.assign(out.begin() + static_cast<std::ptrdiff_t>(off),
                                out.begin() + static_cast<std::ptrdiff_t>(off + n));
  run.grad_params.assign(out.begin() + static_cast<std::ptrdiff_t>(off + n), out.end());

  if (opts.mode == ForwardStateMode::Recompute && opts.initial_state) {
    const StateVec& z0 = *opts.initial_state;
    if (z0.size() != n) throw std::invalid_argument("initial_state must match the terminal state");
    const std::size_t batch = n / model.sample_dim(), sd = model.sample_dim(), w = model.width();
    double err2 = 0.0, ref2 = 0.0;
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t i = 0; i < w; ++i) {
        const double diff = out[b * sd + i] - z0[b * sd + i];
        err2 += diff * diff;
        ref2 += z0[b * sd + i] * z0[b * sd + i];
      }
    run.reconstruction_error = std::sqrt(err2);
    const double limit = 1e-2 * std::sqrt(ref2) + cfg.atol * std::sqrt(static_cast<double>(batch * w));
    if (run.reconstruction_error > limit) run.status = AdjointStatus::ReconstructionDivergence;
  }
  return run;
}

}  // namespace momenta
