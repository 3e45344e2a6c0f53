#pragma once

// Adjoint-sensitivity backward pass. The cotangent a(t) = ∂L/∂z(t) obeys
// da/dt = -a·∂g/∂z and the parameter gradient accumulates
// da_θ/dt = -a·∂g/∂θ, both integrated from t1 back to t0 with a(t1) = ∂L/∂z(t1)
// and a_θ(t1) = 0, so a_θ(t0) = dL/dθ. By default the forward state is
// recomputed backward inside the same solve (constant memory).

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>

#include "momenta/neural_model.hpp"
#include "momenta/ode_solver.hpp"

namespace momenta {

/// Exact: cotangent dynamics from the exact Jacobian of the forward system.
/// Literal: the AdamNODE adjoint as commonly printed, whose h-row omits the
/// (1-α) and (1-β)·2f factors; kept for comparison only, and identical to
/// Exact for the other formulations.
enum class AdjointVariant { Exact, Literal };

enum class ForwardStateMode { Recompute, Stored };

enum class AdjointStatus { Success, SolverFailure, ReconstructionDivergence };

std::string_view to_string(AdjointStatus s);

struct AdjointOptions {
  AdjointVariant variant = AdjointVariant::Exact;
  ForwardStateMode mode = ForwardStateMode::Recompute;
  /// Forward dense trajectory; required in Stored mode.
  const DenseTrajectory* stored = nullptr;
  /// Forward state at t0; enables the reconstruction check in Recompute mode.
  std::optional<StateVec> initial_state;
};

struct AdjointRun {
  ParamVec grad_params;        // model parameters (field, then damping theta)
  StateVec grad_initial_state; // ∂L/∂z(t0), packed like the forward state
  std::size_t backward_nfe = 0;
  /// ‖recomputed h(t0) - stored h(t0)‖₂; NaN when not measured.
  double reconstruction_error = 0.0;
  AdjointStatus status = AdjointStatus::Success;
  SolveStatus solver_status = SolveStatus::Success;
  /// Evaluations where a negative v entry had to be clamped at zero.
  std::size_t v_clamps = 0;

  bool ok() const { return status == AdjointStatus::Success; }
};

/// Derivative of the cotangent state [a ‖ a_θ] at time t given the forward
/// state z. Returns the number of clamped v entries seen.
std::size_t adjoint_costate_rhs(const NeuralOde& model, AdjointVariant variant, double t,
                                std::span<const double> z, std::span<const double> costate,
                                std::span<double> dcostate, std::span<double> dz = {});

/// Joint right-hand side over [z ‖ a ‖ a_θ] for AdamNODE.
void adjoint_rhs_adam(const NeuralOde& model, AdjointVariant variant, double t, std::span<const double> joint,
                      std::span<double> djoint);
/// Joint right-hand side over [z ‖ a ‖ a_θ] for the non-Adam formulations.
void adjoint_rhs_generic(const NeuralOde& model, double t, std::span<const double> joint,
                         std::span<double> djoint);

/// Integrates the adjoint system from t1 (terminal state z1, cotangent
/// loss_grad) back to t0.
AdjointRun backward(const NeuralOde& model, std::span<const double> z1, std::span<const double> loss_grad,
                    double t0, double t1, const IntegratorConfig& cfg, const AdjointOptions& opts = {});

}  // namespace momenta
