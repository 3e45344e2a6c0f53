#pragma once

// Finite-difference verification of the adjoint gradients: every model
// parameter is perturbed by ±δ, the forward problem is re-solved at tight
// tolerance, and the central difference of the loss is compared with the
// adjoint result.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "momenta/adjoint.hpp"
#include "momenta/neural_model.hpp"

namespace momenta {

/// Loss on the terminal packed state: returns L and writes ∂L/∂z into grad.
using TerminalLoss = std::function<double(const NeuralOde& model, std::span<const double> z1, std::span<double> grad)>;

/// ½‖h(t1) - target‖² over the h blocks of every sample.
TerminalLoss quadratic_h_loss(StateVec target);
/// Constant loss; its gradient is identically zero.
TerminalLoss constant_loss(double value);

struct GradcheckOptions {
  std::size_t state_dim = 2;
  std::vector<std::size_t> hidden = {8};
  Activation activation = Activation::Tanh;
  bool time_conditioned = true;
  double t0 = 0.0;
  double t1 = 1.0;
  double solver_tol = 1e-10;
  double fd_delta = 1e-5;
  AdjointVariant variant = AdjointVariant::Exact;
  std::size_t report_worst = 5;
  /// Overrides the default quadratic loss with a random target.
  TerminalLoss loss;
};

struct ParamCheck {
  std::size_t index = 0;
  double adjoint = 0.0;
  double finite_difference = 0.0;
  double rel_err = 0.0;
};

struct GradcheckReport {
  std::string formulation;
  std::uint64_t seed = 0;
  std::size_t param_count = 0;
  double max_rel_err = 0.0;
  double max_abs_err = 0.0;
  std::vector<ParamCheck> per_param_worst;
  std::size_t forward_nfe = 0;
  std::size_t backward_nfe = 0;
  std::vector<double> adjoint_grad;
  std::vector<double> fd_grad;
  bool solver_ok = true;

  bool passes(double tol) const { return solver_ok && max_rel_err < tol; }
};

/// Builds a seeded random model of the requested formulation (parameters
/// perturbed away from the zero-bias initialization) and checks its adjoint.
GradcheckReport gradcheck(const DynamicsSpec& spec, std::uint64_t seed, const GradcheckOptions& opts = {});

/// Checks an existing model on a given batch of initial positions.
GradcheckReport gradcheck_model(NeuralOde model, std::span<const double> h0, std::size_t batch,
                                const TerminalLoss& loss, const GradcheckOptions& opts);

/// Report as JSON: {formulation, seed, max_rel_err, per_param_worst: [...], ...}.
nlohmann::json to_json(const GradcheckReport& r);

/// Relative error with denominator max(|reference|, 1e-8).
double relative_error(double value, double reference);

}  // namespace momenta
