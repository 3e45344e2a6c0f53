#pragma once

// Right-hand sides of the continuous-depth formulations (NODE, ANODE, SONODE,
// HBNODE, GHBNODE, AdamNODE), the pure-optimization flows (gradient flow,
// heavy-ball ODE, Adam ODE), the discrete Adam update used as a cross-check,
// and the h‖m‖v state packing shared by all of them.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include <json.hpp>

#include "momenta/field_net.hpp"
#include "momenta/ode_solver.hpp"

namespace momenta {

struct AdamParams {
  double alpha = 0.9;     // momentum retention; decay rate is 1 - alpha
  double beta = 0.99;     // second-moment retention; decay rate is 1 - beta
  double epsilon = 1e-5;  // denominator regularizer

  void validate() const;
};

struct HeavyBallParams {
  double theta = -3.0;  // unconstrained damping pre-parameter

  /// Damping gamma = sigmoid(theta), always in (0, 1).
  double gamma() const;
  /// d gamma / d theta.
  double gamma_grad() const;
};

enum class DynamicsKind { Vanilla, Augmented, SecondOrder, HeavyBall, GeneralizedHeavyBall, Adam };

/// CLI/JSON name of a kind: node, anode, sonode, hbnode, ghbnode, adamnode.
std::string_view model_name(DynamicsKind k);
DynamicsKind kind_from_name(std::string_view name);
std::string valid_model_names();

/// Initial values for the auxiliary blocks when they are not learned.
struct InitialMoments {
  double m0 = 0.0;
  double v0 = 1.0;
};

/// Tagged formulation choice. Parameter blocks belonging to other kinds are
/// absent; validate() enforces this.
struct DynamicsSpec {
  DynamicsKind kind = DynamicsKind::Vanilla;
  std::optional<AdamParams> adam;
  std::optional<HeavyBallParams> hb;
  std::optional<std::size_t> aug_width;
  std::optional<double> saturation_bound;
  InitialMoments init;

  static DynamicsSpec vanilla();
  static DynamicsSpec augmented(std::size_t aug_width = 2);
  static DynamicsSpec second_order();
  static DynamicsSpec heavy_ball(HeavyBallParams hb = {});
  static DynamicsSpec generalized_heavy_ball(HeavyBallParams hb = {}, double saturation_bound = 1.0);
  static DynamicsSpec adam_node(AdamParams p = {}, InitialMoments init = {});
  static DynamicsSpec defaults_for(DynamicsKind k);

  void validate() const;

  /// Number of d-wide blocks per sample: 1 (h), 2 (h, m) or 3 (h, m, v).
  std::size_t blocks() const;
  /// Width of each block for a d-dimensional problem (d + aug_width for ANODE).
  std::size_t block_width(std::size_t d) const;
  /// State inputs the field network must accept.
  std::size_t field_state_dim(std::size_t d) const;
  bool has_trainable_damping() const { return hb.has_value(); }
};

nlohmann::json to_json(const DynamicsSpec& spec);
DynamicsSpec dynamics_from_json(const nlohmann::json& j);

/// Unpacked view of one sample's state; m and v are empty when absent.
struct PackedState {
  StateVec h, m, v;
};

StateVec pack(const PackedState& s);
PackedState unpack(std::span<const double> z, std::size_t blocks, std::size_t width);

/// Appends `aug_width` zeros.
StateVec augment(std::span<const double> h, std::size_t aug_width);

/// Element-wise clamp to [-bound, bound].
double saturate(double x, double bound);

// ---------------------------------------------------------------------------
// Pure-optimization flows over an objective F with gradient callback.

using GradFn = std::function<void(std::span<const double> x, std::span<double> grad)>;

/// dx/dt = -∇F(x). State: x.
RhsFn gradient_flow(GradFn grad);
/// dx/dt = -m, dm/dt = -γ m + ∇F(x). State: x‖m.
RhsFn heavy_ball_flow(GradFn grad, double gamma);
/// dx/dt = -m/sqrt(v+ε), dm/dt = (1-α)(∇F(x) - m), dv/dt = (1-β)(∇F(x)² - v).
/// State: x‖m‖v.
RhsFn adam_flow(GradFn grad, AdamParams p);

/// Evaluates the Adam-ODE derivative for one packed state.
PackedState adam_ode_rhs(double t, const PackedState& state, const GradFn& grad, const AdamParams& p);

struct AdamIterate {
  StateVec x, m, v;
};

/// One discrete Adam update with step size s, no bias correction:
/// x' = x - s m/sqrt(v+ε); m' = αm + (1-α)∇F(x'); v' = βv + (1-β)∇F(x')².
AdamIterate discrete_adam_step(const AdamIterate& it, const GradFn& grad, double s, const AdamParams& p);

// ---------------------------------------------------------------------------
// Neural formulations for a single sample (batched versions live in
// NeuralOde). The field's conditioning slot receives t.

PackedState vanilla_rhs(double t, const PackedState& state, const FieldNet& field);
/// Same equation as vanilla over the augmented state; checks the width.
PackedState augmented_rhs(double t, const PackedState& state, const FieldNet& field, std::size_t aug_width,
                          std::size_t d);
/// dh/dt = m, dm/dt = f(h, m, t).
PackedState sonode_rhs(double t, const PackedState& state, const FieldNet& field);
/// dh/dt = -m, dm/dt = -γ m + f(h, t).
PackedState hb_node_rhs(double t, const PackedState& state, const FieldNet& field, const HeavyBallParams& hb);
/// dh/dt = -clamp(m, ±bound), dm/dt = -γ m + f(h, t).
PackedState ghb_node_rhs(double t, const PackedState& state, const FieldNet& field, const HeavyBallParams& hb,
                         double saturation_bound);
/// dh/dt = -m/sqrt(v+ε), dm/dt = (1-α)(-f - m), dv/dt = (1-β)(f² - v).
PackedState adam_node_rhs(double t, const PackedState& state, const FieldNet& field, const AdamParams& p);

// Element-wise kernels shared by the single-sample and batched paths.
// `signal` is ∇F for the optimization flow and -f for the neural variant.
void adam_kernel(std::span<const double> m, std::span<const double> v, std::span<const double> signal,
                 const AdamParams& p, std::span<double> dh, std::span<double> dm, std::span<double> dv);
/// `force` is ∇F for the optimization flow and f for the neural variant.
void heavy_ball_kernel(std::span<const double> m, std::span<const double> force, double gamma,
                       std::optional<double> saturation_bound, std::span<double> dh, std::span<double> dm);

}  // namespace momenta
