#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include "momenta/dynamics.hpp"
#include "momenta/field_net.hpp"
#include "momenta/ode_solver.hpp"

namespace momenta {

/// Field shape matching a formulation on a d-dimensional problem.
FieldShape field_shape_for(const DynamicsSpec& spec, std::size_t d, std::vector<std::size_t> hidden,
                           Activation activation = Activation::Tanh, bool time_conditioned = true);

/// A neural formulation bound to its field network, evaluated over a batch
/// of independent samples stacked sample-major: [s0: h m v][s1: h m v]...
///
/// Model parameters are the field's ParamVec followed, for (G)HBNODE, by the
/// damping pre-parameter theta.
class NeuralOde {
 public:
  using Conditioner = std::function<double(double)>;

  NeuralOde(DynamicsSpec spec, FieldNet field, std::size_t d);

  const DynamicsSpec& spec() const { return spec_; }
  const FieldNet& field() const { return field_; }
  FieldNet& field() { return field_; }

  std::size_t dim() const { return d_; }
  std::size_t width() const { return width_; }
  std::size_t blocks() const { return spec_.blocks(); }
  std::size_t sample_dim() const { return blocks() * width_; }
  std::size_t batch_of(std::span<const double> z) const;

  std::size_t param_count() const;
  ParamVec params() const;
  void set_params(std::span<const double> p);

  /// Value fed to the field's conditioning slot at time t (identity unless set).
  void set_conditioner(Conditioner c) { conditioner_ = std::move(c); }
  double condition(double t) const { return conditioner_ ? conditioner_(t) : t; }

  /// Packs batch x d initial positions: augmentation zeros, m0 and v0 fills.
  StateVec initial_state(std::span<const double> h0, std::size_t batch) const;

  /// Copies block `block` (0 = h, 1 = m, 2 = v) of every sample into out
  /// (batch x width).
  void gather_block(std::span<const double> z, std::size_t block, std::span<double> out) const;

  /// Field inputs per sample: h, or h‖m for SONODE.
  void gather_field_input(std::span<const double> z, std::span<double> out) const;

  void rhs(double t, std::span<const double> z, std::span<double> dz) const;
  RhsFn rhs_fn() const;

  /// Forward derivative given precomputed field values f (batch x width).
  void derivative_from_field(std::span<const double> z, std::span<const double> f, std::span<double> dz) const;

 private:
  DynamicsSpec spec_;
  FieldNet field_;
  std::size_t d_;
  std::size_t width_;
  Conditioner conditioner_;
};

}  // namespace momenta
