#pragma once

// Small dense feed-forward network parameterizing the vector field f(h, t).
// Forward evaluation and the two vector-Jacobian contractions the adjoint
// system needs (with respect to the input and to the parameters) are computed
// analytically by reverse accumulation through the layers.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "momenta/ode_solver.hpp"

namespace momenta {

using ParamVec = std::vector<double>;

enum class Activation { Tanh, ReLU, HardTanh };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view s);

struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weight;  // out x in, row-major
  std::vector<double> bias;    // out
};

/// Architecture of a field network. `state_dim` counts only the state inputs;
/// a time-conditioned network takes one extra input coordinate.
struct FieldShape {
  std::size_t state_dim = 1;
  std::vector<std::size_t> hidden = {64, 64};
  std::size_t out_dim = 1;
  Activation activation = Activation::Tanh;
  bool time_conditioned = true;

  std::size_t param_count() const;
};

class FieldNet {
 public:
  /// Per-batch cache of layer inputs and pre-activations, filled by
  /// forward_batch and consumed by backward_batch.
  struct Tape {
    std::size_t batch = 0;
    std::vector<std::vector<double>> inputs;  // inputs[l]: batch x layers[l].in
    std::vector<std::vector<double>> pre;     // pre[l]: batch x layers[l].out
  };

  FieldNet() = default;
  /// Zero-initialized network of the given shape.
  explicit FieldNet(const FieldShape& shape);

  const FieldShape& shape() const { return shape_; }
  std::size_t in_dim() const { return shape_.state_dim + (shape_.time_conditioned ? 1 : 0); }
  std::size_t state_dim() const { return shape_.state_dim; }
  std::size_t out_dim() const { return shape_.out_dim; }
  bool time_conditioned() const { return shape_.time_conditioned; }
  std::size_t param_count() const { return param_count_; }

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }

  /// Flat parameter view, layer-major: W0 (row-major), b0, W1, b1, ...
  ParamVec params() const;
  void set_params(std::span<const double> p);

  StateVec forward(std::span<const double> h, double t) const;
  /// aᵀ·∂f/∂h, time slot dropped.
  StateVec vjp_input(std::span<const double> h, double t, std::span<const double> a) const;
  /// aᵀ·∂f/∂θ in ParamVec order.
  ParamVec vjp_params(std::span<const double> h, double t, std::span<const double> a) const;

  /// Evaluates `batch` rows of H (batch x state_dim) at conditioning value c
  /// (the time slot, when time-conditioned). Writes batch x out_dim into out.
  void forward_batch(std::span<const double> H, std::size_t batch, double c, Tape& tape,
                     std::span<double> out) const;

  /// Reverse pass for cotangents A (batch x out_dim). grad_state receives
  /// batch x state_dim (overwritten) and grad_params accumulates the
  /// parameter contraction summed over the batch, scaled by `param_scale`.
  /// Either output may be empty to skip it.
  void backward_batch(const Tape& tape, std::span<const double> A, std::span<double> grad_state,
                      std::span<double> grad_params, double param_scale = 1.0) const;

 private:
  FieldShape shape_;
  std::vector<DenseLayer> layers_;
  std::size_t param_count_ = 0;
};

/// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
FieldNet init_field_net(const FieldShape& shape, std::uint64_t seed);

/// Versioned checkpoint: shape header plus the flat parameter array.
nlohmann::json field_net_to_json(const FieldNet& net);
FieldNet field_net_from_json(const nlohmann::json& j);

inline constexpr int kCheckpointVersion = 1;

}  // namespace momenta
