#pragma once

// Toy-scale classification with a continuous-depth block: linear embed into
// the state, flow over [0, 1], linear readout, softmax cross-entropy.
// Gradients come from the adjoint backward pass; parameters are updated with
// the (discrete, bias-corrected) Adam optimizer. A mini-batch is stacked into
// one ODE system so each batch costs one forward and one backward solve.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "momenta/adjoint.hpp"
#include "momenta/datasets.hpp"
#include "momenta/neural_model.hpp"

namespace momenta {

struct TrainConfig {
  DatasetConfig data;
  double train_fraction = 0.8;
  DynamicsSpec model = DynamicsSpec::adam_node();
  std::size_t state_dim = 8;
  std::vector<std::size_t> hidden = {64};
  Activation activation = Activation::Tanh;
  /// Learned linear map h(0) -> m(0) instead of the constant m0.
  bool learn_initial_momentum = false;
  std::size_t epochs = 100;
  double lr = 1e-3;
  std::size_t batch = 32;
  std::uint64_t seed = 0;
  AdjointVariant variant = AdjointVariant::Exact;
  IntegratorConfig solver = default_solver();

  static IntegratorConfig default_solver();
  void validate() const;
};

struct EfficacyRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;      // mean over the epoch's batches
  double test_accuracy = 0.0;
  std::size_t forward_nfe = 0;  // cumulative over training batches
  std::size_t backward_nfe = 0;
  std::size_t epoch_forward_nfe = 0;
  std::size_t epoch_backward_nfe = 0;
  std::size_t batches = 0;
  double efficacy_fwd = 0.0;  // test_accuracy / (epoch_forward_nfe / batches)
  double efficacy_bwd = 0.0;
};

/// Efficacy from raw counters: accuracy / (nfe / batches).
double efficacy(double accuracy, std::size_t nfe, std::size_t batches);

struct EvalResult {
  double accuracy = 0.0;
  double loss = 0.0;
  std::size_t nfe = 0;
  bool ok = true;
};

class Classifier {
 public:
  Classifier(const TrainConfig& cfg, std::uint64_t seed);

  const NeuralOde& ode() const { return ode_; }
  std::size_t param_count() const { return params_.size(); }
  const ParamVec& params() const { return params_; }
  void set_params(std::span<const double> p);

  /// Loss and gradient on a batch; grad is overwritten. Returns false when a
  /// solve fails or the loss is not finite.
  struct StepStats {
    double loss = 0.0;
    std::size_t forward_nfe = 0;
    std::size_t backward_nfe = 0;
    bool ok = true;
  };
  StepStats loss_and_grad(std::span<const double> x, std::span<const int> y, std::span<double> grad);

  EvalResult evaluate(const Dataset& d);

 private:
  void split_params();
  StateVec initial_state(std::span<const double> x, std::size_t batch) const;

  TrainConfig cfg_;
  NeuralOde ode_;
  std::size_t d_, w_;
  // [embed W (d x 2), embed b (d)] [ode params] [readout W (2 x w), b (2)] [m-map W (w x w), b (w)]
  ParamVec params_;
  std::size_t off_ode_ = 0, off_readout_ = 0, off_mmap_ = 0;
};

struct TrainResult {
  EvalResult initial;  // before any update
  std::vector<EfficacyRecord> records;
  bool diverged = false;
  std::string divergence_reason;
  std::size_t param_count = 0;
  std::size_t train_size = 0, test_size = 0;
};

using EpochCallback = std::function<void(const EfficacyRecord&)>;

TrainResult run_classification(const TrainConfig& cfg, const EpochCallback& on_epoch = {});

/// `# ...` normalization note, then header
/// `epoch,train_loss,test_accuracy,forward_nfe,backward_nfe,efficacy_fwd,efficacy_bwd`.
void write_efficacy_csv_header(std::ostream& out, std::size_t batches_per_epoch);
void write_efficacy_row(std::ostream& out, const EfficacyRecord& r);
void write_efficacy_csv(std::ostream& out, const TrainResult& r, std::size_t batches_per_epoch);

nlohmann::json training_summary(const TrainConfig& cfg, const TrainResult& r);

/// Discrete Adam optimizer with bias correction (beta1 0.9, beta2 0.999).
class AdamOptimizer {
 public:
  explicit AdamOptimizer(std::size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(std::span<double> params, std::span<const double> grad);

 private:
  double lr_, b1_, b2_, eps_;
  std::size_t t_ = 0;
  std::vector<double> m_, v_;
};

}  // namespace momenta
