#include "momenta/neural_model.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace momenta {

FieldShape field_shape_for(const DynamicsSpec& spec, std::size_t d, std::vector<std::size_t> hidden,
                           Activation activation, bool time_conditioned) {
  FieldShape s;
  s.state_dim = spec.field_state_dim(d);
  s.out_dim = spec.block_width(d);
  s.hidden = std::move(hidden);
  s.activation = activation;
  s.time_conditioned = time_conditioned;
  return s;
}

NeuralOde::NeuralOde(DynamicsSpec spec, FieldNet field, std::size_t d)
    : spec_(std::move(spec)), field_(std::move(field)), d_(d) {
  spec_.validate();
  if (d == 0) throw std::invalid_argument("state dimension must be >= 1");
  width_ = spec_.block_width(d);
  if (field_.state_dim() != spec_.field_state_dim(d) || field_.out_dim() != width_)
    throw std::invalid_argument("field shape (" + std::to_string(field_.state_dim()) + " -> " +
                                std::to_string(field_.out_dim()) + ") does not match " +
                                std::string(model_name(spec_.kind)) + " on d=" + std::to_string(d));
}

std::size_t NeuralOde::batch_of(std::span<const double> z) const {
  if (z.empty() || z.size() % sample_dim() != 0)
    throw std::invalid_argument("state size " + std::to_string(z.size()) + " is not a multiple of " +
                                std::to_string(sample_dim()));
  return z.size() / sample_dim();
}

std::size_t NeuralOde::param_count() const {
  return field_.param_count() + (spec_.has_trainable_damping() ? 1 : 0);
}

ParamVec NeuralOde::params() const {
  ParamVec p = field_.params();
  if (spec_.hb) p.push_back(spec_.hb->theta);
  return p;
}

void NeuralOde::set_params(std::span<const double> p) {
  if (p.size() != param_count()) throw std::invalid_argument("model parameter size mismatch");
  field_.set_params(p.first(field_.param_count()));
  if (spec_.hb) spec_.hb->theta = p.back();
}

StateVec NeuralOde::initial_state(std::span<const double> h0, std::size_t batch) const {
  if (h0.size() != batch * d_) throw std::invalid_argument("initial positions must be batch x d");
  const std::size_t sd = sample_dim();
  StateVec z(batch * sd, 0.0);
  for (std::size_t b = 0; b < batch; ++b) {
    double* s = z.data() + b * sd;
    std::copy_n(h0.data() + b * d_, d_, s);
    if (blocks() > 1) std::fill_n(s + width_, width_, spec_.init.m0);
    if (blocks() > 2) std::fill_n(s + 2 * width_, width_, spec_.init.v0);
  }
  return z;
}

void NeuralOde::gather_block(std::span<const double> z, std::size_t block, std::span<double> out) const {
  const std::size_t batch = batch_of(z), sd = sample_dim();
  if (block >= blocks()) throw std::invalid_argument("block index out of range");
  if (out.size() != batch * width_) throw std::invalid_argument("gather output size mismatch");
  for (std::size_t b = 0; b < batch; ++b)
    std::copy_n(z.data() + b * sd + block * width_, width_, out.data() + b * width_);
}

void NeuralOde::gather_field_input(std::span<const double> z, std::span<double> out) const {
  const std::size_t batch = batch_of(z), sd = sample_dim(), fd = field_.state_dim();
  if (out.size() != batch * fd) throw std::invalid_argument("field input size mismatch");
  for (std::size_t b = 0; b < batch; ++b) std::copy_n(z.data() + b * sd, fd, out.data() + b * fd);
}

void NeuralOde::rhs(double t, std::span<const double> z, std::span<double> dz) const {
  const std::size_t batch = batch_of(z), w = width_;
  if (dz.size() != z.size()) throw std::invalid_argument("derivative size mismatch");
  StateVec x(batch * field_.state_dim()), f(batch * w);
  gather_field_input(z, x);
  FieldNet::Tape tape;
  field_.forward_batch(x, batch, condition(t), tape, f);
  derivative_from_field(z, f, dz);
}

void NeuralOde::derivative_from_field(std::span<const double> z, std::span<const double> f,
                                      std::span<double> dz) const {
  const std::size_t batch = batch_of(z), sd = sample_dim(), w = width_;
  if (f.size() != batch * w) throw std::invalid_argument("field value size mismatch");
  StateVec signal(w);
  for (std::size_t b = 0; b < batch; ++b) {
    const auto zs = z.subspan(b * sd, sd);
    const auto ds = dz.subspan(b * sd, sd);
    const auto fs = f.subspan(b * w, w);
    switch (spec_.kind) {
      case DynamicsKind::Vanilla:
      case DynamicsKind::Augmented: std::copy(fs.begin(), fs.end(), ds.begin()); break;
      case DynamicsKind::SecondOrder:
        std::copy_n(zs.begin() + static_cast<std::ptrdiff_t>(w), w, ds.begin());
        std::copy(fs.begin(), fs.end(), ds.begin() + static_cast<std::ptrdiff_t>(w));
        break;
      case DynamicsKind::HeavyBall:
      case DynamicsKind::GeneralizedHeavyBall:
        heavy_ball_kernel(zs.subspan(w, w), fs, spec_.hb->gamma(), spec_.saturation_bound, ds.first(w),
                          ds.subspan(w, w));
        break;
      case DynamicsKind::Adam:
        for (std::size_t i = 0; i < w; ++i) signal[i] = -fs[i];
        adam_kernel(zs.subspan(w, w), zs.subspan(2 * w, w), signal, *spec_.adam, ds.first(w), ds.subspan(w, w),
                    ds.subspan(2 * w, w));
        break;
    }
  }
}

RhsFn NeuralOde::rhs_fn() const {
  return [this](double t, std::span<const double> z, std::span<double> dz) { rhs(t, z, dz); };
}

}  // namespace momenta
