#include "momenta/field_net.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace momenta {

namespace {

double activate(Activation a, double z) {
  switch (a) {
    case Activation::Tanh: return std::tanh(z);
    case Activation::ReLU: return z > 0.0 ? z : 0.0;
    case Activation::HardTanh: return std::clamp(z, -1.0, 1.0);
  }
  return z;
}

// Derivative from the pre-activation; kinks take the subgradient 0.
double activate_grad(Activation a, double z) {
  switch (a) {
    case Activation::Tanh: {
      const double y = std::tanh(z);
      return 1.0 - y * y;
    }
    case Activation::ReLU: return z > 0.0 ? 1.0 : 0.0;
    case Activation::HardTanh: return std::abs(z) < 1.0 ? 1.0 : 0.0;
  }
  return 1.0;
}

}  // namespace

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::Tanh: return "tanh";
    case Activation::ReLU: return "relu";
    case Activation::HardTanh: return "hardtanh";
  }
  return "unknown";
}

Activation activation_from_string(std::string_view s) {
  if (s == "tanh") return Activation::Tanh;
  if (s == "relu") return Activation::ReLU;
  if (s == "hardtanh") return Activation::HardTanh;
  throw std::invalid_argument("unknown activation '" + std::string(s) + "' (tanh|relu|hardtanh)");
}

std::size_t FieldShape::param_count() const {
  std::size_t in = state_dim + (time_conditioned ? 1 : 0);
  std::size_t total = 0;
  for (std::size_t w : hidden) {
    total += w * in + w;
    in = w;
  }
  return total + out_dim * in + out_dim;
}

FieldNet::FieldNet(const FieldShape& shape) : shape_(shape) {
  if (shape.state_dim == 0 || shape.out_dim == 0)
    throw std::invalid_argument("field dimensions must be positive");
  std::size_t in = in_dim();
  auto add = [&](std::size_t out) {
    if (out == 0) throw std::invalid_argument("layer width must be positive");
    layers_.push_back(DenseLayer{in, out, std::vector<double>(out * in, 0.0), std::vector<double>(out, 0.0)});
    param_count_ += out * in + out;
    in = out;
  };
  for (std::size_t w : shape.hidden) add(w);
  add(shape.out_dim);
}

ParamVec FieldNet::params() const {
  ParamVec p;
  p.reserve(param_count_);
  for (const auto& L : layers_) {
    p.insert(p.end(), L.weight.begin(), L.weight.end());
    p.insert(p.end(), L.bias.begin(), L.bias.end());
  }
  return p;
}

void FieldNet::set_params(std::span<const double> p) {
  if (p.size() != param_count_)
    throw std::invalid_argument("parameter vector has " + std::to_string(p.size()) + " entries, expected " +
                                std::to_string(param_count_));
  auto it = p.begin();
  for (auto& L : layers_) {
    std::copy_n(it, L.weight.size(), L.weight.begin());
    it += static_cast<std::ptrdiff_t>(L.weight.size());
    std::copy_n(it, L.bias.size(), L.bias.begin());
    it += static_cast<std::ptrdiff_t>(L.bias.size());
  }
}

void FieldNet::forward_batch(std::span<const double> H, std::size_t batch, double c, Tape& tape,
                             std::span<double> out) const {
  const std::size_t sd = state_dim(), in0 = in_dim();
  if (H.size() != batch * sd) throw std::invalid_argument("field input size mismatch");
  if (out.size() != batch * out_dim()) throw std::invalid_argument("field output size mismatch");

  tape.batch = batch;
  tape.inputs.resize(layers_.size());
  tape.pre.resize(layers_.size());

  auto& x0 = tape.inputs[0];
  x0.resize(batch * in0);
  for (std::size_t b = 0; b < batch; ++b) {
    std::copy_n(H.data() + b * sd, sd, x0.data() + b * in0);
    if (shape_.time_conditioned) x0[b * in0 + sd] = c;
  }

  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& L = layers_[l];
    const auto& x = tape.inputs[l];
    auto& z = tape.pre[l];
    z.resize(batch * L.out);
    for (std::size_t b = 0; b < batch; ++b) {
      const double* xb = x.data() + b * L.in;
      for (std::size_t o = 0; o < L.out; ++o) {
        const double* w = L.weight.data() + o * L.in;
        double acc = L.bias[o];
        for (std::size_t i = 0; i < L.in; ++i) acc += w[i] * xb[i];
        z[b * L.out + o] = acc;
      }
    }
    if (l + 1 < layers_.size()) {
      auto& next = tape.inputs[l + 1];
      next.resize(z.size());
      for (std::size_t k = 0; k < z.size(); ++k) next[k] = activate(shape_.activation, z[k]);
    }
  }
  std::copy(tape.pre.back().begin(), tape.pre.back().end(), out.begin());
}

void FieldNet::backward_batch(const Tape& tape, std::span<const double> A, std::span<double> grad_state,
                              std::span<double> grad_params, double param_scale) const {
  const std::size_t batch = tape.batch;
  if (A.size() != batch * out_dim()) throw std::invalid_argument("cotangent size mismatch");
  if (!grad_state.empty() && grad_state.size() != batch * state_dim())
    throw std::invalid_argument("input-gradient size mismatch");
  if (!grad_params.empty() && grad_params.size() != param_count_)
    throw std::invalid_argument("parameter-gradient size mismatch");

  // Offsets of each layer's block inside ParamVec.
  std::vector<std::size_t> offset(layers_.size());
  for (std::size_t l = 0, off = 0; l < layers_.size(); ++l) {
    offset[l] = off;
    off += layers_[l].weight.size() + layers_[l].bias.size();
  }

  std::vector<double> g(A.begin(), A.end());  // cotangent w.r.t. current layer's output
  std::vector<double> gx;
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const auto& L = layers_[li];
    const auto& x = tape.inputs[li];
    if (li + 1 < layers_.size()) {
      const auto& z = tape.pre[li];
      for (std::size_t k = 0; k < g.size(); ++k) g[k] *= activate_grad(shape_.activation, z[k]);
    }
    if (!grad_params.empty()) {
      double* gw = grad_params.data() + offset[li];
      double* gb = gw + L.weight.size();
      for (std::size_t b = 0; b < batch; ++b) {
        const double* xb = x.data() + b * L.in;
        for (std::size_t o = 0; o < L.out; ++o) {
          const double go = param_scale * g[b * L.out + o];
          if (go == 0.0) continue;
          double* row = gw + o * L.in;
          for (std::size_t i = 0; i < L.in; ++i) row[i] += go * xb[i];
          gb[o] += go;
        }
      }
    }
    if (li == 0 && grad_state.empty()) break;
    gx.assign(batch * L.in, 0.0);
    for (std::size_t b = 0; b < batch; ++b) {
      double* gxb = gx.data() + b * L.in;
      for (std::size_t o = 0; o < L.out; ++o) {
        const double go = g[b * L.out + o];
        if (go == 0.0) continue;
        const double* w = L.weight.data() + o * L.in;
        for (std::size_t i = 0; i < L.in; ++i) gxb[i] += go * w[i];
      }
    }
    g.swap(gx);
  }
  if (!grad_state.empty()) {
    const std::size_t sd = state_dim(), in0 = in_dim();
    for (std::size_t b = 0; b < batch; ++b) std::copy_n(g.data() + b * in0, sd, grad_state.data() + b * sd);
  }
}

StateVec FieldNet::forward(std::span<const double> h, double t) const {
  Tape tape;
  StateVec out(out_dim());
  forward_batch(h, 1, t, tape, out);
  return out;
}

StateVec FieldNet::vjp_input(std::span<const double> h, double t, std::span<const double> a) const {
  Tape tape;
  StateVec f(out_dim()), g(state_dim());
  forward_batch(h, 1, t, tape, f);
  backward_batch(tape, a, g, {});
  return g;
}

ParamVec FieldNet::vjp_params(std::span<const double> h, double t, std::span<const double> a) const {
  Tape tape;
  StateVec f(out_dim());
  ParamVec g(param_count_, 0.0);
  forward_batch(h, 1, t, tape, f);
  backward_batch(tape, a, {}, g);
  return g;
}

FieldNet init_field_net(const FieldShape& shape, std::uint64_t seed) {
  FieldNet net(shape);
  std::mt19937_64 rng(seed);
  for (auto& L : net.layers()) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(L.in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& w : L.weight) w = dist(rng);
    std::fill(L.bias.begin(), L.bias.end(), 0.0);
  }
  return net;
}

nlohmann::json field_net_to_json(const FieldNet& net) {
  const auto& s = net.shape();
  return nlohmann::json{{"format", "momenta-field-net"},
                        {"version", kCheckpointVersion},
                        {"state_dim", s.state_dim},
                        {"hidden", s.hidden},
                        {"out_dim", s.out_dim},
                        {"activation", std::string(to_string(s.activation))},
                        {"time_conditioned", s.time_conditioned},
                        {"param_count", net.param_count()},
                        {"params", net.params()}};
}

FieldNet field_net_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "momenta-field-net") throw std::invalid_argument("not a field-net checkpoint");
  if (j.at("version").get<int>() != kCheckpointVersion)
    throw std::invalid_argument("unsupported checkpoint version");
  FieldShape s;
  s.state_dim = j.at("state_dim").get<std::size_t>();
  s.hidden = j.at("hidden").get<std::vector<std::size_t>>();
  s.out_dim = j.at("out_dim").get<std::size_t>();
  s.activation = activation_from_string(j.at("activation").get<std::string>());
  s.time_conditioned = j.at("time_conditioned").get<bool>();
  FieldNet net(s);
  net.set_params(j.at("params").get<std::vector<double>>());
  return net;
}

}  // namespace momenta
