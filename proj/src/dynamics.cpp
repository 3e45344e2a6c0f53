#include "momenta/dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace momenta {

namespace {

constexpr std::array<std::pair<DynamicsKind, std::string_view>, 6> kNames{{
    {DynamicsKind::Vanilla, "node"},
    {DynamicsKind::Augmented, "anode"},
    {DynamicsKind::SecondOrder, "sonode"},
    {DynamicsKind::HeavyBall, "hbnode"},
    {DynamicsKind::GeneralizedHeavyBall, "ghbnode"},
    {DynamicsKind::Adam, "adamnode"},
}};

void require_same(std::size_t a, std::size_t b, const char* what) {
  if (a != b)
    throw std::invalid_argument(std::string("dimension mismatch: ") + what + " (" + std::to_string(a) +
                                " vs " + std::to_string(b) + ")");
}

}  // namespace

void AdamParams::validate() const {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in [0, 1)");
  if (!(beta >= 0.0 && beta < 1.0)) throw std::invalid_argument("beta must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
}

double HeavyBallParams::gamma() const { return 1.0 / (1.0 + std::exp(-theta)); }

double HeavyBallParams::gamma_grad() const {
  const double g = gamma();
  return g * (1.0 - g);
}

std::string_view model_name(DynamicsKind k) {
  for (const auto& [kind, name] : kNames)
    if (kind == k) return name;
  return "unknown";
}

DynamicsKind kind_from_name(std::string_view name) {
  for (const auto& [kind, n] : kNames)
    if (n == name) return kind;
  if (name == "adam") return DynamicsKind::Adam;
  throw std::invalid_argument("unknown model '" + std::string(name) + "'; valid: " + valid_model_names());
}

std::string valid_model_names() {
  std::string s;
  for (const auto& [kind, n] : kNames) {
    if (!s.empty()) s += "|";
    s += n;
  }
  return s;
}

DynamicsSpec DynamicsSpec::vanilla() { return DynamicsSpec{}; }

DynamicsSpec DynamicsSpec::augmented(std::size_t aug_width) {
  DynamicsSpec s;
  s.kind = DynamicsKind::Augmented;
  s.aug_width = aug_width;
  return s;
}

DynamicsSpec DynamicsSpec::second_order() {
  DynamicsSpec s;
  s.kind = DynamicsKind::SecondOrder;
  return s;
}

DynamicsSpec DynamicsSpec::heavy_ball(HeavyBallParams hb) {
  DynamicsSpec s;
  s.kind = DynamicsKind::HeavyBall;
  s.hb = hb;
  return s;
}

DynamicsSpec DynamicsSpec::generalized_heavy_ball(HeavyBallParams hb, double saturation_bound) {
  DynamicsSpec s;
  s.kind = DynamicsKind::GeneralizedHeavyBall;
  s.hb = hb;
  s.saturation_bound = saturation_bound;
  return s;
}

DynamicsSpec DynamicsSpec::adam_node(AdamParams p, InitialMoments init) {
  DynamicsSpec s;
  s.kind = DynamicsKind::Adam;
  s.adam = p;
  s.init = init;
  return s;
}

DynamicsSpec DynamicsSpec::defaults_for(DynamicsKind k) {
  switch (k) {
    case DynamicsKind::Vanilla: return vanilla();
    case DynamicsKind::Augmented: return augmented();
    case DynamicsKind::SecondOrder: return second_order();
    case DynamicsKind::HeavyBall: return heavy_ball();
    case DynamicsKind::GeneralizedHeavyBall: return generalized_heavy_ball();
    case DynamicsKind::Adam: return adam_node();
  }
  return vanilla();
}

void DynamicsSpec::validate() const {
  const bool wants_adam = kind == DynamicsKind::Adam;
  const bool wants_hb = kind == DynamicsKind::HeavyBall || kind == DynamicsKind::GeneralizedHeavyBall;
  const bool wants_aug = kind == DynamicsKind::Augmented;
  const bool wants_sat = kind == DynamicsKind::GeneralizedHeavyBall;
  if (adam.has_value() != wants_adam) throw std::invalid_argument("adam parameters present iff kind is adamnode");
  if (hb.has_value() != wants_hb) throw std::invalid_argument("damping parameter present iff kind is (g)hbnode");
  if (aug_width.has_value() != wants_aug) throw std::invalid_argument("aug_width present iff kind is anode");
  if (saturation_bound.has_value() != wants_sat)
    throw std::invalid_argument("saturation_bound present iff kind is ghbnode");
  if (adam) adam->validate();
  if (hb && !std::isfinite(hb->theta)) throw std::invalid_argument("theta must be finite");
  if (aug_width && *aug_width < 1) throw std::invalid_argument("aug_width must be >= 1");
  if (saturation_bound && !(*saturation_bound > 0.0)) throw std::invalid_argument("saturation_bound must be > 0");
  if (wants_adam && !(init.v0 >= 0.0)) throw std::invalid_argument("v0 must be >= 0");
}

std::size_t DynamicsSpec::blocks() const {
  switch (kind) {
    case DynamicsKind::Vanilla:
    case DynamicsKind::Augmented: return 1;
    case DynamicsKind::SecondOrder:
    case DynamicsKind::HeavyBall:
    case DynamicsKind::GeneralizedHeavyBall: return 2;
    case DynamicsKind::Adam: return 3;
  }
  return 1;
}

std::size_t DynamicsSpec::block_width(std::size_t d) const { return d + aug_width.value_or(0); }

std::size_t DynamicsSpec::field_state_dim(std::size_t d) const {
  return kind == DynamicsKind::SecondOrder ? 2 * d : block_width(d);
}

nlohmann::json to_json(const DynamicsSpec& spec) {
  nlohmann::json j{{"kind", std::string(model_name(spec.kind))}};
  if (spec.adam) {
    j["alpha"] = spec.adam->alpha;
    j["beta"] = spec.adam->beta;
    j["epsilon"] = spec.adam->epsilon;
    j["v0"] = spec.init.v0;
  }
  if (spec.hb) j["theta"] = spec.hb->theta;
  if (spec.aug_width) j["aug_width"] = *spec.aug_width;
  if (spec.saturation_bound) j["saturation_bound"] = *spec.saturation_bound;
  if (spec.blocks() > 1) j["m0"] = spec.init.m0;
  return j;
}

DynamicsSpec dynamics_from_json(const nlohmann::json& j) {
  DynamicsSpec s = DynamicsSpec::defaults_for(kind_from_name(j.at("kind").get<std::string>()));
  if (s.adam) {
    s.adam->alpha = j.value("alpha", s.adam->alpha);
    s.adam->beta = j.value("beta", s.adam->beta);
    s.adam->epsilon = j.value("epsilon", s.adam->epsilon);
    s.init.v0 = j.value("v0", s.init.v0);
  }
  if (s.hb) s.hb->theta = j.value("theta", s.hb->theta);
  if (s.aug_width) s.aug_width = j.value("aug_width", *s.aug_width);
  if (s.saturation_bound) s.saturation_bound = j.value("saturation_bound", *s.saturation_bound);
  if (s.blocks() > 1) s.init.m0 = j.value("m0", s.init.m0);
  s.validate();
  return s;
}

StateVec pack(const PackedState& s) {
  StateVec z;
  z.reserve(s.h.size() + s.m.size() + s.v.size());
  z.insert(z.end(), s.h.begin(), s.h.end());
  z.insert(z.end(), s.m.begin(), s.m.end());
  z.insert(z.end(), s.v.begin(), s.v.end());
  return z;
}

PackedState unpack(std::span<const double> z, std::size_t blocks, std::size_t width) {
  if (blocks < 1 || blocks > 3) throw std::invalid_argument("block count must be 1, 2 or 3");
  require_same(z.size(), blocks * width, "packed state");
  PackedState s;
  s.h.assign(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(width));
  if (blocks > 1) s.m.assign(z.begin() + static_cast<std::ptrdiff_t>(width), z.begin() + static_cast<std::ptrdiff_t>(2 * width));
  if (blocks > 2) s.v.assign(z.begin() + static_cast<std::ptrdiff_t>(2 * width), z.end());
  return s;
}

StateVec augment(std::span<const double> h, std::size_t aug_width) {
  StateVec out(h.begin(), h.end());
  out.resize(h.size() + aug_width, 0.0);
  return out;
}

double saturate(double x, double bound) { return std::clamp(x, -bound, bound); }

void adam_kernel(std::span<const double> m, std::span<const double> v, std::span<const double> signal,
                 const AdamParams& p, std::span<double> dh, std::span<double> dm, std::span<double> dv) {
  const std::size_t d = m.size();
  require_same(v.size(), d, "v block");
  require_same(signal.size(), d, "gradient signal");
  for (std::size_t i = 0; i < d; ++i) {
    // v is clamped at zero: the exact flow keeps v >= 0, integration error may not.
    const double denom = std::sqrt(std::max(v[i], 0.0) + p.epsilon);
    dh[i] = -m[i] / denom;
    dm[i] = (1.0 - p.alpha) * (signal[i] - m[i]);
    dv[i] = (1.0 - p.beta) * (signal[i] * signal[i] - v[i]);
  }
}

void heavy_ball_kernel(std::span<const double> m, std::span<const double> force, double gamma,
                       std::optional<double> saturation_bound, std::span<double> dh, std::span<double> dm) {
  const std::size_t d = m.size();
  require_same(force.size(), d, "field output");
  for (std::size_t i = 0; i < d; ++i) {
    dh[i] = saturation_bound ? -saturate(m[i], *saturation_bound) : -m[i];
    dm[i] = -gamma * m[i] + force[i];
  }
}

RhsFn gradient_flow(GradFn grad) {
  return [grad = std::move(grad)](double, std::span<const double> x, std::span<double> dx) {
    grad(x, dx);
    for (double& g : dx) g = -g;
  };
}

RhsFn heavy_ball_flow(GradFn grad, double gamma) {
  return [grad = std::move(grad), gamma, g = StateVec{}](double, std::span<const double> z,
                                                         std::span<double> dz) mutable {
    const std::size_t d = z.size() / 2;
    g.resize(d);
    grad(z.first(d), g);
    heavy_ball_kernel(z.subspan(d, d), g, gamma, std::nullopt, dz.first(d), dz.subspan(d, d));
  };
}

RhsFn adam_flow(GradFn grad, AdamParams p) {
  p.validate();
  return [grad = std::move(grad), p, g = StateVec{}](double, std::span<const double> z,
                                                     std::span<double> dz) mutable {
    const std::size_t d = z.size() / 3;
    g.resize(d);
    grad(z.first(d), g);
    adam_kernel(z.subspan(d, d), z.subspan(2 * d, d), g, p, dz.first(d), dz.subspan(d, d), dz.subspan(2 * d, d));
  };
}

PackedState adam_ode_rhs(double, const PackedState& s, const GradFn& grad, const AdamParams& p) {
  const std::size_t d = s.h.size();
  require_same(s.m.size(), d, "m block");
  StateVec g(d);
  grad(s.h, g);
  PackedState out{StateVec(d), StateVec(d), StateVec(d)};
  adam_kernel(s.m, s.v, g, p, out.h, out.m, out.v);
  return out;
}

AdamIterate discrete_adam_step(const AdamIterate& it, const GradFn& grad, double s, const AdamParams& p) {
  if (!(s > 0.0)) throw std::invalid_argument("step size must be positive");
  const std::size_t d = it.x.size();
  require_same(it.m.size(), d, "m");
  require_same(it.v.size(), d, "v");
  AdamIterate next{StateVec(d), StateVec(d), StateVec(d)};
  for (std::size_t i = 0; i < d; ++i) next.x[i] = it.x[i] - s * it.m[i] / std::sqrt(it.v[i] + p.epsilon);
  StateVec g(d);
  grad(next.x, g);
  for (std::size_t i = 0; i < d; ++i) {
    next.m[i] = p.alpha * it.m[i] + (1.0 - p.alpha) * g[i];
    next.v[i] = p.beta * it.v[i] + (1.0 - p.beta) * g[i] * g[i];
  }
  return next;
}

PackedState vanilla_rhs(double t, const PackedState& s, const FieldNet& field) {
  require_same(field.state_dim(), s.h.size(), "field input");
  require_same(field.out_dim(), s.h.size(), "field output");
  return PackedState{field.forward(s.h, t), {}, {}};
}

PackedState augmented_rhs(double t, const PackedState& s, const FieldNet& field, std::size_t aug_width,
                          std::size_t d) {
  require_same(s.h.size(), d + aug_width, "augmented state");
  return vanilla_rhs(t, s, field);
}

PackedState sonode_rhs(double t, const PackedState& s, const FieldNet& field) {
  const std::size_t d = s.h.size();
  require_same(s.m.size(), d, "m block");
  require_same(field.state_dim(), 2 * d, "field input (h, m)");
  require_same(field.out_dim(), d, "field output");
  StateVec hm = pack(PackedState{s.h, s.m, {}});
  return PackedState{s.m, field.forward(hm, t), {}};
}

PackedState hb_node_rhs(double t, const PackedState& s, const FieldNet& field, const HeavyBallParams& hb) {
  const std::size_t d = s.h.size();
  require_same(s.m.size(), d, "m block");
  require_same(field.state_dim(), d, "field input");
  const StateVec f = field.forward(s.h, t);
  PackedState out{StateVec(d), StateVec(d), {}};
  heavy_ball_kernel(s.m, f, hb.gamma(), std::nullopt, out.h, out.m);
  return out;
}

PackedState ghb_node_rhs(double t, const PackedState& s, const FieldNet& field, const HeavyBallParams& hb,
                         double saturation_bound) {
  const std::size_t d = s.h.size();
  require_same(s.m.size(), d, "m block");
  require_same(field.state_dim(), d, "field input");
  const StateVec f = field.forward(s.h, t);
  PackedState out{StateVec(d), StateVec(d), {}};
  heavy_ball_kernel(s.m, f, hb.gamma(), saturation_bound, out.h, out.m);
  return out;
}

PackedState adam_node_rhs(double t, const PackedState& s, const FieldNet& field, const AdamParams& p) {
  const std::size_t d = s.h.size();
  require_same(s.m.size(), d, "m block");
  require_same(s.v.size(), d, "v block");
  require_same(field.state_dim(), d, "field input");
  StateVec signal = field.forward(s.h, t);
  for (double& x : signal) x = -x;
  PackedState out{StateVec(d), StateVec(d), StateVec(d)};
  adam_kernel(s.m, s.v, signal, p, out.h, out.m, out.v);
  return out;
}

}  // namespace momenta
