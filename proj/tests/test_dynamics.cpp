#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "momenta/dynamics.hpp"
#include "momenta/neural_model.hpp"

using namespace momenta;

namespace {

/// Affine field without hidden layers: f(x) = W x + b.
FieldNet affine_field(std::size_t in, std::size_t out, std::vector<double> w, std::vector<double> b) {
  FieldShape s;
  s.state_dim = in;
  s.out_dim = out;
  s.hidden = {};
  s.time_conditioned = false;
  FieldNet net(s);
  w.insert(w.end(), b.begin(), b.end());
  net.set_params(w);
  return net;
}

PackedState state(StateVec h, StateVec m = {}, StateVec v = {}) { return {std::move(h), std::move(m), std::move(v)}; }

const GradFn kQuadratic = [](std::span<const double> x, std::span<double> g) {
  std::copy(x.begin(), x.end(), g.begin());
};

}  // namespace

TEST_CASE("adam flow substitution examples") {
  const AdamParams p{0.9, 0.99, 1e-5};
  const GradFn two = [](std::span<const double>, std::span<double> g) { g[0] = 2.0; };
  const auto d = adam_ode_rhs(0.0, state({0.0}, {0.0}, {0.0}), two, p);
  CHECK(d.m[0] == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(d.v[0] == doctest::Approx(0.04).epsilon(1e-14));
  CHECK(d.h[0] == 0.0);

  const GradFn zero = [](std::span<const double>, std::span<double> g) { std::fill(g.begin(), g.end(), 0.0); };
  const auto s = adam_ode_rhs(0.0, state({1.0, 2.0}, {0.0, 0.0}, {1.0, 0.5}), zero, p);
  CHECK(s.h == StateVec{0.0, 0.0});
  CHECK(s.m == StateVec{0.0, 0.0});
  CHECK(s.v[0] == doctest::Approx(-0.01));
  CHECK(s.v[1] == doctest::Approx(-0.005));
}

TEST_CASE("adam flow on a quadratic approaches the minimizer") {
  const AdamParams p{};
  const double y0[] = {1.0, 0.0, 1.0};
  const double ts[] = {200.0};
  const auto r = solve_dopri45(adam_flow(kQuadratic, p), y0, 0.0, 200.0, IntegratorConfig::tight(1e-9), ts);
  REQUIRE(r.ok());
  CHECK(std::abs(r.y_final[0]) < 1e-2);
}

TEST_CASE("adamnode substitution example") {
  const FieldNet f = affine_field(1, 1, {0.0}, {1.0});
  const AdamParams p{0.9, 0.99, 1.0};
  const auto d = adam_node_rhs(0.0, state({0.3}, {1.0}, {3.0}), f, p);
  CHECK(d.h[0] == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK(d.m[0] == doctest::Approx(-0.2).epsilon(1e-14));
  CHECK(d.v[0] == doctest::Approx(-0.02).epsilon(1e-14));

  const FieldNet zero = affine_field(1, 1, {0.0}, {0.0});
  const auto z = adam_node_rhs(0.0, state({0.3}, {0.0}, {1.0}), zero, p);
  CHECK(z.h[0] == 0.0);
  CHECK(z.m[0] == 0.0);
}

TEST_CASE("heavy-ball damping and right-hand side") {
  CHECK(HeavyBallParams{-3.0}.gamma() == doctest::Approx(0.04742587).epsilon(1e-7));
  const HeavyBallParams hb{0.3};
  const double g = hb.gamma();
  CHECK(hb.gamma_grad() == doctest::Approx(g * (1 - g)));
  for (double th : {-800.0, -30.0, 0.0, 30.0, 800.0}) {
    const double gamma = HeavyBallParams{th}.gamma();
    CHECK(gamma >= 0.0);
    CHECK(gamma <= 1.0);
  }
  for (double th : {-20.0, -3.0, 0.0, 3.0, 20.0}) {
    const double gamma = HeavyBallParams{th}.gamma();
    CHECK(gamma > 0.0);
    CHECK(gamma < 1.0);
  }

  const FieldNet one = affine_field(1, 1, {0.0}, {1.0});
  const auto d = hb_node_rhs(0.0, state({2.0}, {0.0}), one, HeavyBallParams{-3.0});
  CHECK(d.h[0] == 0.0);
  CHECK(d.m[0] == 1.0);
}

TEST_CASE("heavy-ball momentum decays exponentially under a null field") {
  const FieldNet zero = affine_field(1, 1, {0.0}, {0.0});
  const DynamicsSpec spec = DynamicsSpec::heavy_ball(HeavyBallParams{0.4});
  const NeuralOde model(spec, zero, 1);
  const double z0[] = {0.0, 1.5};
  const double ts[] = {3.0};
  const auto r = solve_dopri45(model.rhs_fn(), z0, 0.0, 3.0, IntegratorConfig::tight(1e-11), ts);
  REQUIRE(r.ok());
  const double gamma = spec.hb->gamma();
  CHECK(r.y_final[1] == doctest::Approx(1.5 * std::exp(-gamma * 3.0)).epsilon(1e-9));
  CHECK(r.y_final[0] == doctest::Approx(-1.5 * (1 - std::exp(-gamma * 3.0)) / gamma).epsilon(1e-9));
}

TEST_CASE("saturated heavy ball clamps the position velocity") {
  const FieldNet zero = affine_field(1, 1, {0.0}, {0.0});
  CHECK(ghb_node_rhs(0.0, state({0.0}, {10.0}), zero, {}, 1.0).h[0] == -1.0);
  CHECK(ghb_node_rhs(0.0, state({0.0}, {-10.0}), zero, {}, 1.0).h[0] == 1.0);
  CHECK(ghb_node_rhs(0.0, state({0.0}, {0.5}), zero, {}, 1.0).h[0] == -0.5);
  CHECK(hb_node_rhs(0.0, state({0.0}, {0.5}), zero, {}).h[0] == -0.5);
  CHECK(saturate(3.0, 2.0) == 2.0);
  CHECK(saturate(-3.0, 2.0) == -2.0);
  CHECK(saturate(1.0, 2.0) == 1.0);
}

TEST_CASE("saturated heavy ball stays bounded along a long solve") {
  const double bound = 0.25;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto spec = DynamicsSpec::generalized_heavy_ball({}, bound);
    FieldNet field = init_field_net(field_shape_for(spec, 3, {16}), seed);
    ParamVec p = field.params();
    for (double& x : p) x *= 4.0;
    field.set_params(p);
    const NeuralOde model(spec, field, 3);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 3.0);
    StateVec z0(6);
    for (double& x : z0) x = n(rng);
    double worst = 0.0;
    RhsFn rhs = [&](double t, std::span<const double> z, std::span<double> dz) {
      model.rhs(t, z, dz);
      for (std::size_t i = 0; i < 3; ++i) worst = std::max(worst, std::abs(dz[i]));
    };
    const double ts[] = {30.0};
    const auto r = solve_dopri45(rhs, z0, 0.0, 30.0, {}, ts);
    REQUIRE(r.ok());
    CHECK(worst <= bound);
  }
}

TEST_CASE("second-order free motion and oscillator") {
  const FieldNet zero = affine_field(2, 1, {0.0, 0.0}, {0.0});
  const NeuralOde free_model(DynamicsSpec::second_order(), zero, 1);
  const double z0[] = {1.0, 0.5};
  const double ts[] = {4.0};
  auto r = solve_dopri45(free_model.rhs_fn(), z0, 0.0, 4.0, IntegratorConfig::tight(1e-10), ts);
  REQUIRE(r.ok());
  CHECK(r.y_final[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(r.y_final[1] == doctest::Approx(0.5).epsilon(1e-12));

  const double rest[] = {1.0, 0.0};
  r = solve_dopri45(free_model.rhs_fn(), rest, 0.0, 4.0, {}, ts);
  CHECK(r.y_final[0] == 1.0);
  CHECK(r.y_final[1] == 0.0);

  const FieldNet spring = affine_field(2, 1, {-1.0, 0.0}, {0.0});
  const auto d = sonode_rhs(0.0, state({2.0}, {0.5}), spring);
  CHECK(d.h[0] == 0.5);
  CHECK(d.m[0] == -2.0);
  const NeuralOde osc(DynamicsSpec::second_order(), spring, 1);
  const double T = 2 * std::numbers::pi;
  const double end[] = {T};
  r = solve_dopri45(osc.rhs_fn(), rest, 0.0, T, IntegratorConfig::tight(1e-10), end);
  REQUIRE(r.ok());
  CHECK(r.y_final[0] == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("vanilla and augmented formulations") {
  const FieldNet decay = affine_field(1, 1, {-1.0}, {0.0});
  const NeuralOde node(DynamicsSpec::vanilla(), decay, 1);
  const double h0[] = {1.0};
  const double ts[] = {1.0};
  const auto r = solve_dopri45(node.rhs_fn(), h0, 0.0, 1.0, IntegratorConfig::tight(1e-10), ts);
  CHECK(r.y_final[0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
  CHECK(vanilla_rhs(0.0, state({2.0}), decay).h[0] == -2.0);

  const auto spec = DynamicsSpec::augmented(2);
  CHECK(spec.block_width(3) == 5);
  const double x[] = {1.0, 2.0, 3.0};
  CHECK(augment(x, 2) == StateVec{1.0, 2.0, 3.0, 0.0, 0.0});
  const NeuralOde anode(spec, init_field_net(field_shape_for(spec, 3, {4}), 0), 3);
  CHECK(anode.initial_state(x, 1) == StateVec{1.0, 2.0, 3.0, 0.0, 0.0});

  const FieldNet zero5 = affine_field(5, 5, StateVec(25, 0.0), StateVec(5, 0.0));
  const auto d = augmented_rhs(0.0, state({1.0, 2.0, 3.0, 0.0, 0.0}), zero5, 2, 3);
  CHECK(d.h == StateVec(5, 0.0));
  CHECK_THROWS_AS(augmented_rhs(0.0, state({1.0, 2.0, 3.0}), zero5, 2, 3), std::invalid_argument);
}

TEST_CASE("discrete adam update") {
  const AdamParams p{0.9, 0.99, 1e-8};
  const GradFn zero = [](std::span<const double>, std::span<double> g) { std::fill(g.begin(), g.end(), 0.0); };
  const auto a = discrete_adam_step({{1.0, -1.0}, {0.0, 0.0}, {2.0, 4.0}}, zero, 0.1, p);
  CHECK(a.x == StateVec{1.0, -1.0});
  CHECK(a.m == StateVec{0.0, 0.0});
  CHECK(a.v[0] == doctest::Approx(0.99 * 2.0));
  CHECK(a.v[1] == doctest::Approx(0.99 * 4.0));

  const auto b = discrete_adam_step({{1.0}, {1.0}, {0.0}}, zero, 0.1, p);
  CHECK(b.x[0] == doctest::Approx(-999.0).epsilon(1e-12));
  CHECK_THROWS_AS(discrete_adam_step({{1.0}, {1.0}, {0.0}}, zero, 0.0, p), std::invalid_argument);
}

TEST_CASE("discrete adam converges to the flow as the step shrinks") {
  // One step of size s with retentions 1 - s(1-α), 1 - s(1-β) is a
  // first-order discretization of the flow with retentions α, β.
  const AdamParams flow{0.9, 0.99, 1e-5};
  const double T = 2.0;
  const double y0[] = {1.0, 0.0, 1.0};
  const double ts[] = {T};
  const auto ref = solve_dopri45(adam_flow(kQuadratic, flow), y0, 0.0, T, IntegratorConfig::tight(1e-12), ts);
  REQUIRE(ref.ok());
  std::vector<double> errs;
  for (double s : {1e-2, 1e-3, 1e-4}) {
    const AdamParams disc{1 - s * (1 - flow.alpha), 1 - s * (1 - flow.beta), flow.epsilon};
    AdamIterate it{{1.0}, {0.0}, {1.0}};
    const auto steps = static_cast<std::size_t>(std::llround(T / s));
    for (std::size_t k = 0; k < steps; ++k) it = discrete_adam_step(it, kQuadratic, s, disc);
    errs.push_back(std::abs(it.x[0] - ref.y_final[0]) + std::abs(it.m[0] - ref.y_final[1]) +
                   std::abs(it.v[0] - ref.y_final[2]));
  }
  CHECK(errs[0] > errs[1]);
  CHECK(errs[1] > errs[2]);
  CHECK(errs[2] < 1e-3);
}

TEST_CASE("second moment stays non-negative from a zero start") {
  const auto spec = DynamicsSpec::adam_node(AdamParams{}, InitialMoments{0.0, 0.0});
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    FieldNet field = init_field_net(field_shape_for(spec, 2, {16}), 100 + trial);
    ParamVec p = field.params();
    std::mt19937_64 rng(trial);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (double& x : p) x += 0.5 * u(rng);
    field.set_params(p);
    const NeuralOde model(spec, field, 2);
    const double h0[] = {u(rng), u(rng)};
    const StateVec z0 = model.initial_state(h0, 1);
    std::vector<double> ts;
    for (int k = 1; k <= 100; ++k) ts.push_back(0.1 * k);
    const auto r = solve_dopri45(model.rhs_fn(), z0, 0.0, 10.0, IntegratorConfig::tight(1e-8), ts);
    REQUIRE(r.ok());
    double lowest = 0.0;
    for (const auto& z : r.states) lowest = std::min({lowest, z[4], z[5]});
    CHECK(lowest >= -1e-6);
  }
}

TEST_CASE("heavy ball agrees with its second-order form") {
  // With dh/dt = -m the pair reduces to h'' + γ h' = -f(h, t).
  const auto spec = DynamicsSpec::heavy_ball(HeavyBallParams{0.2});
  const FieldNet field = init_field_net(field_shape_for(spec, 2, {8}), 6);
  const NeuralOde model(spec, field, 2);
  const double gamma = spec.hb->gamma();
  RhsFn second = [&](double t, std::span<const double> y, std::span<double> dy) {
    const auto f = field.forward(y.first(2), t);
    dy[0] = y[2];
    dy[1] = y[3];
    dy[2] = -gamma * y[2] - f[0];
    dy[3] = -gamma * y[3] - f[1];
  };
  const double rtol = 1e-9;
  const double z0[] = {0.5, -0.3, 0.2, 0.1};
  const double u0[] = {0.5, -0.3, -0.2, -0.1};  // h' = -m
  std::vector<double> ts;
  for (int k = 1; k <= 20; ++k) ts.push_back(0.25 * k);
  const auto a = solve_dopri45(model.rhs_fn(), z0, 0.0, 5.0, IntegratorConfig::tight(rtol), ts);
  const auto b = solve_dopri45(second, u0, 0.0, 5.0, IntegratorConfig::tight(rtol), ts);
  REQUIRE(a.ok());
  REQUIRE(b.ok());
  for (std::size_t k = 0; k < ts.size(); ++k)
    for (std::size_t i = 0; i < 2; ++i)
      CHECK(std::abs(a.states[k][i] - b.states[k][i]) <= 10 * rtol * std::max(1.0, std::abs(b.states[k][i])));
}

TEST_CASE("pack and unpack are inverse for every formulation") {
  for (std::size_t d : {1u, 2u, 7u})
    for (auto k : {DynamicsKind::Vanilla, DynamicsKind::Augmented, DynamicsKind::SecondOrder, DynamicsKind::HeavyBall,
                   DynamicsKind::GeneralizedHeavyBall, DynamicsKind::Adam}) {
      const auto spec = DynamicsSpec::defaults_for(k);
      const std::size_t w = spec.block_width(d), n = spec.blocks() * w;
      StateVec z(n);
      for (std::size_t i = 0; i < n; ++i) z[i] = 0.5 * static_cast<double>(i) - 1.0;
      const auto s = unpack(z, spec.blocks(), w);
      CHECK(s.h.size() == w);
      CHECK(pack(s) == z);
    }
  CHECK_THROWS_AS(unpack(StateVec(5), 2, 2), std::invalid_argument);
}

TEST_CASE("block layout per formulation") {
  CHECK(DynamicsSpec::vanilla().blocks() == 1);
  CHECK(DynamicsSpec::second_order().blocks() == 2);
  CHECK(DynamicsSpec::second_order().field_state_dim(3) == 6);
  CHECK(DynamicsSpec::heavy_ball().blocks() == 2);
  CHECK(DynamicsSpec::adam_node().blocks() == 3);
  const auto spec = DynamicsSpec::adam_node();
  const NeuralOde m(spec, init_field_net(field_shape_for(spec, 2, {4}), 0), 2);
  const double h0[] = {1.0, 2.0, 3.0, 4.0};
  CHECK(m.initial_state(h0, 2) == StateVec{1, 2, 0, 0, 1, 1, 3, 4, 0, 0, 1, 1});
}

TEST_CASE("spec validation rejects foreign parameter blocks") {
  auto s = DynamicsSpec::vanilla();
  s.adam = AdamParams{};
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  auto a = DynamicsSpec::adam_node();
  a.adam->beta = 1.0;
  CHECK_THROWS_AS(a.validate(), std::invalid_argument);
  a.adam->beta = 0.99;
  a.adam->epsilon = 0.0;
  CHECK_THROWS_AS(a.validate(), std::invalid_argument);
  CHECK_THROWS_AS(DynamicsSpec::generalized_heavy_ball({}, 0.0).validate(), std::invalid_argument);
  CHECK_THROWS_AS(DynamicsSpec::augmented(0).validate(), std::invalid_argument);
}

TEST_CASE("names and json round trip") {
  CHECK(kind_from_name("adam") == DynamicsKind::Adam);
  CHECK(kind_from_name("adamnode") == DynamicsKind::Adam);
  CHECK(kind_from_name("ghbnode") == DynamicsKind::GeneralizedHeavyBall);
  CHECK_THROWS_AS(kind_from_name("lstm"), std::invalid_argument);
  for (auto k : {DynamicsKind::Vanilla, DynamicsKind::Augmented, DynamicsKind::SecondOrder, DynamicsKind::HeavyBall,
                 DynamicsKind::GeneralizedHeavyBall, DynamicsKind::Adam})
    CHECK(kind_from_name(model_name(k)) == k);

  auto spec = DynamicsSpec::adam_node(AdamParams{0.8, 0.95, 1e-3}, InitialMoments{0.1, 0.5});
  auto back = dynamics_from_json(nlohmann::json::parse(to_json(spec).dump()));
  CHECK(back.adam->alpha == 0.8);
  CHECK(back.adam->beta == 0.95);
  CHECK(back.adam->epsilon == 1e-3);
  CHECK(back.init.v0 == 0.5);
  CHECK(back.init.m0 == 0.1);

  const auto g = dynamics_from_json({{"kind", "ghbnode"}, {"theta", 1.5}, {"saturation_bound", 0.3}});
  CHECK(g.hb->theta == 1.5);
  CHECK(*g.saturation_bound == 0.3);
  CHECK(to_json(g).at("kind") == "ghbnode");
  CHECK_THROWS(dynamics_from_json({{"kind", "adam"}, {"beta", 1.5}}));
}
