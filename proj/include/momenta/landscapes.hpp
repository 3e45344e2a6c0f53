#pragma once

// Two-dimensional test objectives for the optimization-flow comparison.

#include <array>
#include <span>
#include <string>
#include <string_view>

#include "momenta/dynamics.hpp"

namespace momenta {

double rosenbrock_eval(std::span<const double> x);
void rosenbrock_grad(std::span<const double> x, std::span<double> g);
double beale_eval(std::span<const double> x);
void beale_grad(std::span<const double> x, std::span<double> g);

struct Landscape {
  std::string name;
  double (*eval)(std::span<const double>);
  void (*grad)(std::span<const double>, std::span<double>);
  std::array<double, 2> minimizer;
  std::array<double, 2> default_start;

  GradFn grad_fn() const { return grad; }
};

/// F = (1-x)² + 100(y-x²)², minimizer (1, 1), default start (-2, 2).
const Landscape& rosenbrock();
/// F = (1.5-x+xy)² + (2.25-x+xy²)² + (2.625-x+xy³)², minimizer (3, 0.5),
/// default start (-4, -4).
const Landscape& beale();
/// "rosenbrock" or "beale"; throws std::invalid_argument otherwise.
const Landscape& landscape_from_name(std::string_view name);

}  // namespace momenta
