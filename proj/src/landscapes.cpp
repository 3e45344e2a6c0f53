#include "momenta/landscapes.hpp"

#include <stdexcept>

namespace momenta {

double rosenbrock_eval(std::span<const double> p) {
  const double x = p[0], y = p[1];
  return (1 - x) * (1 - x) + 100 * (y - x * x) * (y - x * x);
}

void rosenbrock_grad(std::span<const double> p, std::span<double> g) {
  const double x = p[0], y = p[1];
  g[0] = -2 * (1 - x) - 400 * x * (y - x * x);
  g[1] = 200 * (y - x * x);
}

double beale_eval(std::span<const double> p) {
  const double x = p[0], y = p[1];
  const double a = 1.5 - x + x * y, b = 2.25 - x + x * y * y, c = 2.625 - x + x * y * y * y;
  return a * a + b * b + c * c;
}

void beale_grad(std::span<const double> p, std::span<double> g) {
  const double x = p[0], y = p[1];
  const double a = 1.5 - x + x * y, b = 2.25 - x + x * y * y, c = 2.625 - x + x * y * y * y;
  g[0] = 2 * a * (y - 1) + 2 * b * (y * y - 1) + 2 * c * (y * y * y - 1);
  g[1] = 2 * a * x + 4 * b * x * y + 6 * c * x * y * y;
}

const Landscape& rosenbrock() {
  static const Landscape l{"rosenbrock", rosenbrock_eval, rosenbrock_grad, {1.0, 1.0}, {-2.0, 2.0}};
  return l;
}

const Landscape& beale() {
  static const Landscape l{"beale", beale_eval, beale_grad, {3.0, 0.5}, {-4.0, -4.0}};
  return l;
}

const Landscape& landscape_from_name(std::string_view name) {
  if (name == "rosenbrock") return rosenbrock();
  if (name == "beale") return beale();
  throw std::invalid_argument("unknown landscape '" + std::string(name) + "' (valid: rosenbrock, beale)");
}

}  // namespace momenta
