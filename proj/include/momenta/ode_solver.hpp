#pragma once

// Explicit integrators over flat real state vectors: adaptive Dormand-Prince
// 4(5) with dense output, and classical fixed-step RK4. Every right-hand-side
// invocation is counted.

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace momenta {

using StateVec = std::vector<double>;

/// Right-hand side dy/dt = f(t, y). Writes the derivative into `dydt`, which
/// has the same length as `y`.
using RhsFn = std::function<void(double t, std::span<const double> y, std::span<double> dydt)>;

struct IntegratorConfig {
  double rtol = 1e-6;
  double atol = 1e-6;
  double h_init = 1e-3;
  double h_min = 1e-12;
  double h_max = std::numeric_limits<double>::infinity();
  std::size_t max_steps = 1'000'000;
  double safety = 0.9;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;

  static IntegratorConfig tight(double tol) {
    IntegratorConfig c;
    c.rtol = tol;
    c.atol = tol;
    return c;
  }
};

enum class SolveStatus { Success, StepBudgetExhausted, StepUnderflow, NonFiniteState };

std::string_view to_string(SolveStatus s);

/// Piecewise dense representation of an accepted-step trajectory, using the
/// 4th-order Dormand-Prince continuous extension on every step.
class DenseTrajectory {
 public:
  DenseTrajectory() = default;
  explicit DenseTrajectory(std::size_t dim) : dim_(dim) {}

  void append_step(double t_old, double h, std::span<const double> coeffs);

  std::size_t dim() const { return dim_; }
  std::size_t steps() const { return t_old_.size(); }
  bool empty() const { return t_old_.empty(); }
  double step_start(std::size_t i) const { return t_old_.at(i); }
  double step_size(std::size_t i) const { return h_.at(i); }
  /// Solver state at the start of step i, exactly as the solver held it.
  std::span<const double> step_start_state(std::size_t i) const {
    return std::span<const double>(coeffs_).subspan(5 * dim_ * i, dim_);
  }

  /// Evaluates the interpolant at t (must lie inside the covered interval,
  /// up to rounding).
  void evaluate(double t, std::span<double> out) const;

 private:
  std::size_t dim_ = 0;
  std::vector<double> t_old_;
  std::vector<double> h_;
  std::vector<double> coeffs_;  // 5 * dim per step
};

struct SolveResult {
  std::vector<double> ts;
  std::vector<StateVec> states;
  std::size_t nfe = 0;
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;
  SolveStatus status = SolveStatus::Success;
  /// Time reached; equals t1 on success, the failure time otherwise.
  double t_reached = 0.0;
  /// Last finite state (the state at t_reached).
  StateVec y_final;
  std::optional<DenseTrajectory> dense;

  bool ok() const { return status == SolveStatus::Success; }
};

struct DopriOptions {
  /// Keep the per-step interpolation coefficients in SolveResult::dense.
  bool record_dense = false;
};

/// Adaptive Dormand-Prince 5(4) with FSAL and 4th-order dense output.
///
/// Samples are produced at exactly the requested times, which must be
/// ordered in the direction of integration and lie within [t0, t1]. Stage
/// evaluations that yield NaN/Inf cause the step to be retried at half the
/// size; once the step would drop below h_min the solve stops with
/// NonFiniteState.
SolveResult solve_dopri45(const RhsFn& rhs, std::span<const double> y0, double t0, double t1,
                          const IntegratorConfig& cfg, std::span<const double> sample_times,
                          DopriOptions opts = {});

/// Classical RK4 with `n_steps` uniform steps; nfe == 4 * n_steps on success.
/// Samples between grid points use the 3rd-order continuous extension built
/// from the four stages, so sampling costs no extra evaluations.
SolveResult solve_rk4(const RhsFn& rhs, std::span<const double> y0, double t0, double t1,
                      std::size_t n_steps, std::span<const double> sample_times);

/// Mixed absolute/relative RMS error norm used by the step controller.
double error_norm(std::span<const double> err, std::span<const double> y_old,
                  std::span<const double> y_new, double rtol, double atol);

}  // namespace momenta
