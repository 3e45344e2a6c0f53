#include "momenta/ode_solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace momenta {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                 a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                 a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0,
                 a75 = -2187.0 / 6784.0, a76 = 11.0 / 84.0;
// 5th-order solution minus embedded 4th-order solution.
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                 e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
// Dense output (Hairer & Wanner, DOPRI5 contd5).
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

constexpr double kMinFactor = 0.2;
constexpr double kMaxFactor = 5.0;

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void check_samples(std::span<const double> samples, double t0, double t1) {
  const double lo = std::min(t0, t1), hi = std::max(t0, t1);
  const double dir = t1 >= t0 ? 1.0 : -1.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!(samples[i] >= lo && samples[i] <= hi))
      throw std::invalid_argument("sample time " + std::to_string(samples[i]) +
                                  " outside integration interval");
    if (i > 0 && dir * (samples[i] - samples[i - 1]) <= 0.0)
      throw std::invalid_argument("sample times must be strictly monotone in the integration direction");
  }
}

double interpolate_component(const double* r, std::size_t dim, std::size_t i, double s) {
  const double s1 = 1.0 - s;
  return r[i] + s * (r[dim + i] + s1 * (r[2 * dim + i] + s * (r[3 * dim + i] + s1 * r[4 * dim + i])));
}

}  // namespace

void IntegratorConfig::validate() const {
  if (!(rtol > 0.0) || !(atol > 0.0)) throw std::invalid_argument("tolerances must be positive");
  if (!(h_min > 0.0) || !(h_init > 0.0) || !(h_max > 0.0))
    throw std::invalid_argument("step sizes must be positive");
  if (!(h_min <= h_init && h_init <= h_max))
    throw std::invalid_argument("require h_min <= h_init <= h_max");
  if (max_steps == 0) throw std::invalid_argument("max_steps must be positive");
  if (!(safety > 0.0 && safety <= 1.0)) throw std::invalid_argument("safety must lie in (0, 1]");
}

std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Success: return "success";
    case SolveStatus::StepBudgetExhausted: return "step_budget_exhausted";
    case SolveStatus::StepUnderflow: return "step_underflow";
    case SolveStatus::NonFiniteState: return "non_finite_state";
  }
  return "unknown";
}

void DenseTrajectory::append_step(double t_old, double h, std::span<const double> coeffs) {
  if (coeffs.size() != 5 * dim_) throw std::invalid_argument("dense coefficient size mismatch");
  t_old_.push_back(t_old);
  h_.push_back(h);
  coeffs_.insert(coeffs_.end(), coeffs.begin(), coeffs.end());
}

void DenseTrajectory::evaluate(double t, std::span<double> out) const {
  if (empty()) throw std::logic_error("empty dense trajectory");
  if (out.size() != dim_) throw std::invalid_argument("dense output size mismatch");
  const bool forward = h_.front() > 0.0;
  // Last step whose start precedes t in the integration direction.
  std::size_t idx;
  if (forward) {
    auto it = std::upper_bound(t_old_.begin(), t_old_.end(), t);
    idx = it == t_old_.begin() ? 0 : static_cast<std::size_t>(it - t_old_.begin()) - 1;
  } else {
    auto it = std::upper_bound(t_old_.begin(), t_old_.end(), t, std::greater<double>());
    idx = it == t_old_.begin() ? 0 : static_cast<std::size_t>(it - t_old_.begin()) - 1;
  }
  const double s = (t - t_old_[idx]) / h_[idx];
  const double* r = coeffs_.data() + idx * 5 * dim_;
  for (std::size_t i = 0; i < dim_; ++i) out[i] = interpolate_component(r, dim_, i, s);
}

double error_norm(std::span<const double> err, std::span<const double> y_old,
                  std::span<const double> y_new, double rtol, double atol) {
  double acc = 0.0;
  for (std::size_t i = 0; i < err.size(); ++i) {
    const double sc = atol + rtol * std::max(std::abs(y_old[i]), std::abs(y_new[i]));
    const double r = err[i] / sc;
    acc += r * r;
  }
  return std::sqrt(acc / static_cast<double>(err.size()));
}

SolveResult solve_dopri45(const RhsFn& rhs, std::span<const double> y0, double t0, double t1,
                          const IntegratorConfig& cfg, std::span<const double> sample_times,
                          DopriOptions opts) {
  cfg.validate();
  if (y0.empty()) throw std::invalid_argument("state dimension must be >= 1");
  if (t0 == t1) throw std::invalid_argument("t0 must differ from t1");
  if (!all_finite(y0)) throw std::invalid_argument("initial state must be finite");
  check_samples(sample_times, t0, t1);

  const std::size_t n = y0.size();
  const double dir = t1 > t0 ? 1.0 : -1.0;

  SolveResult res;
  if (opts.record_dense) res.dense.emplace(n);
  std::size_t nfe = 0;
  auto eval = [&](double t, std::span<const double> y, std::span<double> dy) {
    ++nfe;
    rhs(t, y, dy);
    return all_finite(dy);
  };

  StateVec y(y0.begin(), y0.end()), y_new(n), ytmp(n), err(n);
  StateVec k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);
  std::vector<double> rcont(5 * n);

  std::size_t next_sample = 0;
  auto emit = [&](double ts, std::span<const double> state) {
    res.ts.push_back(ts);
    res.states.emplace_back(state.begin(), state.end());
  };
  while (next_sample < sample_times.size() && sample_times[next_sample] == t0) {
    emit(t0, y);
    ++next_sample;
  }

  double t = t0;
  double h = std::clamp(cfg.h_init, cfg.h_min, cfg.h_max);
  bool have_k1 = false;

  auto finish = [&](SolveStatus st) {
    res.status = st;
    res.t_reached = t;
    res.y_final = y;
    res.nfe = nfe;
    return res;
  };

  while (true) {
    const double remaining = std::abs(t1 - t);
    if (remaining == 0.0) break;
    if (res.accepted_steps + res.rejected_steps >= cfg.max_steps)
      return finish(SolveStatus::StepBudgetExhausted);

    if (!have_k1) {
      if (!eval(t, y, k1)) return finish(SolveStatus::NonFiniteState);
      have_k1 = true;
    }

    const bool last = h >= remaining;
    const double step = last ? remaining : h;
    const double hs = dir * step;
    const double t_new = last ? t1 : t + hs;

    // Stages; a non-finite derivative aborts the attempt.
    bool finite = true;
    auto stage = [&](double tc, auto&& combine, StateVec& k) {
      if (!finite) return;
      for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + hs * combine(i);
      finite = all_finite(ytmp) && eval(tc, ytmp, k);
    };
    stage(t + c2 * hs, [&](std::size_t i) { return a21 * k1[i]; }, k2);
    stage(t + c3 * hs, [&](std::size_t i) { return a31 * k1[i] + a32 * k2[i]; }, k3);
    stage(t + c4 * hs, [&](std::size_t i) { return a41 * k1[i] + a42 * k2[i] + a43 * k3[i]; }, k4);
    stage(t + c5 * hs,
          [&](std::size_t i) { return a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]; }, k5);
    stage(t + hs,
          [&](std::size_t i) {
            return a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i];
          },
          k6);
    if (finite) {
      for (std::size_t i = 0; i < n; ++i)
        y_new[i] = y[i] + hs * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
      finite = all_finite(y_new) && eval(t_new, y_new, k7);
    }

    double en = 0.0;
    if (finite) {
      for (std::size_t i = 0; i < n; ++i)
        err[i] = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      en = error_norm(err, y, y_new, cfg.rtol, cfg.atol);
      finite = std::isfinite(en);
    }

    if (!finite) {
      ++res.rejected_steps;
      const double h_half = 0.5 * step;
      if (h_half < cfg.h_min) return finish(SolveStatus::NonFiniteState);
      h = h_half;
      continue;
    }

    if (en > 1.0) {
      ++res.rejected_steps;
      const double factor = std::max(kMinFactor, cfg.safety * std::pow(en, -0.2));
      const double h_next = step * factor;
      if (h_next < cfg.h_min) return finish(SolveStatus::StepUnderflow);
      h = std::min(h_next, cfg.h_max);
      continue;
    }

    // Accepted: build the dense-output coefficients for this step.
    const bool need_dense =
        opts.record_dense ||
        (next_sample < sample_times.size() && dir * (sample_times[next_sample] - t_new) < 0.0);
    if (need_dense) {
      for (std::size_t i = 0; i < n; ++i) {
        const double ydiff = y_new[i] - y[i];
        const double bspl = hs * k1[i] - ydiff;
        rcont[i] = y[i];
        rcont[n + i] = ydiff;
        rcont[2 * n + i] = bspl;
        rcont[3 * n + i] = ydiff - hs * k7[i] - bspl;
        rcont[4 * n + i] =
            hs * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
      }
      if (opts.record_dense) res.dense->append_step(t, hs, rcont);
    }
    while (next_sample < sample_times.size()) {
      const double ts = sample_times[next_sample];
      if (ts == t_new) {
        emit(ts, y_new);
      } else if (dir * (ts - t_new) < 0.0) {
        const double s = (ts - t) / hs;
        for (std::size_t i = 0; i < n; ++i) ytmp[i] = interpolate_component(rcont.data(), n, i, s);
        emit(ts, ytmp);
      } else {
        break;
      }
      ++next_sample;
    }

    ++res.accepted_steps;
    t = t_new;
    std::swap(y, y_new);
    std::swap(k1, k7);

    const double factor =
        en == 0.0 ? kMaxFactor : std::clamp(cfg.safety * std::pow(en, -0.2), kMinFactor, kMaxFactor);
    h = std::clamp(step * factor, cfg.h_min, cfg.h_max);
    if (last) break;
  }
  return finish(SolveStatus::Success);
}

SolveResult solve_rk4(const RhsFn& rhs, std::span<const double> y0, double t0, double t1,
                      std::size_t n_steps, std::span<const double> sample_times) {
  if (n_steps == 0) throw std::invalid_argument("n_steps must be >= 1");
  if (y0.empty()) throw std::invalid_argument("state dimension must be >= 1");
  if (!all_finite(y0)) throw std::invalid_argument("initial state must be finite");
  check_samples(sample_times, t0, t1);

  const std::size_t n = y0.size();
  const double h = (t1 - t0) / static_cast<double>(n_steps);
  SolveResult res;
  std::size_t nfe = 0;
  auto eval = [&](double t, std::span<const double> y, std::span<double> dy) {
    ++nfe;
    rhs(t, y, dy);
    return all_finite(dy);
  };

  StateVec y(y0.begin(), y0.end()), y_new(n), ytmp(n), k1(n), k2(n), k3(n), k4(n);
  std::size_t next_sample = 0;
  auto emit = [&](double ts, std::span<const double> state) {
    res.ts.push_back(ts);
    res.states.emplace_back(state.begin(), state.end());
  };
  while (next_sample < sample_times.size() && sample_times[next_sample] == t0) {
    emit(t0, y);
    ++next_sample;
  }

  double t = t0;
  auto finish = [&](SolveStatus st) {
    res.status = st;
    res.t_reached = t;
    res.y_final = y;
    res.nfe = nfe;
    return res;
  };
  const double dir = h > 0.0 ? 1.0 : -1.0;

  for (std::size_t k = 0; k < n_steps; ++k) {
    const double t_new = k + 1 == n_steps ? t1 : t0 + static_cast<double>(k + 1) * h;
    const double hs = t_new - t;
    bool ok = eval(t, y, k1);
    if (ok) {
      for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + 0.5 * hs * k1[i];
      ok = eval(t + 0.5 * hs, ytmp, k2);
    }
    if (ok) {
      for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + 0.5 * hs * k2[i];
      ok = eval(t + 0.5 * hs, ytmp, k3);
    }
    if (ok) {
      for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + hs * k3[i];
      ok = eval(t_new, ytmp, k4);
    }
    if (ok) {
      for (std::size_t i = 0; i < n; ++i)
        y_new[i] = y[i] + hs / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      ok = all_finite(y_new);
    }
    if (!ok) return finish(SolveStatus::NonFiniteState);

    while (next_sample < sample_times.size()) {
      const double ts = sample_times[next_sample];
      if (ts == t_new) {
        emit(ts, y_new);
      } else if (dir * (ts - t_new) < 0.0) {
        // Continuous extension of classical RK4 (3rd order).
        const double s = (ts - t) / hs;
        const double s2 = s * s, s3 = s2 * s;
        const double b1 = s - 1.5 * s2 + 2.0 / 3.0 * s3;
        const double b23 = s2 - 2.0 / 3.0 * s3;
        const double b4 = -0.5 * s2 + 2.0 / 3.0 * s3;
        for (std::size_t i = 0; i < n; ++i)
          ytmp[i] = y[i] + hs * (b1 * k1[i] + b23 * (k2[i] + k3[i]) + b4 * k4[i]);
        emit(ts, ytmp);
      } else {
        break;
      }
      ++next_sample;
    }
    ++res.accepted_steps;
    t = t_new;
    std::swap(y, y_new);
  }
  return finish(SolveStatus::Success);
}

}  // namespace momenta
