#include "momenta/classification.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "momenta/csv_io.hpp"

namespace momenta {
namespace {

constexpr std::size_t kClasses = 2;

void uniform_fill(std::span<double> out, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-bound, bound);
  for (double& x : out) x = u(rng);
}

}  // namespace

IntegratorConfig TrainConfig::default_solver() {
  IntegratorConfig c;
  c.rtol = 1e-3;
  c.atol = 1e-4;
  c.max_steps = 100'000;
  return c;
}

void TrainConfig::validate() const {
  model.validate();
  solver.validate();
  if (state_dim == 0) throw std::invalid_argument("state_dim must be >= 1");
  if (batch == 0) throw std::invalid_argument("batch must be >= 1");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw std::invalid_argument("lr must be positive");
  if (data.n < 10) throw std::invalid_argument("dataset needs at least 10 points");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw std::invalid_argument("train_fraction must be in (0, 1)");
}

double efficacy(double accuracy, std::size_t nfe, std::size_t batches) {
  if (nfe == 0 || batches == 0) return 0.0;
  return accuracy / (static_cast<double>(nfe) / static_cast<double>(batches));
}

AdamOptimizer::AdamOptimizer(std::size_t n, double lr, double beta1, double beta2, double eps)
    : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

void AdamOptimizer::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) throw std::invalid_argument("optimizer size mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = b1_ * m_[i] + (1.0 - b1_) * grad[i];
    v_[i] = b2_ * v_[i] + (1.0 - b2_) * grad[i] * grad[i];
    params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

Classifier::Classifier(const TrainConfig& cfg, std::uint64_t seed)
    : cfg_(cfg),
      ode_(cfg.model,
           init_field_net(field_shape_for(cfg.model, cfg.state_dim, cfg.hidden, cfg.activation, true), seed),
           cfg.state_dim),
      d_(cfg.state_dim),
      w_(ode_.width()) {
  const std::size_t F = Dataset::kFeatures;
  off_ode_ = d_ * F + d_;
  off_readout_ = off_ode_ + ode_.param_count();
  off_mmap_ = off_readout_ + kClasses * w_ + kClasses;
  const bool mmap = cfg.learn_initial_momentum && ode_.blocks() > 1;
  params_.assign(off_mmap_ + (mmap ? w_ * w_ + w_ : 0), 0.0);

  std::mt19937_64 rng(seed ^ 0x5bd1e995ULL);
  uniform_fill(std::span(params_).first(d_ * F), 1.0 / std::sqrt(double(F)), rng);
  const ParamVec p = ode_.params();
  std::copy(p.begin(), p.end(), params_.begin() + static_cast<std::ptrdiff_t>(off_ode_));
  uniform_fill(std::span(params_).subspan(off_readout_, kClasses * w_), 1.0 / std::sqrt(double(w_)), rng);
  if (mmap) std::fill_n(params_.begin() + static_cast<std::ptrdiff_t>(off_mmap_ + w_ * w_), w_, cfg.model.init.m0);
}

void Classifier::set_params(std::span<const double> p) {
  if (p.size() != params_.size()) throw std::invalid_argument("classifier parameter size mismatch");
  std::copy(p.begin(), p.end(), params_.begin());
  ode_.set_params(std::span<const double>(params_).subspan(off_ode_, ode_.param_count()));
}

StateVec Classifier::initial_state(std::span<const double> x, std::size_t batch) const {
  const std::size_t F = Dataset::kFeatures;
  const double* We = params_.data();
  const double* be = We + d_ * F;
  StateVec h0(batch * d_);
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t i = 0; i < d_; ++i) {
      double s = be[i];
      for (std::size_t k = 0; k < F; ++k) s += We[i * F + k] * x[b * F + k];
      h0[b * d_ + i] = s;
    }
  StateVec z0 = ode_.initial_state(h0, batch);
  if (params_.size() > off_mmap_) {
    const double* Wm = params_.data() + off_mmap_;
    const double* bm = Wm + w_ * w_;
    const std::size_t sd = ode_.sample_dim();
    for (std::size_t b = 0; b < batch; ++b) {
      double* zb = z0.data() + b * sd;
      for (std::size_t i = 0; i < w_; ++i) {
        double s = bm[i];
        for (std::size_t k = 0; k < w_; ++k) s += Wm[i * w_ + k] * zb[k];
        zb[w_ + i] = s;
      }
    }
  }
  return z0;
}

Classifier::StepStats Classifier::loss_and_grad(std::span<const double> x, std::span<const int> y,
                                                std::span<double> grad) {
  const std::size_t F = Dataset::kFeatures, B = y.size(), sd = ode_.sample_dim();
  if (x.size() != B * F || grad.size() != params_.size()) throw std::invalid_argument("batch size mismatch");
  std::fill(grad.begin(), grad.end(), 0.0);
  StepStats st;
  const StateVec z0 = initial_state(x, B);
  const double tf[] = {1.0};
  const SolveResult sol = solve_dopri45(ode_.rhs_fn(), z0, 0.0, 1.0, cfg_.solver, tf);
  st.forward_nfe = sol.nfe;
  if (!sol.ok()) {
    st.ok = false;
    return st;
  }
  const StateVec& z1 = sol.y_final;

  const double* Wr = params_.data() + off_readout_;
  const double* br = Wr + kClasses * w_;
  double* gWr = grad.data() + off_readout_;
  double* gbr = gWr + kClasses * w_;
  StateVec dz1(z1.size(), 0.0);
  for (std::size_t b = 0; b < B; ++b) {
    const double* h = z1.data() + b * sd;
    double logit[kClasses];
    for (std::size_t c = 0; c < kClasses; ++c) {
      logit[c] = br[c];
      for (std::size_t k = 0; k < w_; ++k) logit[c] += Wr[c * w_ + k] * h[k];
    }
    const double mx = std::max(logit[0], logit[1]);
    const double lse = mx + std::log(std::exp(logit[0] - mx) + std::exp(logit[1] - mx));
    st.loss += (lse - logit[y[b]]) / double(B);
    for (std::size_t c = 0; c < kClasses; ++c) {
      const double g = (std::exp(logit[c] - lse) - (int(c) == y[b] ? 1.0 : 0.0)) / double(B);
      gbr[c] += g;
      for (std::size_t k = 0; k < w_; ++k) {
        gWr[c * w_ + k] += g * h[k];
        dz1[b * sd + k] += g * Wr[c * w_ + k];
      }
    }
  }
  if (!std::isfinite(st.loss)) {
    st.ok = false;
    return st;
  }

  AdjointOptions aopts;
  aopts.variant = cfg_.variant;
  const AdjointRun run = backward(ode_, z1, dz1, 0.0, 1.0, cfg_.solver, aopts);
  st.backward_nfe = run.backward_nfe;
  if (run.status == AdjointStatus::SolverFailure) {
    st.ok = false;
    return st;
  }
  std::copy(run.grad_params.begin(), run.grad_params.end(), grad.begin() + static_cast<std::ptrdiff_t>(off_ode_));

  StateVec dh(w_);
  double* gWe = grad.data();
  double* gbe = gWe + d_ * F;
  for (std::size_t b = 0; b < B; ++b) {
    const double* a0 = run.grad_initial_state.data() + b * sd;
    std::copy_n(a0, w_, dh.begin());
    if (params_.size() > off_mmap_) {
      const double* Wm = params_.data() + off_mmap_;
      double* gWm = grad.data() + off_mmap_;
      double* gbm = gWm + w_ * w_;
      const double* h0 = z0.data() + b * sd;
      for (std::size_t i = 0; i < w_; ++i) {
        const double am = a0[w_ + i];
        gbm[i] += am;
        for (std::size_t k = 0; k < w_; ++k) {
          gWm[i * w_ + k] += am * h0[k];
          dh[k] += am * Wm[i * w_ + k];
        }
      }
    }
    // Augmentation entries are constant zeros; only the first d feed the embed.
    for (std::size_t i = 0; i < d_; ++i) {
      gbe[i] += dh[i];
      for (std::size_t k = 0; k < F; ++k) gWe[i * F + k] += dh[i] * x[b * F + k];
    }
  }
  for (double g : grad)
    if (!std::isfinite(g)) {
      st.ok = false;
      break;
    }
  return st;
}

EvalResult Classifier::evaluate(const Dataset& d) {
  EvalResult r;
  const std::size_t B = d.size(), sd = ode_.sample_dim();
  const StateVec z0 = initial_state(d.x, B);
  const double tf[] = {1.0};
  const SolveResult sol = solve_dopri45(ode_.rhs_fn(), z0, 0.0, 1.0, cfg_.solver, tf);
  r.nfe = sol.nfe;
  if (!sol.ok()) {
    r.ok = false;
    return r;
  }
  const double* Wr = params_.data() + off_readout_;
  const double* br = Wr + kClasses * w_;
  std::size_t correct = 0;
  for (std::size_t b = 0; b < B; ++b) {
    const double* h = sol.y_final.data() + b * sd;
    double logit[kClasses];
    for (std::size_t c = 0; c < kClasses; ++c) {
      logit[c] = br[c];
      for (std::size_t k = 0; k < w_; ++k) logit[c] += Wr[c * w_ + k] * h[k];
    }
    const double mx = std::max(logit[0], logit[1]);
    const double lse = mx + std::log(std::exp(logit[0] - mx) + std::exp(logit[1] - mx));
    r.loss += (lse - logit[d.y[b]]) / double(B);
    const int pred = logit[1] > logit[0] ? 1 : 0;
    if (pred == d.y[b]) ++correct;
  }
  r.accuracy = double(correct) / double(B);
  r.ok = std::isfinite(r.loss);
  return r;
}

TrainResult run_classification(const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  const Dataset data = make_dataset(cfg.data);
  const TrainTestSplit split = split_train_test(data, cfg.train_fraction, cfg.seed);
  Classifier clf(cfg, cfg.seed);
  AdamOptimizer opt(clf.param_count(), cfg.lr);

  TrainResult res;
  res.param_count = clf.param_count();
  res.train_size = split.train.size();
  res.test_size = split.test.size();
  res.initial = clf.evaluate(split.test);
  if (!res.initial.ok) {
    res.diverged = true;
    res.divergence_reason = "initial evaluation failed";
    return res;
  }

  const std::size_t N = split.train.size(), F = Dataset::kFeatures;
  std::vector<std::size_t> order(N);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(cfg.seed ^ 0x2545f4914f6cdd1dULL);
  ParamVec params = clf.params(), grad(params.size());
  std::vector<double> bx;
  std::vector<int> by;
  std::size_t fwd_total = 0, bwd_total = 0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    EfficacyRecord rec;
    rec.epoch = epoch;
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < N; start += cfg.batch) {
      const std::size_t stop = std::min(N, start + cfg.batch);
      bx.clear();
      by.clear();
      for (std::size_t k = start; k < stop; ++k) {
        bx.insert(bx.end(), split.train.x.begin() + static_cast<std::ptrdiff_t>(order[k] * F),
                  split.train.x.begin() + static_cast<std::ptrdiff_t>(order[k] * F + F));
        by.push_back(split.train.y[order[k]]);
      }
      const auto st = clf.loss_and_grad(bx, by, grad);
      rec.epoch_forward_nfe += st.forward_nfe;
      rec.epoch_backward_nfe += st.backward_nfe;
      if (!st.ok) {
        res.diverged = true;
        res.divergence_reason = "non-finite loss or solver failure in epoch " + std::to_string(epoch);
        return res;
      }
      ++rec.batches;
      loss_sum += st.loss;
      opt.step(params, grad);
      clf.set_params(params);
    }
    const EvalResult ev = clf.evaluate(split.test);
    if (!ev.ok) {
      res.diverged = true;
      res.divergence_reason = "test evaluation failed after epoch " + std::to_string(epoch);
      return res;
    }
    fwd_total += rec.epoch_forward_nfe;
    bwd_total += rec.epoch_backward_nfe;
    rec.train_loss = loss_sum / double(rec.batches);
    rec.test_accuracy = ev.accuracy;
    rec.forward_nfe = fwd_total;
    rec.backward_nfe = bwd_total;
    rec.efficacy_fwd = efficacy(ev.accuracy, rec.epoch_forward_nfe, rec.batches);
    rec.efficacy_bwd = efficacy(ev.accuracy, rec.epoch_backward_nfe, rec.batches);
    res.records.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return res;
}

void write_efficacy_csv_header(std::ostream& out, std::size_t batches_per_epoch) {
  out << "# efficacy = test_accuracy / mean NFE per batch over the epoch; batches_per_epoch=" << batches_per_epoch
      << "; nfe columns are cumulative\n";
  out << "epoch,train_loss,test_accuracy,forward_nfe,backward_nfe,efficacy_fwd,efficacy_bwd\n";
}

void write_efficacy_row(std::ostream& out, const EfficacyRecord& r) {
  out << r.epoch << ',' << format_number(r.train_loss) << ',' << format_number(r.test_accuracy) << ','
      << r.forward_nfe << ',' << r.backward_nfe << ',' << format_number(r.efficacy_fwd) << ','
      << format_number(r.efficacy_bwd) << '\n';
}

void write_efficacy_csv(std::ostream& out, const TrainResult& r, std::size_t batches_per_epoch) {
  write_efficacy_csv_header(out, batches_per_epoch);
  for (const auto& rec : r.records) write_efficacy_row(out, rec);
}

nlohmann::json training_summary(const TrainConfig& cfg, const TrainResult& r) {
  nlohmann::json j;
  j["model"] = std::string(model_name(cfg.model.kind));
  j["dataset"] = std::string(dataset_name(cfg.data.kind));
  j["seed"] = cfg.seed;
  j["param_count"] = r.param_count;
  j["train_size"] = r.train_size;
  j["test_size"] = r.test_size;
  j["initial_eval"] = {{"epoch", 0}, {"test_accuracy", r.initial.accuracy}, {"test_loss", r.initial.loss},
                       {"nfe", r.initial.nfe}};
  j["epochs_completed"] = r.records.size();
  j["diverged"] = r.diverged;
  if (r.diverged) j["divergence_reason"] = r.divergence_reason;
  if (!r.records.empty()) {
    const auto& f = r.records.back();
    j["final"] = {{"epoch", f.epoch},
                  {"train_loss", f.train_loss},
                  {"test_accuracy", f.test_accuracy},
                  {"forward_nfe", f.forward_nfe},
                  {"backward_nfe", f.backward_nfe},
                  {"mean_forward_nfe_per_batch", double(f.epoch_forward_nfe) / double(f.batches)},
                  {"mean_backward_nfe_per_batch", double(f.epoch_backward_nfe) / double(f.batches)},
                  {"efficacy_fwd", f.efficacy_fwd},
                  {"efficacy_bwd", f.efficacy_bwd}};
  }
  return j;
}

}  // namespace momenta
