#include "momenta/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace momenta {

std::string_view dataset_name(DatasetKind k) {
  return k == DatasetKind::TwoSpirals ? "spirals" : "moons";
}

DatasetKind dataset_from_name(std::string_view name) {
  if (name == "spirals") return DatasetKind::TwoSpirals;
  if (name == "moons") return DatasetKind::TwoMoons;
  throw std::invalid_argument("unknown dataset '" + std::string(name) + "' (valid: spirals, moons)");
}

Dataset two_spirals(std::size_t n, std::uint64_t seed, double noise, double turns) {
  if (n < 2) throw std::invalid_argument("dataset needs at least 2 points");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, noise);
  Dataset d;
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 2);
    const double s = u(rng);
    const double r = 0.1 + 0.9 * s;
    const double a = 2.0 * M_PI * turns * s + M_PI * label;
    d.x.push_back(r * std::cos(a) + g(rng));
    d.x.push_back(r * std::sin(a) + g(rng));
    d.y.push_back(label);
  }
  return d;
}

Dataset two_moons(std::size_t n, std::uint64_t seed, double noise) {
  if (n < 2) throw std::invalid_argument("dataset needs at least 2 points");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, M_PI);
  std::normal_distribution<double> g(0.0, noise);
  Dataset d;
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 2);
    const double a = u(rng);
    const double x = label == 0 ? std::cos(a) : 1.0 - std::cos(a);
    const double y = label == 0 ? std::sin(a) : 0.5 - std::sin(a);
    // Centered and scaled to roughly [-1, 1].
    d.x.push_back((x - 0.5) / 1.5 + g(rng));
    d.x.push_back((y - 0.25) / 1.5 + g(rng));
    d.y.push_back(label);
  }
  return d;
}

Dataset make_dataset(const DatasetConfig& cfg) {
  return cfg.kind == DatasetKind::TwoSpirals ? two_spirals(cfg.n, cfg.seed, cfg.noise, cfg.turns)
                                             : two_moons(cfg.n, cfg.seed, cfg.noise);
}

TrainTestSplit split_train_test(const Dataset& d, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw std::invalid_argument("train_fraction must be in (0, 1)");
  std::vector<std::size_t> idx(d.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(d.size())));
  TrainTestSplit s;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    Dataset& dst = k < n_train ? s.train : s.test;
    dst.x.push_back(d.x[2 * idx[k]]);
    dst.x.push_back(d.x[2 * idx[k] + 1]);
    dst.y.push_back(d.y[idx[k]]);
  }
  return s;
}

}  // namespace momenta
