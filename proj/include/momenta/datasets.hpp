#pragma once

// Seeded synthetic two-class datasets in the plane.

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace momenta {

enum class DatasetKind { TwoSpirals, TwoMoons };

/// "spirals" or "moons".
std::string_view dataset_name(DatasetKind k);
DatasetKind dataset_from_name(std::string_view name);

struct Dataset {
  std::vector<double> x;  // size() x 2, row-major
  std::vector<int> y;     // labels in {0, 1}

  std::size_t size() const { return y.size(); }
  static constexpr std::size_t kFeatures = 2;
};

struct DatasetConfig {
  DatasetKind kind = DatasetKind::TwoSpirals;
  std::size_t n = 2000;  // total points, split evenly between classes
  double noise = 0.05;
  double turns = 1.0;  // spirals only
  std::uint64_t seed = 0;
};

/// Two interleaved Archimedean spirals of the given number of turns, radius
/// growing from 0.1 to 1; class 1 is class 0 rotated by π.
Dataset two_spirals(std::size_t n, std::uint64_t seed, double noise = 0.05, double turns = 1.0);
/// Two interleaving half circles.
Dataset two_moons(std::size_t n, std::uint64_t seed, double noise = 0.1);
Dataset make_dataset(const DatasetConfig& cfg);

struct TrainTestSplit {
  Dataset train, test;
};

/// Seeded shuffle, then the first round(train_fraction * n) points train.
TrainTestSplit split_train_test(const Dataset& d, double train_fraction, std::uint64_t seed);

}  // namespace momenta
