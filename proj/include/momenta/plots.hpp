#pragma once

// SVG figures rebuilt from the CSV files the experiments emit. Commands
// render their figures through these functions too, so re-plotting a CSV
// reproduces the original SVG byte for byte.

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "momenta/csv_io.hpp"
#include "momenta/svg.hpp"

namespace momenta {

enum class PlotKind { Trajectory, Stability, Efficacy, Loss };

/// "trajectory", "stability", "efficacy", "loss".
std::string_view plot_kind_name(PlotKind k);
PlotKind plot_kind_from_name(std::string_view name);

/// Documented header of each CSV kind (Loss reads the efficacy CSV).
std::vector<std::string> expected_header(PlotKind k);

/// Header mismatch, empty body or unparsable numbers.
class CsvSchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Trajectory CSVs carry a trailing `# minimizer <landscape> <x> <y>` line;
/// the star is drawn when it is present.
PlotSpec plot_from_csv(const CsvTable& table, PlotKind kind);

}  // namespace momenta
