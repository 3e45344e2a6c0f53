#pragma once

// Input/output sequence data for the stability probe: a seeded forced
// Duffing-oscillator generator and ingestion of externally recorded series
// from CSV (`t,input,output`).

#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace momenta {

struct Series {
  std::vector<double> t, input, output;

  std::size_t size() const { return t.size(); }
  /// Linear interpolation of the input channel, clamped at the ends.
  double input_at(double time) const;
};

enum class SeriesErrorKind { EmptyFile, BadHeader, MalformedRow, NonFiniteValue, NonMonotoneTime, TooShort };

std::string_view to_string(SeriesErrorKind k);

class SeriesParseError : public std::runtime_error {
 public:
  SeriesParseError(SeriesErrorKind kind, std::size_t line, const std::string& what);
  SeriesErrorKind kind() const { return kind_; }
  /// 1-based line number in the source (0 when not tied to a line).
  std::size_t line() const { return line_; }

 private:
  SeriesErrorKind kind_;
  std::size_t line_;
};

/// Parses `t,input,output` rows with strictly increasing t. The result is
/// resampled to a uniform grid with the same number of points and span.
Series parse_series_csv(std::istream& in);
Series ingest_series_csv(const std::string& path);

void write_series_csv(std::ostream& out, const Series& s);

/// Linear resampling onto n uniformly spaced times spanning [t.front(), t.back()].
Series resample_uniform(const Series& s, std::size_t n);

struct DuffingConfig {
  std::uint64_t seed = 0;
  std::size_t samples = 1025;
  double t_end = 64.0;
  double damping = 0.1;     // c in y'' + c y' + k y + k3 y^3 = u
  double stiffness = 1.0;   // k
  double cubic = 0.5;       // k3
  double amplitude = 0.5;   // multisine peak per tone
  double y0 = 1.0;          // initial displacement (initial velocity is 0)
  std::size_t tones = 8;
  double f_max = 0.5;       // highest tone frequency (cycles per time unit)
  std::size_t substeps = 8; // RK4 steps per sample interval
};

/// Multisine-forced Duffing oscillator, integrated with fixed-step RK4.
Series duffing_series(const DuffingConfig& cfg);

}  // namespace momenta
