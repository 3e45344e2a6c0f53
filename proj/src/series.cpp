#include "momenta/series.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "momenta/csv_io.hpp"

namespace momenta {

double Series::input_at(double time) const {
  if (t.empty()) return 0.0;
  if (time <= t.front()) return input.front();
  if (time >= t.back()) return input.back();
  const auto it = std::upper_bound(t.begin(), t.end(), time);
  const std::size_t i = static_cast<std::size_t>(it - t.begin());
  const double w = (time - t[i - 1]) / (t[i] - t[i - 1]);
  return input[i - 1] + w * (input[i] - input[i - 1]);
}

std::string_view to_string(SeriesErrorKind k) {
  switch (k) {
    case SeriesErrorKind::EmptyFile: return "EmptyFile";
    case SeriesErrorKind::BadHeader: return "BadHeader";
    case SeriesErrorKind::MalformedRow: return "MalformedRow";
    case SeriesErrorKind::NonFiniteValue: return "NonFiniteValue";
    case SeriesErrorKind::NonMonotoneTime: return "NonMonotoneTime";
    case SeriesErrorKind::TooShort: return "TooShort";
  }
  return "unknown";
}

SeriesParseError::SeriesParseError(SeriesErrorKind kind, std::size_t line, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + (line ? " at line " + std::to_string(line) : "") + ": " +
                         what),
      kind_(kind),
      line_(line) {}

Series parse_series_csv(std::istream& in) {
  Series s;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (line.front() == '#') continue;
    const auto fields = split_csv_line(line);
    if (!header) {
      if (fields != std::vector<std::string>{"t", "input", "output"})
        throw SeriesParseError(SeriesErrorKind::BadHeader, lineno, "expected header t,input,output");
      header = true;
      continue;
    }
    if (fields.size() != 3)
      throw SeriesParseError(SeriesErrorKind::MalformedRow, lineno,
                             "expected 3 fields, got " + std::to_string(fields.size()));
    double v[3];
    for (int k = 0; k < 3; ++k) {
      if (!parse_double(fields[k], v[k]))
        throw SeriesParseError(SeriesErrorKind::MalformedRow, lineno, "cannot parse '" + fields[k] + "'");
      if (!std::isfinite(v[k])) throw SeriesParseError(SeriesErrorKind::NonFiniteValue, lineno, fields[k]);
    }
    if (!s.t.empty() && !(v[0] > s.t.back()))
      throw SeriesParseError(SeriesErrorKind::NonMonotoneTime, lineno,
                             "t=" + fields[0] + " does not exceed the previous time");
    s.t.push_back(v[0]);
    s.input.push_back(v[1]);
    s.output.push_back(v[2]);
  }
  if (!header) throw SeriesParseError(SeriesErrorKind::EmptyFile, 0, "no header");
  if (s.t.empty()) throw SeriesParseError(SeriesErrorKind::EmptyFile, 0, "no data rows");
  if (s.t.size() < 2) throw SeriesParseError(SeriesErrorKind::TooShort, 0, "need at least 2 rows");
  return resample_uniform(s, s.size());
}

Series ingest_series_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return parse_series_csv(in);
}

void write_series_csv(std::ostream& out, const Series& s) {
  out << "t,input,output\n";
  char buf[128];
  for (std::size_t i = 0; i < s.size(); ++i) {
    // Full precision so a write/ingest round trip is lossless.
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", s.t[i], s.input[i], s.output[i]);
    out << buf;
  }
}

Series resample_uniform(const Series& s, std::size_t n) {
  if (s.size() < 2 || n < 2) throw std::invalid_argument("resampling needs at least 2 points");
  Series r;
  const double a = s.t.front(), b = s.t.back();
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = i + 1 == n ? b : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    while (j + 2 < s.size() && s.t[j + 1] <= t) ++j;
    const double h = s.t[j + 1] - s.t[j];
    const double w = std::clamp((t - s.t[j]) / h, 0.0, 1.0);
    r.t.push_back(t);
    // Exact copies at the knots keep already-uniform data unchanged.
    r.input.push_back(w == 0.0 ? s.input[j] : w == 1.0 ? s.input[j + 1] : s.input[j] + w * (s.input[j + 1] - s.input[j]));
    r.output.push_back(w == 0.0 ? s.output[j]
                                : w == 1.0 ? s.output[j + 1] : s.output[j] + w * (s.output[j + 1] - s.output[j]));
  }
  return r;
}

Series duffing_series(const DuffingConfig& cfg) {
  if (cfg.samples < 2 || !(cfg.t_end > 0.0) || cfg.substeps == 0 || cfg.tones == 0)
    throw std::invalid_argument("invalid Duffing configuration");
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
  std::vector<double> freq(cfg.tones), phi(cfg.tones);
  for (std::size_t k = 0; k < cfg.tones; ++k) {
    freq[k] = cfg.f_max * static_cast<double>(k + 1) / static_cast<double>(cfg.tones);
    phi[k] = phase(rng);
  }
  auto u = [&](double t) {
    double s = 0.0;
    for (std::size_t k = 0; k < cfg.tones; ++k) s += std::cos(2.0 * M_PI * freq[k] * t + phi[k]);
    return cfg.amplitude * s / std::sqrt(static_cast<double>(cfg.tones));
  };
  auto rhs = [&](double t, double y, double yd, double& dy, double& dyd) {
    dy = yd;
    dyd = u(t) - cfg.damping * yd - cfg.stiffness * y - cfg.cubic * y * y * y;
  };

  Series s;
  const double dt = cfg.t_end / static_cast<double>(cfg.samples - 1);
  const double h = dt / static_cast<double>(cfg.substeps);
  double y = cfg.y0, yd = 0.0;
  for (std::size_t i = 0; i < cfg.samples; ++i) {
    const double t = dt * static_cast<double>(i);
    s.t.push_back(t);
    s.input.push_back(u(t));
    s.output.push_back(y);
    for (std::size_t k = 0; k < cfg.substeps; ++k) {
      const double tk = t + h * static_cast<double>(k);
      double k1y, k1v, k2y, k2v, k3y, k3v, k4y, k4v;
      rhs(tk, y, yd, k1y, k1v);
      rhs(tk + h / 2, y + h / 2 * k1y, yd + h / 2 * k1v, k2y, k2v);
      rhs(tk + h / 2, y + h / 2 * k2y, yd + h / 2 * k2v, k3y, k3v);
      rhs(tk + h, y + h * k3y, yd + h * k3v, k4y, k4v);
      y += h / 6 * (k1y + 2 * k2y + 2 * k3y + k4y);
      yd += h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v);
    }
  }
  return s;
}

}  // namespace momenta
