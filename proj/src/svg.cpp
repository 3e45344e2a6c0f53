#include "momenta/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace momenta {
namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2"};

std::string fmt(const char* f, double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!(lo <= hi)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-12 * std::max(1.0, std::abs(lo))) {
      const double pad = std::max(1.0, std::abs(lo)) * 0.5;
      lo -= pad;
      hi += pad;
    }
  }
};

/// Roughly five round tick values covering [lo, hi].
std::vector<double> ticks(double lo, double hi) {
  const double raw = (hi - lo) / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (raw <= m * mag) {
      step = m * mag;
      break;
    }
  std::vector<double> out;
  for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * step; v += step) out.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
  return out;
}

}  // namespace

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string render_svg(const PlotSpec& spec) {
  const double W = spec.width, H = spec.height;
  const double left = 70, right = 150, top = 40, bottom = 50;
  const double pw = W - left - right, ph = H - top - bottom;

  Range xr, yr;
  for (const auto& l : spec.lines)
    for (std::size_t i = 0; i < l.x.size() && i < l.y.size(); ++i)
      if (std::isfinite(l.x[i]) && std::isfinite(l.y[i])) xr.add(l.x[i]), yr.add(l.y[i]);
  for (const auto& s : spec.stars) xr.add(s.x), yr.add(s.y);
  xr.finish();
  yr.finish();
  auto px = [&](double x) { return left + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto py = [&](double y) { return top + (1.0 - (y - yr.lo) / (yr.hi - yr.lo)) * ph; };

  std::string o;
  o += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(spec.width) + "\" height=\"" +
       std::to_string(spec.height) + "\" viewBox=\"0 0 " + std::to_string(spec.width) + " " +
       std::to_string(spec.height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o += "<text x=\"" + fmt("%.1f", left + pw / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" +
       xml_escape(spec.title) + "</text>\n";
  o += "<rect x=\"" + fmt("%.1f", left) + "\" y=\"" + fmt("%.1f", top) + "\" width=\"" + fmt("%.1f", pw) +
       "\" height=\"" + fmt("%.1f", ph) + "\" fill=\"none\" stroke=\"black\"/>\n";

  for (double v : ticks(xr.lo, xr.hi)) {
    const std::string x = fmt("%.2f", px(v));
    o += "<line x1=\"" + x + "\" y1=\"" + fmt("%.2f", top + ph) + "\" x2=\"" + x + "\" y2=\"" +
         fmt("%.2f", top + ph + 5) + "\" stroke=\"black\"/>\n";
    o += "<text x=\"" + x + "\" y=\"" + fmt("%.2f", top + ph + 18) + "\" text-anchor=\"middle\">" +
         fmt("%.4g", v) + "</text>\n";
  }
  for (double v : ticks(yr.lo, yr.hi)) {
    const std::string y = fmt("%.2f", py(v));
    o += "<line x1=\"" + fmt("%.2f", left - 5) + "\" y1=\"" + y + "\" x2=\"" + fmt("%.2f", left) + "\" y2=\"" + y +
         "\" stroke=\"black\"/>\n";
    o += "<text x=\"" + fmt("%.2f", left - 8) + "\" y=\"" + y + "\" text-anchor=\"end\" dominant-baseline=\"middle\">" +
         fmt("%.4g", v) + "</text>\n";
  }
  o += "<text x=\"" + fmt("%.1f", left + pw / 2) + "\" y=\"" + fmt("%.1f", H - 10) + "\" text-anchor=\"middle\">" +
       xml_escape(spec.x_label) + "</text>\n";
  o += "<text x=\"16\" y=\"" + fmt("%.1f", top + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
       fmt("%.1f", top + ph / 2) + ")\">" + xml_escape(spec.y_label) + "</text>\n";

  for (std::size_t k = 0; k < spec.lines.size(); ++k) {
    const auto& l = spec.lines[k];
    const char* color = kPalette[k % std::size(kPalette)];
    std::string pts;
    auto flush = [&] {
      if (!pts.empty())
        o += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"" + pts +
             "\"/>\n";
      pts.clear();
    };
    for (std::size_t i = 0; i < l.x.size() && i < l.y.size(); ++i) {
      if (!std::isfinite(l.x[i]) || !std::isfinite(l.y[i])) {
        flush();
        continue;
      }
      if (!pts.empty()) pts += ' ';
      pts += fmt("%.2f", px(l.x[i])) + "," + fmt("%.2f", py(l.y[i]));
    }
    flush();
    const double ly = top + 10 + 18.0 * static_cast<double>(k);
    o += "<line x1=\"" + fmt("%.1f", left + pw + 12) + "\" y1=\"" + fmt("%.1f", ly) + "\" x2=\"" +
         fmt("%.1f", left + pw + 32) + "\" y2=\"" + fmt("%.1f", ly) + "\" stroke=\"" + color +
         "\" stroke-width=\"2\"/>\n";
    o += "<text x=\"" + fmt("%.1f", left + pw + 38) + "\" y=\"" + fmt("%.1f", ly) +
         "\" dominant-baseline=\"middle\">" + xml_escape(l.label) + "</text>\n";
  }

  for (const auto& s : spec.stars) {
    const double cx = px(s.x), cy = py(s.y);
    std::string pts;
    for (int i = 0; i < 10; ++i) {
      const double r = i % 2 == 0 ? 9.0 : 4.0;
      const double a = -M_PI / 2 + i * M_PI / 5;
      if (i) pts += ' ';
      pts += fmt("%.2f", cx + r * std::cos(a)) + "," + fmt("%.2f", cy + r * std::sin(a));
    }
    o += "<polygon class=\"star\" points=\"" + pts + "\" fill=\"gold\" stroke=\"black\"><title>" +
         xml_escape(s.label) + "</title></polygon>\n";
  }
  o += "</svg>\n";
  return o;
}

}  // namespace momenta
