#pragma once

// Minimal standalone SVG line-plot writer. Output is a pure function of the
// PlotSpec (fixed canvas, fixed number formatting), so identical inputs give
// identical bytes.

#include <string>
#include <vector>

namespace momenta {

struct PlotLine {
  std::string label;
  std::vector<double> x, y;  // non-finite points break the polyline
};

struct PlotMarker {
  double x = 0.0, y = 0.0;
  std::string label;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotLine> lines;
  std::vector<PlotMarker> stars;
  int width = 720;
  int height = 480;
};

std::string render_svg(const PlotSpec& spec);

/// Escapes &, <, >, " for text nodes and attributes.
std::string xml_escape(const std::string& s);

}  // namespace momenta
