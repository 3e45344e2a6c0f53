#include "momenta/plots.hpp"

#include <map>
#include <sstream>

namespace momenta {
namespace {

double number(const CsvTable& t, std::size_t row, std::size_t col) {
  double v = 0.0;
  if (col >= t.rows[row].size() || !parse_double(t.rows[row][col], v))
    throw CsvSchemaError("line " + std::to_string(t.row_lines[row]) + ": bad number in column " +
                         t.header[col]);
  return v;
}

/// Lines keyed by a label column, in first-appearance order.
std::vector<PlotLine> grouped(const CsvTable& t, std::size_t xc, std::size_t yc, std::size_t labelc) {
  std::vector<PlotLine> lines;
  std::map<std::string, std::size_t> index;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (labelc >= t.rows[r].size()) throw CsvSchemaError("line " + std::to_string(t.row_lines[r]) + ": missing fields");
    const std::string& label = t.rows[r][labelc];
    auto [it, fresh] = index.emplace(label, lines.size());
    if (fresh) lines.push_back({label, {}, {}});
    lines[it->second].x.push_back(number(t, r, xc));
    lines[it->second].y.push_back(number(t, r, yc));
  }
  return lines;
}

}  // namespace

std::string_view plot_kind_name(PlotKind k) {
  switch (k) {
    case PlotKind::Trajectory: return "trajectory";
    case PlotKind::Stability: return "stability";
    case PlotKind::Efficacy: return "efficacy";
    case PlotKind::Loss: return "loss";
  }
  return "unknown";
}

PlotKind plot_kind_from_name(std::string_view name) {
  for (PlotKind k : {PlotKind::Trajectory, PlotKind::Stability, PlotKind::Efficacy, PlotKind::Loss})
    if (plot_kind_name(k) == name) return k;
  throw std::invalid_argument("unknown plot kind '" + std::string(name) +
                              "' (valid: trajectory, stability, efficacy, loss)");
}

std::vector<std::string> expected_header(PlotKind k) {
  switch (k) {
    case PlotKind::Trajectory: return {"t", "x", "y", "dynamics"};
    case PlotKind::Stability: return {"t", "log10_norm", "model"};
    case PlotKind::Efficacy:
    case PlotKind::Loss:
      return {"epoch", "train_loss", "test_accuracy", "forward_nfe", "backward_nfe", "efficacy_fwd", "efficacy_bwd"};
  }
  return {};
}

PlotSpec plot_from_csv(const CsvTable& t, PlotKind kind) {
  if (t.header != expected_header(kind))
    throw CsvSchemaError("header '" + join_header(t.header) + "' does not match " +
                         std::string(plot_kind_name(kind)) + " CSV '" + join_header(expected_header(kind)) + "'");
  if (t.rows.empty()) throw CsvSchemaError("CSV has no data rows");

  PlotSpec p;
  switch (kind) {
    case PlotKind::Trajectory: {
      p.x_label = "x";
      p.y_label = "y";
      p.lines = grouped(t, 1, 2, 3);
      p.title = "trajectories";
      for (const auto& c : t.comments) {
        std::istringstream in(c);
        std::string tag, name;
        double x = 0.0, y = 0.0;
        if (in >> tag >> name >> x >> y && tag == "minimizer") {
          p.stars.push_back({x, y, "minimizer"});
          p.title = name + " trajectories";
        }
      }
      break;
    }
    case PlotKind::Stability:
      p.title = "hidden-state norm growth";
      p.x_label = "t";
      p.y_label = "log10 ||h(t)||";
      p.lines = grouped(t, 0, 1, 2);
      break;
    case PlotKind::Efficacy:
    case PlotKind::Loss: {
      const bool eff = kind == PlotKind::Efficacy;
      p.title = eff ? "efficacy (accuracy per NFE)" : "training loss";
      p.x_label = "epoch";
      p.y_label = eff ? "efficacy" : "train loss";
      std::vector<PlotLine> lines = eff ? std::vector<PlotLine>{{"efficacy_fwd", {}, {}}, {"efficacy_bwd", {}, {}}}
                                        : std::vector<PlotLine>{{"train_loss", {}, {}}};
      for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const double e = number(t, r, 0);
        if (eff) {
          lines[0].x.push_back(e), lines[0].y.push_back(number(t, r, 5));
          lines[1].x.push_back(e), lines[1].y.push_back(number(t, r, 6));
        } else {
          lines[0].x.push_back(e), lines[0].y.push_back(number(t, r, 1));
        }
      }
      p.lines = std::move(lines);
      break;
    }
  }
  return p;
}

}  // namespace momenta
