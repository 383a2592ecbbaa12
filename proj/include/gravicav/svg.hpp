// Minimal deterministic SVG plotting: stacked line panels, scatter panels
// and heatmaps. Identical input always yields identical bytes.
#ifndef GRAVICAV_SVG_HPP
#define GRAVICAV_SVG_HPP

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

namespace gravicav::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool markers = false;  // dots instead of a polyline
  double marker_radius = 0.8;
};

struct Panel {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
};

struct Range {
  double lo, hi;
};

/// Data range widened by 5% on each side; a degenerate range is widened
/// around its value.
Range padded_range(const std::vector<const std::vector<double>*>& data);

/// Panels stacked vertically, one axes box each.
std::string render_panels(const std::vector<Panel>& panels, int width = 900,
                          int panel_height = 220);

/// Heatmap of `values` (rows index y, columns index x) with cell-centre axes.
std::string render_heatmap(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                           const Eigen::MatrixXd& values, const std::string& title,
                           const std::string& x_label, const std::string& y_label,
                           int width = 700, int height = 500);

void write(const std::filesystem::path& path, const std::string& svg);

}  // namespace gravicav::svg

#endif  // GRAVICAV_SVG_HPP
