#include "gravicav/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "gravicav/io.hpp"

namespace gravicav::svg {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Box {
  double x0, y0, w, h;
  Range xr, yr;
  double px(double x) const { return x0 + (x - xr.lo) / (xr.hi - xr.lo) * w; }
  double py(double y) const { return y0 + h - (y - yr.lo) / (yr.hi - yr.lo) * h; }
};

void axes(std::ostringstream& o, const Box& b, const std::string& title, const std::string& xl,
          const std::string& yl) {
  o << "<rect x=\"" << num(b.x0) << "\" y=\"" << num(b.y0) << "\" width=\"" << num(b.w)
    << "\" height=\"" << num(b.h) << "\" fill=\"none\" stroke=\"#000\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double fx = b.xr.lo + (b.xr.hi - b.xr.lo) * k / 4.0;
    const double fy = b.yr.lo + (b.yr.hi - b.yr.lo) * k / 4.0;
    o << "<text x=\"" << num(b.px(fx)) << "\" y=\"" << num(b.y0 + b.h + 14)
      << "\" font-size=\"10\" text-anchor=\"middle\">" << tick_label(fx) << "</text>\n";
    o << "<text x=\"" << num(b.x0 - 4) << "\" y=\"" << num(b.py(fy) + 3)
      << "\" font-size=\"10\" text-anchor=\"end\">" << tick_label(fy) << "</text>\n";
  }
  o << "<text x=\"" << num(b.x0 + b.w / 2) << "\" y=\"" << num(b.y0 - 6)
    << "\" font-size=\"12\" text-anchor=\"middle\">" << escape(title) << "</text>\n";
  o << "<text x=\"" << num(b.x0 + b.w / 2) << "\" y=\"" << num(b.y0 + b.h + 28)
    << "\" font-size=\"11\" text-anchor=\"middle\">" << escape(xl) << "</text>\n";
  o << "<text x=\"" << num(b.x0 - 40) << "\" y=\"" << num(b.y0 + b.h / 2)
    << "\" font-size=\"11\" text-anchor=\"middle\" transform=\"rotate(-90 " << num(b.x0 - 40)
    << ' ' << num(b.y0 + b.h / 2) << ")\">" << escape(yl) << "</text>\n";
}

}  // namespace

Range padded_range(const std::vector<const std::vector<double>*>& data) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto* v : data)
    for (double x : *v)
      if (std::isfinite(x)) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      }
  if (!std::isfinite(lo)) return {0.0, 1.0};
  if (hi - lo <= 0.0) {
    const double pad = lo == 0.0 ? 0.5 : 0.05 * std::abs(lo);
    return {lo - pad, hi + pad};
  }
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

std::string render_panels(const std::vector<Panel>& panels, int width, int panel_height) {
  const double margin_l = 70, margin_r = 20, margin_t = 30, margin_b = 45;
  const int height = static_cast<int>(panels.size()) * panel_height;
  std::ostringstream o;
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n";
  for (std::size_t k = 0; k < panels.size(); ++k) {
    const Panel& panel = panels[k];
    std::vector<const std::vector<double>*> xs, ys;
    for (const auto& s : panel.series) {
      xs.push_back(&s.x);
      ys.push_back(&s.y);
    }
    Box b{margin_l, static_cast<double>(k) * panel_height + margin_t, width - margin_l - margin_r,
          panel_height - margin_t - margin_b, padded_range(xs), padded_range(ys)};
    axes(o, b, panel.title, panel.x_label, panel.y_label);
    for (std::size_t s = 0; s < panel.series.size(); ++s) {
      const Series& ser = panel.series[s];
      const char* color = kPalette[s % std::size(kPalette)];
      const std::size_t n = std::min(ser.x.size(), ser.y.size());
      if (ser.markers) {
        for (std::size_t i = 0; i < n; ++i)
          o << "<circle cx=\"" << num(b.px(ser.x[i])) << "\" cy=\"" << num(b.py(ser.y[i]))
            << "\" r=\"" << num(ser.marker_radius) << "\" fill=\"" << color << "\"/>\n";
      } else if (n == 1) {
        o << "<circle cx=\"" << num(b.px(ser.x[0])) << "\" cy=\"" << num(b.py(ser.y[0]))
          << "\" r=\"2\" fill=\"" << color << "\"/>\n";
      } else if (n > 1) {
        o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"0.7\" points=\"";
        for (std::size_t i = 0; i < n; ++i)
          o << (i ? " " : "") << num(b.px(ser.x[i])) << ',' << num(b.py(ser.y[i]));
        o << "\"/>\n";
      }
      if (!ser.label.empty())
        o << "<text x=\"" << num(b.x0 + b.w - 6) << "\" y=\"" << num(b.y0 + 14 + 12.0 * s)
          << "\" font-size=\"10\" text-anchor=\"end\" fill=\"" << color << "\">"
          << escape(ser.label) << "</text>\n";
    }
  }
  o << "</svg>\n";
  return o.str();
}

std::string render_heatmap(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                           const Eigen::MatrixXd& values, const std::string& title,
                           const std::string& x_label, const std::string& y_label, int width,
                           int height) {
  const double margin_l = 70, margin_r = 20, margin_t = 30, margin_b = 45;
  const double hx = x.size() > 1 ? x[1] - x[0] : 1.0;
  const double hy = y.size() > 1 ? y[1] - y[0] : 1.0;
  Box b{margin_l, margin_t, width - margin_l - margin_r, height - margin_t - margin_b,
        {x[0] - hx / 2, x[x.size() - 1] + hx / 2}, {y[0] - hy / 2, y[y.size() - 1] + hy / 2}};
  const double vmax = values.size() ? values.maxCoeff() : 1.0;
  std::ostringstream o;
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n";
  const double cw = b.w / static_cast<double>(x.size());
  const double ch = b.h / static_cast<double>(y.size());
  for (Eigen::Index j = 0; j < values.rows(); ++j)
    for (Eigen::Index i = 0; i < values.cols(); ++i) {
      const double v = vmax > 0.0 ? std::clamp(values(j, i) / vmax, 0.0, 1.0) : 0.0;
      const int shade = static_cast<int>(std::lround(255.0 * (1.0 - v)));
      o << "<rect x=\"" << num(b.x0 + i * cw) << "\" y=\"" << num(b.y0 + b.h - (j + 1) * ch)
        << "\" width=\"" << num(cw + 0.05) << "\" height=\"" << num(ch + 0.05) << "\" fill=\"rgb("
        << shade << ',' << shade << ",255)\"/>\n";
    }
  axes(o, b, title, x_label, y_label);
  o << "</svg>\n";
  return o.str();
}

void write(const std::filesystem::path& path, const std::string& svg) {
  write_atomically(path, [&](std::ostream& out) { out << svg; });
}

}  // namespace gravicav::svg
