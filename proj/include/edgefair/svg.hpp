#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

namespace edgefair {

/// Minimal deterministic SVG charts for the experiment commands. CSVs remain
/// the source of truth; these are a quick visual aid.
struct ChartSeries {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

namespace detail {

inline std::string svg_coord(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.2f", v);
  return buffer;
}

inline std::string svg_tick(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.4g", v);
  return buffer;
}

}  // namespace detail

inline std::string render_chart(const std::string& title,
                                const std::string& x_label,
                                const std::string& y_label,
                                const std::vector<ChartSeries>& series,
                                bool scatter = false) {
  const double width = 640.0;
  const double height = 440.0;
  const double left = 70.0;
  const double right = 620.0;
  const double top = 40.0;
  const double bottom = 380.0;
  const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                           "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

  double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
  bool first = true;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      if (first) {
        xmin = xmax = x;
        ymin = ymax = y;
        first = false;
      }
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  }
  if (xmax == xmin) xmax = xmin + 1.0;
  if (ymax == ymin) ymax = ymin + 1.0;
  const auto sx = [&](double x) {
    return left + (x - xmin) / (xmax - xmin) * (right - left);
  };
  const auto sy = [&](double y) {
    return bottom - (y - ymin) / (ymax - ymin) * (bottom - top);
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << (width / 2) << "\" y=\"22\" text-anchor=\"middle\" "
         "font-size=\"15\" font-family=\"sans-serif\">"
      << title << "</text>\n";
  // Axes and ticks.
  svg << "<line x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\"" << right
      << "\" y2=\"" << bottom << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left
      << "\" y2=\"" << bottom << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 5; ++t) {
    const double fx = xmin + (xmax - xmin) * t / 5.0;
    const double fy = ymin + (ymax - ymin) * t / 5.0;
    svg << "<text x=\"" << detail::svg_coord(sx(fx)) << "\" y=\""
        << (bottom + 18) << "\" text-anchor=\"middle\" font-size=\"11\" "
           "font-family=\"sans-serif\">"
        << detail::svg_tick(fx) << "</text>\n";
    svg << "<text x=\"" << (left - 8) << "\" y=\""
        << detail::svg_coord(sy(fy) + 4) << "\" text-anchor=\"end\" "
           "font-size=\"11\" font-family=\"sans-serif\">"
        << detail::svg_tick(fy) << "</text>\n";
  }
  svg << "<text x=\"" << (width / 2) << "\" y=\"" << (bottom + 40)
      << "\" text-anchor=\"middle\" font-size=\"13\" "
         "font-family=\"sans-serif\">"
      << x_label << "</text>\n";
  svg << "<text x=\"18\" y=\"" << ((top + bottom) / 2)
      << "\" text-anchor=\"middle\" font-size=\"13\" "
         "font-family=\"sans-serif\" transform=\"rotate(-90 18 "
      << ((top + bottom) / 2) << ")\">" << y_label << "</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = palette[i % 8];
    if (scatter) {
      for (const auto& [x, y] : series[i].points) {
        svg << "<circle cx=\"" << detail::svg_coord(sx(x)) << "\" cy=\""
            << detail::svg_coord(sy(y)) << "\" r=\"3\" fill=\"" << color
            << "\" fill-opacity=\"0.7\"/>\n";
      }
    } else {
      svg << "<polyline fill=\"none\" stroke=\"" << color
          << "\" stroke-width=\"1.5\" points=\"";
      for (const auto& [x, y] : series[i].points) {
        svg << detail::svg_coord(sx(x)) << ',' << detail::svg_coord(sy(y))
            << ' ';
      }
      svg << "\"/>\n";
    }
    svg << "<text x=\"" << (right - 140) << "\" y=\""
        << (top + 16.0 * static_cast<double>(i)) << "\" font-size=\"12\" "
           "font-family=\"sans-serif\" fill=\""
        << color << "\">" << series[i].name << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace edgefair
