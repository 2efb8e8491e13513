#pragma once

// Minimal deterministic SVG line and stem plots. A rendering aid only; the
// CSV written next to it carries the data.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace cascade::cli {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;  // NaN breaks a line
};

enum class PlotStyle { line, stem };

struct Plot {
  std::string title;
  std::string x_label;
  std::string y_label;
  PlotStyle style = PlotStyle::line;
  std::vector<Series> series;
};

namespace detail {

inline std::string fixed(double v, int digits = 2) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string escape_xml(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

/// Round-number tick positions covering [lo, hi].
inline std::vector<double> ticks(double lo, double hi, int target = 5) {
  const double span = hi - lo;
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (span / step <= target) break;
  }
  std::vector<double> out;
  for (double t = std::ceil(lo / step - 1e-9) * step; t <= hi + 1e-9 * step; t += step) {
    out.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
  }
  return out;
}

inline const char* palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  return colors[i % 6];
}

}  // namespace detail

inline std::string render_svg(const Plot& plot) {
  constexpr double W = 720, H = 450, L = 70, R = 170, T = 40, B = 55;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : plot.series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  }
  if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (plot.style == PlotStyle::stem) ymin = std::min(ymin, 0.0);
  if (xmax <= xmin) xmax = xmin + 1.0;
  if (ymax <= ymin) ymax = ymin + 1.0;
  const double pad = 0.05 * (ymax - ymin);
  ymax += pad;
  if (plot.style == PlotStyle::line) ymin -= pad;

  const double pw = W - L - R, ph = H - T - B;
  auto X = [&](double x) { return L + (x - xmin) / (xmax - xmin) * pw; };
  auto Y = [&](double y) { return T + (ymax - y) / (ymax - ymin) * ph; };
  using detail::fixed;

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << fixed(L + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
     << detail::escape_xml(plot.title) << "</text>\n";
  os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double t : detail::ticks(xmin, xmax)) {
    os << "<line x1=\"" << fixed(X(t)) << "\" y1=\"" << T + ph << "\" x2=\"" << fixed(X(t)) << "\" y2=\""
       << T + ph + 5 << "\" stroke=\"black\"/><text x=\"" << fixed(X(t)) << "\" y=\"" << T + ph + 18
       << "\" text-anchor=\"middle\">" << fixed(t, 3) << "</text>\n";
  }
  for (double t : detail::ticks(ymin, ymax)) {
    os << "<line x1=\"" << L - 5 << "\" y1=\"" << fixed(Y(t)) << "\" x2=\"" << L << "\" y2=\"" << fixed(Y(t))
       << "\" stroke=\"black\"/><text x=\"" << L - 8 << "\" y=\"" << fixed(Y(t) + 4)
       << "\" text-anchor=\"end\">" << fixed(t, 3) << "</text>\n";
  }
  os << "<text x=\"" << fixed(L + pw / 2) << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">"
     << detail::escape_xml(plot.x_label) << "</text>\n";
  os << "<text transform=\"translate(18," << fixed(T + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
     << detail::escape_xml(plot.y_label) << "</text>\n";

  const double stem_shift = plot.series.size() > 1 ? 0.15 * pw / std::max<double>(1.0, plot.series[0].x.size()) : 0;
  for (std::size_t k = 0; k < plot.series.size(); ++k) {
    const Series& s = plot.series[k];
    const char* color = detail::palette(k);
    if (plot.style == PlotStyle::line) {
      std::string points;
      auto flush = [&] {
        if (!points.empty()) {
          os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"" << points
             << "\"/>\n";
        }
        points.clear();
      };
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.y[i])) {
          flush();
          continue;
        }
        if (!points.empty()) points += ' ';
        points += fixed(X(s.x[i])) + "," + fixed(Y(s.y[i]));
      }
      flush();
    } else {
      const double shift = (static_cast<double>(k) - 0.5 * static_cast<double>(plot.series.size() - 1)) * stem_shift;
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.y[i])) continue;
        const double x = X(s.x[i]) + shift;
        os << "<line x1=\"" << fixed(x) << "\" y1=\"" << fixed(Y(0.0)) << "\" x2=\"" << fixed(x) << "\" y2=\""
           << fixed(Y(s.y[i])) << "\" stroke=\"" << color << "\"/><circle cx=\"" << fixed(x) << "\" cy=\""
           << fixed(Y(s.y[i])) << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
      }
    }
    const double ly = T + 10 + 18.0 * static_cast<double>(k);
    os << "<line x1=\"" << W - R + 12 << "\" y1=\"" << fixed(ly) << "\" x2=\"" << W - R + 36 << "\" y2=\""
       << fixed(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/><text x=\"" << W - R + 42
       << "\" y=\"" << fixed(ly + 4) << "\">" << detail::escape_xml(s.label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace cascade::cli
