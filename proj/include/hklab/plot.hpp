#pragma once

// Minimal SVG line plots with a logarithmic y axis.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "hklab/error.hpp"
#include "hklab/fit.hpp"

namespace hklab {

struct Series {
  std::string title;
  std::string x_label = "x";
  std::string y_label = "y";
  std::vector<double> x;
  std::vector<double> y;
};

struct Plot {
  std::string svg;
  LineFit fit;  // least squares of ln y against x
};

inline std::string svg_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

inline std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

inline Plot emit_plot(const Series& s) {
  if (s.x.size() != s.y.size()) fail(ErrorCode::InvalidArgument, "series x and y differ in length");
  if (s.x.size() < 2) fail(ErrorCode::EmptySeries, "plot needs at least two points for the fit");
  std::vector<double> ly;
  for (double v : s.y) {
    if (!(v > 0.0) || !std::isfinite(v)) fail(ErrorCode::InvalidArgument, "log plot needs positive finite values");
    ly.push_back(std::log10(v));
  }
  Plot p;
  std::vector<double> ln;
  for (double v : s.y) ln.push_back(std::log(v));
  p.fit = fit_line(s.x, ln);

  const double W = 640, H = 420, left = 70, right = 20, top = 40, bottom = 50;
  const auto [xmin_it, xmax_it] = std::minmax_element(s.x.begin(), s.x.end());
  double xmin = *xmin_it, xmax = *xmax_it;
  double ymin = std::floor(*std::min_element(ly.begin(), ly.end()));
  double ymax = std::ceil(*std::max_element(ly.begin(), ly.end()));
  if (ymax == ymin) ymax = ymin + 1;
  if (xmax == xmin) xmax = xmin + 1;
  auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * (W - left - right); };
  auto py = [&](double l) { return top + (ymax - l) / (ymax - ymin) * (H - top - bottom); };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"420\" viewBox=\"0 0 640 420\">\n";
  svg += "<rect width=\"640\" height=\"420\" fill=\"white\"/>\n";
  svg += "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">" +
         svg_escape(s.title) + "</text>\n";
  // axes and decade ticks
  svg += "<g stroke=\"black\" fill=\"none\"><rect x=\"" + fmt("%.1f", left) + "\" y=\"" + fmt("%.1f", top) +
         "\" width=\"" + fmt("%.1f", W - left - right) + "\" height=\"" + fmt("%.1f", H - top - bottom) + "\"/></g>\n";
  const int step = std::max(1, int(std::ceil((ymax - ymin) / 10)));
  for (int d = int(ymin); d <= int(ymax); d += step) {
    const double yy = py(d);
    svg += "<line x1=\"" + fmt("%.1f", left) + "\" x2=\"" + fmt("%.1f", W - right) + "\" y1=\"" + fmt("%.1f", yy) +
           "\" y2=\"" + fmt("%.1f", yy) + "\" stroke=\"#ddd\"/>\n";
    svg += "<text x=\"" + fmt("%.1f", left - 6) + "\" y=\"" + fmt("%.1f", yy + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">1e" + std::to_string(d) + "</text>\n";
  }
  for (double xv : {xmin, xmax})
    svg += "<text x=\"" + fmt("%.1f", px(xv)) + "\" y=\"" + fmt("%.1f", H - bottom + 16) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" + fmt("%g", xv) + "</text>\n";
  svg += "<text x=\"320\" y=\"" + fmt("%.1f", H - 10) + "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" +
         svg_escape(s.x_label) + "</text>\n";
  svg += "<text x=\"16\" y=\"" + fmt("%.1f", H / 2) + "\" transform=\"rotate(-90 16 " + fmt("%.1f", H / 2) +
         ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" + svg_escape(s.y_label) + "</text>\n";

  std::string pts;
  for (std::size_t k = 0; k < s.x.size(); ++k) pts += fmt("%.2f", px(s.x[k])) + "," + fmt("%.2f", py(ly[k])) + " ";
  svg += "<polyline fill=\"none\" stroke=\"#1f5fa8\" stroke-width=\"2\" points=\"" + pts + "\"/>\n";
  for (std::size_t k = 0; k < s.x.size(); ++k)
    svg += "<circle cx=\"" + fmt("%.2f", px(s.x[k])) + "\" cy=\"" + fmt("%.2f", py(ly[k])) + "\" r=\"3\" fill=\"#1f5fa8\"/>\n";

  // fitted line, clipped to the plot box by construction of the range
  const double l0 = (p.fit.intercept + p.fit.slope * xmin) / std::log(10.0);
  const double l1 = (p.fit.intercept + p.fit.slope * xmax) / std::log(10.0);
  svg += "<line x1=\"" + fmt("%.2f", px(xmin)) + "\" y1=\"" + fmt("%.2f", py(std::clamp(l0, ymin, ymax))) + "\" x2=\"" +
         fmt("%.2f", px(xmax)) + "\" y2=\"" + fmt("%.2f", py(std::clamp(l1, ymin, ymax))) +
         "\" stroke=\"#c0392b\" stroke-dasharray=\"6 4\"/>\n";
  const double slope = p.fit.slope == 0.0 ? 0.0 : p.fit.slope;  // no "-0"
  svg += "<text x=\"" + fmt("%.1f", W - right - 8) + "\" y=\"" + fmt("%.1f", top + 18) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"13\" fill=\"#c0392b\">slope d(ln y)/dx = " +
         fmt("%.6g", slope) + "</text>\n";
  svg += "</svg>\n";
  p.svg = std::move(svg);
  return p;
}

}  // namespace hklab
