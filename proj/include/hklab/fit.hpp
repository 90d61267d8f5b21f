#pragma once

#include <cmath>
#include <vector>

#include "hklab/error.hpp"

namespace hklab {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

// Least-squares line through (x_k, y_k).
inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) fail(ErrorCode::InvalidArgument, "fit_line: size mismatch");
  if (x.size() < 2) fail(ErrorCode::EmptySeries, "a fit needs at least two points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) sx += x[i], sy += y[i];
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) fail(ErrorCode::EmptySeries, "a fit needs at least two distinct abscissae");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

// Fits log y = c - lambda x and returns lambda.
inline double fit_decay_exponent(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> ly;
  ly.reserve(y.size());
  for (double v : y) {
    if (!(v > 0.0)) fail(ErrorCode::InvalidArgument, "decay fit needs positive values");
    ly.push_back(std::log(v));
  }
  return -fit_line(x, ly).slope;
}

}  // namespace hklab
