#include "cqft/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cqft/errors.hpp"

namespace cqft {

void TimeSeries::validate() const {
  if (t.size() != v.size()) throw std::invalid_argument("time series lengths differ");
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (!(t[i] > t[i - 1])) throw std::invalid_argument("time series times must increase strictly");
  }
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw std::invalid_argument("line fit needs at least two points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("line fit abscissae are degenerate");
  LineFit f;
  f.samples = n;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    ss += r * r;
  }
  f.rms = std::sqrt(ss / static_cast<double>(n));
  f.r2 = syy > 0.0 ? 1.0 - ss / syy : 1.0;
  return f;
}

TimeSeries decay_probability(const TimeSeries& n, double saturation) {
  if (saturation != 1.0 && saturation != 2.0)
    throw std::invalid_argument("decay saturation must be 1 or 2");
  n.validate();
  TimeSeries d{n.t, n.v};
  for (auto& v : d.v) v = std::abs(saturation - v);
  return d;
}

DecayFit fit_decay_rate(const TimeSeries& d, const FitWindow& window) {
  d.validate();
  std::vector<double> x, y;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d.t[i] < window.t_min) continue;
    if (d.v[i] < window.d_min || d.v[i] > window.d_max) continue;
    x.push_back(d.t[i]);
    y.push_back(std::log(d.v[i]));
  }
  if (x.size() < std::max<std::size_t>(window.min_samples, 2))
    throw ConvergenceError("decay fit window holds " + std::to_string(x.size()) + " samples, need " +
                           std::to_string(window.min_samples));
  const LineFit f = fit_line(x, y);
  return {-f.slope, f.rms, f.r2, x.front(), x.back(), x.size()};
}

LineFit late_slope(const TimeSeries& n) {
  n.validate();
  const std::size_t count = n.size() / 3;
  if (count < 3) throw std::invalid_argument("series too short for a late-time slope");
  const std::size_t first = n.size() - count;
  return fit_line({n.t.begin() + first, n.t.end()}, {n.v.begin() + first, n.v.end()});
}

PeakWidth fwhm(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 3) throw std::invalid_argument("fwhm needs a sampled curve");
  const auto top = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
  const double half = 0.5 * y[top];
  if (!(y[top] > 0.0)) throw ConvergenceError("fwhm: curve has no positive maximum");
  auto cross = [&](std::size_t a, std::size_t b) {
    return x[a] + (half - y[a]) * (x[b] - x[a]) / (y[b] - y[a]);
  };
  std::size_t l = top;
  while (l > 0 && y[l - 1] >= half) --l;
  if (l == 0) throw ConvergenceError("fwhm: no half-maximum crossing below the peak");
  std::size_t r = top;
  while (r + 1 < y.size() && y[r + 1] >= half) ++r;
  if (r + 1 == y.size()) throw ConvergenceError("fwhm: no half-maximum crossing above the peak");
  PeakWidth w;
  w.peak = x[top];
  w.height = y[top];
  w.left = cross(l - 1, l);
  w.right = cross(r, r + 1);
  w.width = w.right - w.left;
  return w;
}

SweepFit fit_sweep(std::vector<SweepRow>& rows, const ResonanceWindow& window) {
  std::sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) { return a.W_b < b.W_b; });
  std::vector<double> x, y;
  for (auto& r : rows) {
    r.in_window = window.contains(r.W_b);
    if (r.ok && !r.in_window && r.gamma > 0.0) {
      x.push_back(r.W_b);
      y.push_back(std::log(r.gamma));
    }
  }
  SweepFit out;
  out.used = x.size();
  if (x.size() < 2) throw ConvergenceError("sweep fit needs two usable rows outside the window");
  const LineFit f = fit_line(x, y);
  out.C = -f.slope;
  out.log_prefactor = f.intercept;
  out.r2 = f.r2;
  out.rms = f.rms;
  out.decreasing = true;
  for (std::size_t i = 1; i < y.size(); ++i) out.decreasing = out.decreasing && y[i] < y[i - 1];
  const double limit = std::max(3.0 * f.rms, 0.1);
  for (auto& r : rows) {
    if (!r.ok || r.gamma <= 0.0) continue;
    r.deviation = std::log(r.gamma) - (f.intercept + f.slope * r.W_b);
    r.deviates = std::abs(r.deviation) > limit;
  }
  return out;
}

}  // namespace cqft
