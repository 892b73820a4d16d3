#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

namespace cqft {

/// Sampled observable with strictly increasing times.
struct TimeSeries {
  std::vector<double> t;
  std::vector<double> v;

  std::size_t size() const { return t.size(); }
  /// Throws std::invalid_argument for mismatched lengths or non-increasing times.
  void validate() const;
};

/// Ordinary least squares y = intercept + slope x.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double rms = 0.0;  ///< RMS residual
  std::size_t samples = 0;
};

/// Throws std::invalid_argument with fewer than two points or degenerate x.
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// d(T) = |saturation - N(T)|, saturation 1 (single bound state) or 2 (two states).
TimeSeries decay_probability(const TimeSeries& n, double saturation);

struct FitWindow {
  double d_min = 0.05;
  double d_max = 0.8;
  double t_min = -std::numeric_limits<double>::infinity();
  std::size_t min_samples = 10;
};

struct DecayFit {
  double gamma = 0.0;     ///< [1/t_pl]
  double residual = 0.0;  ///< RMS of the ln d fit
  double r2 = 0.0;
  double t_lo = 0.0, t_hi = 0.0;
  std::size_t samples = 0;
};

/// Least squares on ln d over samples with t >= t_min and d_min <= d <= d_max.
/// Throws ConvergenceError when fewer than `min_samples` qualify.
DecayFit fit_decay_rate(const TimeSeries& d, const FitWindow& window = {});

/// Least-squares slope over the final third of the series (at least 3 samples).
LineFit late_slope(const TimeSeries& n);

struct PeakWidth {
  double width = 0.0;
  double peak = 0.0;   ///< abscissa of the maximum
  double height = 0.0;
  double left = 0.0, right = 0.0;
};

/// Full width at half maximum around the global maximum, linearly
/// interpolated. Throws ConvergenceError when the curve does not fall below
/// half maximum on both sides.
PeakWidth fwhm(const std::vector<double>& x, const std::vector<double>& y);

struct SweepRow {
  double D = 0.0;
  double V0 = 0.0;
  double W = 0.0;
  double E_g = 0.0;
  double W_b = 0.0;
  double gamma = 0.0;
  double t_lo = 0.0, t_hi = 0.0;
  double residual = 0.0;
  bool ok = false;          ///< tuned, fitted and subcritical; usable for the sweep fit
  std::string note;         ///< reason when !ok
  bool in_window = false;   ///< inside the excluded width window
  double deviation = 0.0;   ///< ln Gamma minus the fitted line
  bool deviates = false;
};

struct SweepFit {
  double C = 0.0;          ///< Gamma ~ exp(-C W_b)
  double log_prefactor = 0.0;
  double r2 = 0.0;
  double rms = 0.0;
  std::size_t used = 0;
  bool decreasing = false;  ///< Gamma strictly decreasing in W_b over used rows
};

struct ResonanceWindow {
  double lo = 2.062;
  double hi = 2.197;
  bool contains(double w) const { return w > lo && w < hi; }
};

/// Sorts rows by W_b, fits ln Gamma = a - C W_b on successful rows outside
/// the window, then stores every row's deviation from the line. A row is
/// flagged when its deviation exceeds max(3 rms, 0.1).
SweepFit fit_sweep(std::vector<SweepRow>& rows, const ResonanceWindow& window = {});

}  // namespace cqft
