#include "cqft/grid.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <string>

#include "cqft/errors.hpp"

namespace cqft {

Grid::Grid(double length, std::size_t points) : length_(length), points_(points) {
  if (!(length > 0.0) || !std::isfinite(length))
    throw ConfigError("grid length must be positive, got " + std::to_string(length));
  if (points < 2 || !std::has_single_bit(points))
    throw ConfigError("grid point count must be a power of two >= 2, got " +
                      std::to_string(points));
  dx_ = length_ / static_cast<double>(points_);
  dp_ = 2.0 * std::numbers::pi / length_;
  x_.resize(points_);
  p_.resize(points_);
  const auto n = static_cast<std::ptrdiff_t>(points_);
  for (std::ptrdiff_t j = 0; j < n; ++j) {
    x_[j] = -0.5 * length_ + static_cast<double>(j) * dx_;
    const std::ptrdiff_t k = j < n / 2 ? j : j - n;
    p_[j] = static_cast<double>(k) * dp_;
  }
}

std::size_t Grid::nearest_mode(double p) const {
  const auto n = static_cast<long long>(points_);
  long long k = std::llround(p / dp_);
  k = ((k % n) + n) % n;
  return static_cast<std::size_t>(k);
}

Grid make_grid(double length, std::size_t points) { return Grid(length, points); }

}  // namespace cqft
