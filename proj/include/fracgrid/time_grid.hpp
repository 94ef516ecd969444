#pragma once

#include <cstddef>
#include <stdexcept>

namespace fracgrid {

/// Uniform grid on [0, T] with M steps; node m sits at m * tau.
class TimeGrid {
public:
  TimeGrid(double horizon, std::size_t steps) : horizon_(horizon), steps_(steps) {
    if (!(horizon > 0.0)) throw std::invalid_argument("TimeGrid: horizon must be > 0");
    if (steps < 1) throw std::invalid_argument("TimeGrid: steps must be >= 1");
  }

  double horizon() const noexcept { return horizon_; }
  std::size_t steps() const noexcept { return steps_; }
  double tau() const noexcept { return horizon_ / static_cast<double>(steps_); }
  double time(std::size_t m) const noexcept { return static_cast<double>(m) * tau(); }

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

private:
  double horizon_;
  std::size_t steps_;
};

} // namespace fracgrid
