#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "invrescale/errors.hpp"

namespace invrescale {

// DDPM schedule with linearly spaced β_1..β_T and ᾱ_t = Π_{i≤t} (1 − β_i),
// tabulated in double.
class NoiseSchedule {
 public:
  explicit NoiseSchedule(int steps = 1000, double beta_start = 1e-4, double beta_end = 0.02)
      : steps_(steps), beta_start_(beta_start), beta_end_(beta_end) {
    if (steps < 1) throw ConfigError("noise schedule needs at least one step");
    if (!(beta_start > 0.0 && beta_end < 1.0 && beta_start <= beta_end))
      throw ConfigError("noise schedule requires 0 < beta_start <= beta_end < 1");
    alpha_bar_.resize(static_cast<std::size_t>(steps));
    double prod = 1.0;
    for (int i = 1; i <= steps; ++i) {
      const double beta =
          steps == 1 ? beta_start : beta_start + (beta_end - beta_start) * (i - 1) / static_cast<double>(steps - 1);
      prod *= 1.0 - beta;
      alpha_bar_[static_cast<std::size_t>(i - 1)] = prod;
    }
  }

  int steps() const noexcept { return steps_; }
  double beta_start() const noexcept { return beta_start_; }
  double beta_end() const noexcept { return beta_end_; }

  double alpha_bar(int t) const {
    if (t < 1 || t > steps_)
      throw ShapeError("timestep " + std::to_string(t) + " outside [1, " + std::to_string(steps_) + "]");
    return alpha_bar_[static_cast<std::size_t>(t - 1)];
  }

  const std::vector<double>& table() const noexcept { return alpha_bar_; }

 private:
  int steps_;
  double beta_start_;
  double beta_end_;
  std::vector<double> alpha_bar_;
};

inline double alpha_bar(const NoiseSchedule& sched, int t) { return sched.alpha_bar(t); }

}  // namespace invrescale
