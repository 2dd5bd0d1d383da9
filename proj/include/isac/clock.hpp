// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace isac {

/// Disciplined-oscillator residual: a fractional frequency offset that random
/// walks on a fixed 10 ms grid, and the time error it integrates to.
struct ClockModel {
  std::string id;
  double initial_time_offset_s = 0.0;
  double initial_ffo = 0.0;
  double ffo_random_walk_psd = 0.0;  // (fractional)^2 / s
  std::uint64_t seed = 0;
};

struct ClockState {
  double t = 0.0;
  double time_error_s = 0.0;
  double ffo = 0.0;
};

inline constexpr double kClockGridStep = 0.01;

/// Lazily extended realization of one ClockModel. The frequency offset is
/// linear between grid points and the time error is its exact integral, which
/// coincides with the trapezoidal rule on the grid.
class ClockProcess {
 public:
  explicit ClockProcess(ClockModel model);

  /// Throws Range for negative t.
  ClockState at(double t);

  const ClockModel& model() const { return model_; }

 private:
  void extend_to(std::size_t index);

  ClockModel model_;
  std::vector<double> ffo_;         // at grid points
  std::vector<double> time_error_;  // at grid points
};

/// One-shot evaluation; identical to ClockProcess(model).at(t).
ClockState clock_state_at(const ClockModel& model, double t);

/// Carrier frequency offset ffo * f_c. The same ffo drives the sampling clock.
inline double cfo_hz(const ClockState& state, double f_c) { return state.ffo * f_c; }

}  // namespace isac
