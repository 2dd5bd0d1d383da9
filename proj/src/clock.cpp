// SPDX-License-Identifier: Apache-2.0
#include "isac/clock.hpp"

#include <cmath>
#include <sstream>

#include "isac/error.hpp"
#include "isac/rng.hpp"

namespace isac {

namespace {

// Increment n of the walk depends only on (seed, n); no generator state needs
// to be carried between extensions.
double walk_increment(std::uint64_t seed, std::size_t n) {
  Rng rng(derive_seed(seed, n));
  return rng.normal();
}

}  // namespace

ClockProcess::ClockProcess(ClockModel model) : model_(std::move(model)) {
  if (!(model_.ffo_random_walk_psd >= 0.0))
    fail(ErrorKind::Validation, "clock '" + model_.id + "': random-walk psd must be >= 0");
  ffo_.push_back(model_.initial_ffo);
  time_error_.push_back(model_.initial_time_offset_s);
}

void ClockProcess::extend_to(std::size_t index) {
  const double step_sigma = std::sqrt(model_.ffo_random_walk_psd * kClockGridStep);
  while (ffo_.size() <= index) {
    const std::size_t j = ffo_.size();
    const double prev = ffo_.back();
    const double next = step_sigma > 0.0 ? prev + step_sigma * walk_increment(model_.seed, j) : prev;
    ffo_.push_back(next);
    time_error_.push_back(time_error_.back() + 0.5 * kClockGridStep * (prev + next));
  }
}

ClockState ClockProcess::at(double t) {
  if (!(t >= 0.0)) {
    std::ostringstream os;
    os << "clock '" << model_.id << "': negative time " << t;
    fail(ErrorKind::Range, os.str());
  }
  const auto j = static_cast<std::size_t>(std::floor(t / kClockGridStep));
  extend_to(j + 1);
  const double u = t - static_cast<double>(j) * kClockGridStep;
  const double f0 = ffo_[j];
  const double slope = (ffo_[j + 1] - f0) / kClockGridStep;
  ClockState s;
  s.t = t;
  s.ffo = f0 + slope * u;
  s.time_error_s = time_error_[j] + f0 * u + 0.5 * slope * u * u;
  return s;
}

ClockState clock_state_at(const ClockModel& model, double t) { return ClockProcess(model).at(t); }

}  // namespace isac
