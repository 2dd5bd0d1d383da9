// SPDX-License-Identifier: Apache-2.0
#include "isac/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "isac/error.hpp"

namespace isac {

namespace {

bool finite(const Vec3& v) { return v.allFinite(); }

double checked_distance(const Vec3& a, const Vec3& b, const char* what) {
  const double d = (a - b).norm();
  if (!(d > 0.0)) {
    std::ostringstream os;
    os << what << ": coincident points (" << a.transpose() << ")";
    fail(ErrorKind::Degenerate, os.str());
  }
  return d;
}

}  // namespace

Trajectory::Trajectory(std::string name, std::vector<std::pair<double, Vec3>> points)
    : name_(std::move(name)) {
  if (points.empty()) fail(ErrorKind::Validation, "trajectory '" + name_ + "' has no samples");
  samples_.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& [t, p] = points[i];
    if (!std::isfinite(t) || !finite(p))
      fail(ErrorKind::Validation, "trajectory '" + name_ + "' has a non-finite sample");
    if (i > 0 && !(t > points[i - 1].first))
      fail(ErrorKind::Validation, "trajectory '" + name_ + "' times are not strictly increasing");
    samples_.push_back({t, p, Vec3::Zero()});
  }
  for (std::size_t i = 0; i + 1 < samples_.size(); ++i) {
    samples_[i].vel = (samples_[i + 1].pos - samples_[i].pos) / (samples_[i + 1].t - samples_[i].t);
  }
}

Trajectory Trajectory::stationary(std::string name, const Vec3& pos) {
  return Trajectory(std::move(name), {{0.0, pos}});
}

Trajectory Trajectory::shifted(const Vec3& offset) const {
  Trajectory out = *this;
  for (auto& s : out.samples_) s.pos += offset;
  return out;
}

namespace {

// Index of the segment containing t; throws Range outside the span.
std::size_t segment_of(const Trajectory& traj, double t) {
  const auto& s = traj.samples();
  if (s.size() == 1) return 0;
  if (!(t >= s.front().t && t <= s.back().t)) {
    std::ostringstream os;
    os << "time " << t << " s outside trajectory '" << traj.name() << "' span [" << s.front().t
       << ", " << s.back().t << "]";
    fail(ErrorKind::Range, os.str());
  }
  auto it = std::upper_bound(s.begin(), s.end(), t,
                             [](double v, const TrajectorySample& x) { return v < x.t; });
  std::size_t i = static_cast<std::size_t>(it - s.begin());
  return i == 0 ? 0 : std::min(i - 1, s.size() - 2);
}

}  // namespace

Vec3 position_at(const Trajectory& traj, double t) {
  const auto& s = traj.samples();
  const std::size_t i = segment_of(traj, t);
  if (s.size() == 1) return s[0].pos;
  if (t == s[i].t) return s[i].pos;
  if (t == s[i + 1].t) return s[i + 1].pos;
  const double w = (t - s[i].t) / (s[i + 1].t - s[i].t);
  return s[i].pos + w * (s[i + 1].pos - s[i].pos);
}

Vec3 velocity_at(const Trajectory& traj, double t) {
  const auto& s = traj.samples();
  if (s.size() == 1) return Vec3::Zero();
  return s[segment_of(traj, t)].vel;
}

double los_delay(const Vec3& p_tx, const Vec3& p_rx) {
  return checked_distance(p_tx, p_rx, "los_delay") / kSpeedOfLight;
}

double bistatic_delay(const Vec3& p_tx, const Vec3& p_tgt, const Vec3& p_rx) {
  const double a = checked_distance(p_tx, p_tgt, "bistatic_delay (tx leg)");
  const double b = checked_distance(p_tgt, p_rx, "bistatic_delay (rx leg)");
  return (a + b) / kSpeedOfLight;
}

double bistatic_doppler(const Vec3& p_tx, const Vec3& p_tgt, const Vec3& v_tgt, const Vec3& p_rx,
                        double f_c, const Vec3& v_tx, const Vec3& v_rx) {
  if (!(f_c > 0.0)) fail(ErrorKind::Validation, "bistatic_doppler: carrier frequency must be > 0");
  const Vec3 u_tx = (p_tgt - p_tx) / checked_distance(p_tgt, p_tx, "bistatic_doppler (tx leg)");
  const Vec3 u_rx = (p_tgt - p_rx) / checked_distance(p_tgt, p_rx, "bistatic_doppler (rx leg)");
  const double range_rate = (v_tgt - v_tx).dot(u_tx) + (v_tgt - v_rx).dot(u_rx);
  return -f_c / kSpeedOfLight * range_rate;
}

double antenna_gain(const AntennaPattern& pattern, const Vec3& direction) {
  const double n = direction.norm();
  if (!(n > 0.0)) fail(ErrorKind::Degenerate, "antenna_gain: zero direction vector");
  if (pattern.kind == AntennaKind::Omni) return 0.0;
  const Vec3 bore = pattern.boresight.normalized();
  const double c = std::clamp(direction.dot(bore) / n, -1.0, 1.0);
  const double theta_deg = std::acos(c) * 180.0 / std::numbers::pi;
  const double half = pattern.beamwidth_10db_deg / 2.0;
  const double g = -10.0 * (theta_deg / half) * (theta_deg / half);
  return std::max(g, -30.0);
}

}  // namespace isac
