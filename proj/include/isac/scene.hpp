// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

namespace isac {

/// Position or velocity in a local East-North-Up frame, meters (m/s).
using Vec3 = Eigen::Vector3d;

inline constexpr double kSpeedOfLight = 299792458.0;

struct TrajectorySample {
  double t = 0.0;
  Vec3 pos = Vec3::Zero();
  Vec3 vel = Vec3::Zero();  // velocity over [t, t_next); zero on the last sample
};

/// Piecewise-linear trajectory. Velocities are derived from the positions on
/// construction so that position and velocity can never disagree.
class Trajectory {
 public:
  Trajectory() = default;
  /// Throws Validation if times are not strictly increasing or a value is not finite.
  Trajectory(std::string name, std::vector<std::pair<double, Vec3>> points);

  static Trajectory stationary(std::string name, const Vec3& pos);

  const std::string& name() const { return name_; }
  const std::vector<TrajectorySample>& samples() const { return samples_; }
  double start_time() const { return samples_.front().t; }
  double end_time() const { return samples_.back().t; }
  bool is_stationary() const { return samples_.size() == 1; }

  /// Translated copy, used by equivariance checks.
  Trajectory shifted(const Vec3& offset) const;

 private:
  std::string name_;
  std::vector<TrajectorySample> samples_;
};

/// Position at time t by linear interpolation; exact at sample points.
/// A single-sample trajectory is stationary and valid for every t.
/// Throws Range for t outside [first, last].
Vec3 position_at(const Trajectory& traj, double t);

/// Velocity of the segment containing t (the segment starting at t for sample times).
Vec3 velocity_at(const Trajectory& traj, double t);

enum class AntennaKind { Omni, Directional };

struct AntennaPattern {
  AntennaKind kind = AntennaKind::Omni;
  Vec3 boresight = Vec3::UnitX();
  double beamwidth_10db_deg = 40.0;
};

enum class NodeRole { Tx, Rx };

struct Node {
  std::string id;
  NodeRole role = NodeRole::Rx;
  Trajectory trajectory;
  AntennaPattern antenna;
  double eirp_dbm = 0.0;            // tx only
  double noise_floor_dbm_hz = -168.0;  // rx only
  double los_attenuation_db = 0.0;  // rx only, absorbers in front of the antenna
  std::string clock_id;
  std::uint64_t hw_seed = 0;        // hardware frequency response of this chain
};

struct Target {
  std::string id;
  Trajectory trajectory;
  double rcs_dbsm = -3.0;
};

struct ClutterTap {
  std::string rx_id;
  double delay_s = 0.0;
  double gain_db = 0.0;  // relative to the LoS path gain
  double phase_rad = 0.0;
};

/// |p_tx - p_rx| / c. Throws Degenerate for coincident points.
double los_delay(const Vec3& p_tx, const Vec3& p_rx);

/// (|p_tx - p_tgt| + |p_tgt - p_rx|) / c. Throws Degenerate if the target
/// coincides with either endpoint.
double bistatic_delay(const Vec3& p_tx, const Vec3& p_tgt, const Vec3& p_rx);

/// Bistatic Doppler in Hz; positive for a target closing on both endpoints.
/// Optional endpoint velocities add their own range-rate terms.
double bistatic_doppler(const Vec3& p_tx, const Vec3& p_tgt, const Vec3& v_tgt, const Vec3& p_rx,
                        double f_c, const Vec3& v_tx = Vec3::Zero(),
                        const Vec3& v_rx = Vec3::Zero());

/// Pattern gain in dB toward `direction` (need not be normalized).
/// Directional: -10 (theta / (bw/2))^2 dB floored at -30 dB.
double antenna_gain(const AntennaPattern& pattern, const Vec3& direction);

}  // namespace isac
