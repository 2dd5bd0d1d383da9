// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <span>
#include <string>
#include <vector>

#include "isac/detect.hpp"

namespace isac {

enum class TrackStatus { Tentative, Confirmed, Coasting, Dead };

const char* to_string(TrackStatus s);

struct TrackPoint {
  int cpi_index = 0;
  double time_s = 0.0;
  Eigen::Vector2d x = Eigen::Vector2d::Zero();
  Eigen::Matrix2d p = Eigen::Matrix2d::Zero();
  TrackStatus status = TrackStatus::Tentative;
  bool updated = false;  // a detection was assigned at this CPI
  double snr_db = 0.0;
};

/// Bistatic (delay [s], Doppler [Hz]) track.
struct TrackState {
  int id = 0;
  Eigen::Vector2d x = Eigen::Vector2d::Zero();
  Eigen::Matrix2d p = Eigen::Matrix2d::Identity();
  TrackStatus status = TrackStatus::Tentative;
  int hits = 0;
  int misses = 0;      // consecutive
  int age = 0;         // CPIs since birth, including the birth CPI
  std::vector<bool> recent;  // hit flags of the last confirm_n CPIs (tentative only)
  double last_time_s = 0.0;
  double snr_db = 0.0;
  std::vector<TrackPoint> history;
};

struct TrackerConfig {
  double f_c = 3.75e9;
  double q_doppler = 1e4;  // Hz^2/s, white Doppler-rate noise density
  double gate_chi2 = 16.0;
  int confirm_m = 3;
  int confirm_n = 4;
  int max_coast = 5;
  double delay_bin = 12.5e-9;
  double doppler_bin = 61.03515625;
  double crlb_factor = 1.6;        // sigma = bin / (factor * sqrt(snr))
  double min_sigma_bins = 0.05;    // floor for both axes

  /// Throws Validation on non-positive values or gate_chi2 < 4.
  void validate() const;
};

/// Constant-Doppler prediction with tau' = tau - f_D T / f_c.
TrackState predict(const TrackState& state, double dt, double f_c, double q_doppler);

Eigen::Matrix2d transition(double dt, double f_c);
Eigen::Matrix2d process_noise(double dt, double f_c, double q_doppler);
Eigen::Matrix2d measurement_noise(const Detection& det, const TrackerConfig& cfg);

struct UpdateStats {
  std::vector<double> nis;  // normalized innovation squared of every assigned update
};

/// GNN association of one CPI's detections to already-predicted tracks; see
/// Tracker for the full per-CPI cycle. Returns the unassigned detections.
std::vector<Detection> associate_and_update(std::vector<TrackState>& tracks, std::span<const Detection> detections,
                                            const TrackerConfig& cfg, UpdateStats* stats = nullptr);

/// Sequential tracker for one receiver's detection stream.
class Tracker {
 public:
  explicit Tracker(TrackerConfig cfg);

  /// Processes one CPI. Throws Validation if the CPI index or time does not increase.
  void step(int cpi_index, double time_s, std::span<const Detection> detections);

  const std::vector<TrackState>& tracks() const { return tracks_; }  // live and dead
  const UpdateStats& stats() const { return stats_; }
  const TrackerConfig& config() const { return cfg_; }

 private:
  TrackerConfig cfg_;
  std::vector<TrackState> tracks_;
  UpdateStats stats_;
  int next_id_ = 1;
  int last_cpi_ = -1;
  double last_time_ = 0.0;
};

struct CpiDetections {
  int cpi_index = 0;
  double time_s = 0.0;
  std::vector<Detection> detections;
};

/// Runs a tracker over a CPI-ordered stream and returns every track that was
/// confirmed at least once, with its full history.
std::vector<TrackState> run_tracker(std::span<const CpiDetections> stream, const TrackerConfig& cfg);

}  // namespace isac
