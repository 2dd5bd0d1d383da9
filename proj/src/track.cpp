// SPDX-License-Identifier: Apache-2.0
#include "isac/track.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <sstream>
#include <tuple>

#include "isac/error.hpp"

namespace isac {

const char* to_string(TrackStatus s) {
  switch (s) {
    case TrackStatus::Tentative: return "tentative";
    case TrackStatus::Confirmed: return "confirmed";
    case TrackStatus::Coasting: return "coasting";
    case TrackStatus::Dead: return "dead";
  }
  return "?";
}

void TrackerConfig::validate() const {
  if (!(f_c > 0.0 && q_doppler > 0.0 && delay_bin > 0.0 && doppler_bin > 0.0 && crlb_factor > 0.0 &&
        min_sigma_bins > 0.0))
    fail(ErrorKind::Validation, "tracker config: parameters must be positive");
  if (!(gate_chi2 >= 4.0)) fail(ErrorKind::Validation, "tracker config: gate_chi2 must be >= 4");
  if (confirm_m < 1 || confirm_n < confirm_m || max_coast < 0)
    fail(ErrorKind::Validation, "tracker config: need 1 <= M <= N and max_coast >= 0");
}

Eigen::Matrix2d transition(double dt, double f_c) {
  Eigen::Matrix2d f;
  f << 1.0, -dt / f_c, 0.0, 1.0;
  return f;
}

Eigen::Matrix2d process_noise(double dt, double f_c, double q_doppler) {
  Eigen::Matrix2d q;
  const double a = 1.0 / f_c;
  q << dt * dt * dt / 3.0 * a * a, -dt * dt / 2.0 * a, -dt * dt / 2.0 * a, dt;
  return q_doppler * q;
}

TrackState predict(const TrackState& state, double dt, double f_c, double q_doppler) {
  TrackState out = state;
  if (!(dt > 0.0)) fail(ErrorKind::Validation, "predict: time step must be > 0");
  const Eigen::Matrix2d f = transition(dt, f_c);
  out.x = f * state.x;
  out.p = f * state.p * f.transpose() + process_noise(dt, f_c, q_doppler);
  out.p = 0.5 * (out.p + out.p.transpose());
  out.last_time_s = state.last_time_s + dt;
  return out;
}

Eigen::Matrix2d measurement_noise(const Detection& det, const TrackerConfig& cfg) {
  const double snr = std::pow(10.0, det.snr_db / 10.0);
  const double root = cfg.crlb_factor * std::sqrt(std::max(snr, 1.0));
  const double s_tau = std::max(cfg.delay_bin / root, cfg.min_sigma_bins * cfg.delay_bin);
  const double s_f = std::max(cfg.doppler_bin / root, cfg.min_sigma_bins * cfg.doppler_bin);
  Eigen::Matrix2d r = Eigen::Matrix2d::Zero();
  r(0, 0) = s_tau * s_tau;
  r(1, 1) = s_f * s_f;
  return r;
}

namespace {

bool live(const TrackState& t) { return t.status != TrackStatus::Dead; }

Eigen::Vector2d measurement(const Detection& d) { return {d.delay_s, d.doppler_hz}; }

void kalman_update(TrackState& t, const Detection& det, const Eigen::Matrix2d& r, UpdateStats* stats) {
  const Eigen::Vector2d nu = measurement(det) - t.x;
  const Eigen::Matrix2d s = t.p + r;
  const Eigen::Matrix2d s_inv = s.inverse();
  const Eigen::Matrix2d k = t.p * s_inv;
  const Eigen::Matrix2d i_k = Eigen::Matrix2d::Identity() - k;
  t.x += k * nu;
  t.p = i_k * t.p * i_k.transpose() + k * r * k.transpose();  // Joseph form
  t.p = 0.5 * (t.p + t.p.transpose());
  if (stats) stats->nis.push_back(nu.dot(s_inv * nu));
}

void record(TrackState& t, int cpi_index, double time_s, bool updated) {
  t.history.push_back({cpi_index, time_s, t.x, t.p, t.status, updated, t.snr_db});
}

}  // namespace

std::vector<Detection> associate_and_update(std::vector<TrackState>& tracks, std::span<const Detection> detections,
                                            const TrackerConfig& cfg, UpdateStats* stats) {
  // Candidate pairs inside the gate, cheapest first (greedy global nearest neighbour).
  std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
  std::vector<Eigen::Matrix2d> r(detections.size());
  for (std::size_t j = 0; j < detections.size(); ++j) r[j] = measurement_noise(detections[j], cfg);
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    if (!live(tracks[i])) continue;
    for (std::size_t j = 0; j < detections.size(); ++j) {
      const Eigen::Vector2d nu = measurement(detections[j]) - tracks[i].x;
      const Eigen::Matrix2d s = tracks[i].p + r[j];
      const double d2 = nu.dot(s.inverse() * nu);
      if (d2 <= cfg.gate_chi2) pairs.emplace_back(d2, i, j);
    }
  }
  std::sort(pairs.begin(), pairs.end());
  std::vector<bool> track_used(tracks.size(), false), det_used(detections.size(), false);
  for (const auto& [d2, i, j] : pairs) {
    if (track_used[i] || det_used[j]) continue;
    track_used[i] = det_used[j] = true;
    kalman_update(tracks[i], detections[j], r[j], stats);
    tracks[i].snr_db = detections[j].snr_db;
  }

  for (std::size_t i = 0; i < tracks.size(); ++i) {
    auto& t = tracks[i];
    if (!live(t)) continue;
    const bool hit = track_used[i];
    ++t.age;
    if (hit) {
      ++t.hits;
      t.misses = 0;
    } else {
      ++t.misses;
    }
    switch (t.status) {
      case TrackStatus::Tentative: {
        t.recent.push_back(hit);
        const auto n_hits = std::count(t.recent.begin(), t.recent.end(), true);
        const auto remaining = cfg.confirm_n - static_cast<int>(t.recent.size());
        if (n_hits >= cfg.confirm_m) {
          t.status = TrackStatus::Confirmed;
          t.recent.clear();
        } else if (n_hits + remaining < cfg.confirm_m) {
          t.status = TrackStatus::Dead;
        }
        break;
      }
      case TrackStatus::Confirmed:
      case TrackStatus::Coasting:
        if (hit)
          t.status = TrackStatus::Confirmed;
        else
          t.status = t.misses > cfg.max_coast ? TrackStatus::Dead : TrackStatus::Coasting;
        break;
      case TrackStatus::Dead: break;
    }
  }

  int next_id = 1;
  for (const auto& t : tracks) next_id = std::max(next_id, t.id + 1);
  std::vector<Detection> unused;
  for (std::size_t j = 0; j < detections.size(); ++j) {
    if (det_used[j]) continue;
    const auto& d = detections[j];
    TrackState t;
    t.id = next_id++;
    t.x = measurement(d);
    t.p = r[j];
    t.status = cfg.confirm_m <= 1 ? TrackStatus::Confirmed : TrackStatus::Tentative;
    t.hits = 1;
    t.age = 1;
    t.recent = {true};
    t.last_time_s = d.time_s;
    t.snr_db = d.snr_db;
    tracks.push_back(std::move(t));
    unused.push_back(d);
  }
  return unused;
}

Tracker::Tracker(TrackerConfig cfg) : cfg_(cfg) { cfg_.validate(); }

void Tracker::step(int cpi_index, double time_s, std::span<const Detection> detections) {
  if (last_cpi_ >= 0 && (cpi_index <= last_cpi_ || !(time_s > last_time_))) {
    std::ostringstream os;
    os << "tracker: CPI " << cpi_index << " at " << time_s << " s is not after CPI " << last_cpi_ << " at "
       << last_time_ << " s";
    fail(ErrorKind::Validation, os.str());
  }
  for (auto& t : tracks_) {
    if (!live(t)) continue;
    const double dt = time_s - t.last_time_s;
    if (dt > 0.0) t = predict(t, dt, cfg_.f_c, cfg_.q_doppler);
  }
  const std::size_t before = tracks_.size();
  std::vector<Detection> stamped(detections.begin(), detections.end());
  for (auto& d : stamped) {
    d.cpi_index = cpi_index;
    d.time_s = time_s;
  }
  associate_and_update(tracks_, stamped, cfg_, &stats_);
  for (std::size_t i = 0; i < tracks_.size(); ++i) {
    auto& t = tracks_[i];
    const bool born = i >= before;
    if (!born && t.history.size() > 0 && t.history.back().status == TrackStatus::Dead) continue;
    const bool updated = born || t.misses == 0;
    record(t, cpi_index, time_s, updated);
  }
  last_cpi_ = cpi_index;
  last_time_ = time_s;
}

std::vector<TrackState> run_tracker(std::span<const CpiDetections> stream, const TrackerConfig& cfg) {
  Tracker tracker(cfg);
  for (const auto& c : stream) tracker.step(c.cpi_index, c.time_s, c.detections);
  std::vector<TrackState> out;
  for (const auto& t : tracker.tracks()) {
    const bool ever_confirmed = std::any_of(t.history.begin(), t.history.end(), [](const TrackPoint& p) {
      return p.status == TrackStatus::Confirmed || p.status == TrackStatus::Coasting;
    });
    if (ever_confirmed) out.push_back(t);
  }
  return out;
}

}  // namespace isac
