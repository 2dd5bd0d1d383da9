// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "isac/capture.hpp"
#include "isac/scenario.hpp"
#include "isac/waveform.hpp"

namespace isac {

enum class PathKind { Los, Target, Clutter };

struct PathContribution {
  PathKind kind = PathKind::Los;
  std::string label;
  cdouble gain{1.0, 0.0};
  double delay_s = 0.0;
  double doppler_hz = 0.0;
};

/// Friis link: complex voltage gain with phase -2 pi f_c range / c.
/// Throws Validation for a non-positive range.
cdouble los_gain(double eirp_dbm, double g_tx_db, double g_rx_db, double f_c, double range_m);

/// Bistatic radar equation with phase -2 pi f_c (r_tx + r_rx) / c + scatter_phase.
cdouble target_gain(double eirp_dbm, double g_tx_db, double g_rx_db, double f_c, double r_tx_m,
                    double r_rx_m, double rcs_dbsm, double scatter_phase_rad = 0.0);

/// Adds sum_p g_p exp(-j2 pi f_k tau_p) exp(j2 pi f_D,p t) x_cal[k] to `out`.
/// Throws Range (aliasing) naming the first path with delay outside [0, t_symbol).
void accumulate_paths(std::span<const PathContribution> paths, const SignalConfig& cfg, double t,
                      std::span<const cdouble> x_cal, std::span<cdouble> out);

/// Paths active at symbol m (centre time t).
using PathFunction = std::function<std::vector<PathContribution>(int m, double t)>;

/// Generic synthesis over explicit path lists; white noise of the given
/// per-sample variance. No truth is attached.
Capture synthesize_paths(const SignalConfig& cfg, double start_time_s, std::span<const cdouble> x_cal,
                         const PathFunction& paths, double noise_variance, std::uint64_t seed);

/// Per-sample noise variance N0 * B in W for a noise floor in dBm/Hz.
double noise_variance(double noise_floor_dbm_hz, double bandwidth_hz);

/// Uniform scatter phase of one target as seen by one receiver.
double scatter_phase(std::uint64_t scenario_seed, const std::string& target_id, const std::string& rx_id);

/// Scene-driven capture for one schedule window, with truth attached.
Capture synthesize_capture(const Scenario& scenario, const Node& tx, const Node& rx, double start_time_s,
                           std::uint64_t seed);

/// Cabled Tx->Rx record: X[k] G_tx[k] G_rx[k] 10^(-att/20) plus noise at `snr_db`
/// per sample, one CPI long.
Capture synthesize_b2b_capture(const SignalConfig& cfg, std::uint64_t tx_hw_seed, std::uint64_t rx_hw_seed,
                               double cable_attenuation_db, double snr_db, std::uint64_t seed);

/// X[k] G_tx[k] G_rx[k].
std::vector<cdouble> chain_response(const SignalConfig& cfg, std::uint64_t tx_hw_seed, std::uint64_t rx_hw_seed);

/// Deterministic per-capture seed for (tx, rx, window).
std::uint64_t capture_seed(std::uint64_t scenario_seed, const std::string& tx_id, const std::string& rx_id,
                           std::size_t window);

}  // namespace isac
