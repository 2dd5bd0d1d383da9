// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "isac/scene.hpp"
#include "isac/waveform.hpp"

namespace isac {

using cfloat = std::complex<float>;

struct TargetTruth {
  std::string id;
  std::vector<double> delay_s;     // geometric bistatic delay per symbol
  std::vector<double> doppler_hz;  // bistatic Doppler per symbol
};

/// Ground truth sampled at the symbol centers of a capture.
struct CaptureTruth {
  std::vector<double> symbol_time_s;
  std::vector<double> los_delay_s;  // geometric, without clock errors
  std::vector<TargetTruth> targets;
  std::vector<double> tx_time_error_s, rx_time_error_s;
  std::vector<double> tx_ffo, rx_ffo;
};

/// Per-receiver record of frequency-domain symbols, stored symbol-major:
/// data[m * n_subcarriers + k]. Samples are single precision as on disk.
struct Capture {
  std::string rx_id;
  std::string tx_id;
  SignalConfig cfg;
  double start_time_s = 0.0;
  std::uint64_t seed = 0;
  bool is_b2b = false;
  double cable_attenuation_db = 0.0;  // B2B only
  std::uint64_t tx_hw_seed = 0, rx_hw_seed = 0;  // B2B only
  Trajectory tx_trajectory, rx_trajectory;      // surveyed node positions; empty for B2B
  std::vector<cfloat> data;
  std::optional<CaptureTruth> truth;

  int n_subcarriers() const { return cfg.n_subcarriers; }
  int n_symbols() const { return static_cast<int>(data.size() / static_cast<std::size_t>(cfg.n_subcarriers)); }
  double symbol_time(int m) const { return start_time_s + (m + 0.5) * cfg.t_symbol; }
  cfloat& at(int k, int m) { return data[static_cast<std::size_t>(m) * cfg.n_subcarriers + k]; }
  const cfloat& at(int k, int m) const { return data[static_cast<std::size_t>(m) * cfg.n_subcarriers + k]; }
};

}  // namespace isac
