// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "isac/capture.hpp"
#include "isac/waveform.hpp"

namespace isac {

/// Channel transfer function H[k, m], symbol-major like Capture, together with
/// the per-symbol corrections already applied to it.
struct CtfRecord {
  std::string rx_id;
  std::string tx_id;
  SignalConfig cfg;
  double start_time_s = 0.0;
  std::vector<cdouble> h;
  std::vector<double> applied_delay_s;    // per symbol, multiplied in as exp(+j2 pi f_k eps)
  std::vector<double> applied_phase_rad;  // per symbol, multiplied in as exp(-j psi)

  int n_subcarriers() const { return cfg.n_subcarriers; }
  int n_symbols() const { return static_cast<int>(h.size() / static_cast<std::size_t>(cfg.n_subcarriers)); }
  double symbol_time(int m) const { return start_time_s + (m + 0.5) * cfg.t_symbol; }
  std::span<const cdouble> column(int m) const {
    return {h.data() + static_cast<std::size_t>(m) * cfg.n_subcarriers, static_cast<std::size_t>(cfg.n_subcarriers)};
  }
  std::span<cdouble> column(int m) {
    return {h.data() + static_cast<std::size_t>(m) * cfg.n_subcarriers, static_cast<std::size_t>(cfg.n_subcarriers)};
  }
};

/// Point-wise division by the symbol-averaged B2B record, rescaled by the
/// declared cable attenuation. Throws Data listing near-zero calibration bins
/// (|X_cal| <= 1e-6 * median) and Validation on config mismatch.
CtfRecord estimate_ctf(const Capture& cap, const Capture& b2b);

struct LosEstimate {
  double delay_s = 0.0;
  cdouble amplitude;          // correlation at delay_s divided by n_subcarriers
  double peak_to_median_db = 0.0;  // zero-padded IDFT peak over window median
};

/// Strongest-path delay in [window_lo, window_hi): x8 zero-padded IDFT
/// coarse search, then one Newton step on the continuous correlation
/// A(tau) = sum_k H[k] exp(+j 2 pi f_k tau).
LosEstimate estimate_los_delay(std::span<const cdouble> h_column, const SignalConfig& cfg,
                               double window_lo, double window_hi);

struct DriftParams {
  int median_window = 31;
  int mean_window = 31;
  double search_halfwidth_s = 100e-9;  // LoS search window around the expected delay
  double min_peak_db = 6.0;
  double max_missing_fraction = 0.1;
  bool remove_phase = true;
};

struct DriftEstimate {
  std::vector<double> raw_delay_s;   // NaN where the LoS was not detected
  std::vector<double> delay_s;       // smoothed, defined for every symbol
  std::vector<double> raw_phase_rad;  // unwrapped
  std::vector<double> phase_rad;
  int median_window = 0;
  int mean_window = 0;
  int missing = 0;
};

/// Aligns the observed LoS to the geometric LoS delay per symbol. Throws Data
/// (unreliable beacon) when more than max_missing_fraction of the symbols have
/// no detectable LoS.
std::pair<CtfRecord, DriftEstimate> compensate_drift(const CtfRecord& ctf,
                                                     std::span<const double> truth_los_delay,
                                                     const DriftParams& params = {});

/// Inverts the recorded corrections.
CtfRecord restore_raw(const CtfRecord& ctf);

/// Centered moving median / mean with windows truncated at the edges. NaN
/// inputs are ignored; an all-NaN window yields NaN.
std::vector<double> moving_median(std::span<const double> x, int window);
std::vector<double> moving_mean(std::span<const double> x, int window);

}  // namespace isac
