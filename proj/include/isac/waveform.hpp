// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

namespace isac {

using cdouble = std::complex<double>;

/// OFDM sounding parameters. The occupied bandwidth is n_subcarriers / t_symbol.
struct SignalConfig {
  double f_c = 3.75e9;
  double bandwidth = 80e6;
  int n_subcarriers = 1280;
  double t_symbol = 16e-6;
  int n_symbols_per_cpi = 1024;
  int n_cpi = 1;

  double subcarrier_spacing() const { return 1.0 / t_symbol; }
  double delay_bin() const { return 1.0 / bandwidth; }
  double doppler_bin() const { return 1.0 / (n_symbols_per_cpi * t_symbol); }
  int n_symbols() const { return n_symbols_per_cpi * n_cpi; }
  /// Baseband frequency of subcarrier k, centered on zero.
  double subcarrier_freq(int k) const { return (k - n_subcarriers / 2) * subcarrier_spacing(); }

  /// Throws Validation unless all fields are positive, n_subcarriers is even
  /// and n_subcarriers / t_symbol equals bandwidth (1e-12 relative).
  void validate() const;
};

/// Config for the given subcarrier count with bandwidth derived from the symbol length.
SignalConfig make_signal_config(int n_subcarriers, double t_symbol = 16e-6, double f_c = 3.75e9,
                                int n_symbols_per_cpi = 1024, int n_cpi = 1);

struct SoundingSymbol {
  std::vector<cdouble> freq_domain;
  std::vector<double> subcarrier_freqs;
};

/// Newman phases phi_k = pi (k-1)^2 / n, k = 1..n.
std::vector<double> newman_phases(int n);

SoundingSymbol generate_symbol(const SignalConfig& cfg);

/// Peak-to-RMS ratio in dB of the periodic time-domain symbol evaluated on an
/// `oversample`-times oversampled grid.
double crest_factor_db(const SoundingSymbol& sym, int oversample);

/// Symbol as recorded through a cabled Tx->Rx chain: X[k] * G_hw[k].
std::vector<cdouble> b2b_reference(const SignalConfig& cfg, std::span<const cdouble> tx_rx_response);

/// Seeded hardware frequency response of one Tx or Rx chain: raised-cosine
/// band-edge taper, smooth +-1.5 dB ripple, small phase ripple and a fixed
/// latency below 50 ns. Never zero.
std::vector<cdouble> hardware_response(const SignalConfig& cfg, std::uint64_t seed);

}  // namespace isac
