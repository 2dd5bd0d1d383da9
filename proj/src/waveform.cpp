// SPDX-License-Identifier: Apache-2.0
#include "isac/waveform.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "isac/error.hpp"
#include "isac/fft.hpp"
#include "isac/rng.hpp"

namespace isac {

void SignalConfig::validate() const {
  if (!(f_c > 0.0) || !(bandwidth > 0.0) || !(t_symbol > 0.0) || n_subcarriers <= 0 ||
      n_symbols_per_cpi <= 0 || n_cpi <= 0)
    fail(ErrorKind::Validation, "signal config: all parameters must be positive");
  if (n_subcarriers % 2 != 0)
    fail(ErrorKind::Validation, "signal config: n_subcarriers must be even");
  const double implied = n_subcarriers / t_symbol;
  if (std::abs(implied - bandwidth) > 1e-12 * bandwidth) {
    std::ostringstream os;
    os << "signal config: n_subcarriers / t_symbol = " << implied << " Hz does not match bandwidth "
       << bandwidth << " Hz";
    fail(ErrorKind::Validation, os.str());
  }
}

SignalConfig make_signal_config(int n_subcarriers, double t_symbol, double f_c,
                                int n_symbols_per_cpi, int n_cpi) {
  SignalConfig cfg;
  cfg.f_c = f_c;
  cfg.n_subcarriers = n_subcarriers;
  cfg.t_symbol = t_symbol;
  cfg.bandwidth = n_subcarriers / t_symbol;
  cfg.n_symbols_per_cpi = n_symbols_per_cpi;
  cfg.n_cpi = n_cpi;
  cfg.validate();
  return cfg;
}

std::vector<double> newman_phases(int n) {
  if (n < 1) fail(ErrorKind::Validation, "newman_phases: n must be >= 1");
  std::vector<double> phi(static_cast<std::size_t>(n));
  for (int k = 1; k <= n; ++k) {
    const double km1 = k - 1;
    phi[static_cast<std::size_t>(k - 1)] = std::numbers::pi * km1 * km1 / n;
  }
  return phi;
}

SoundingSymbol generate_symbol(const SignalConfig& cfg) {
  cfg.validate();
  const auto phi = newman_phases(cfg.n_subcarriers);
  SoundingSymbol sym;
  sym.freq_domain.reserve(phi.size());
  sym.subcarrier_freqs.reserve(phi.size());
  for (int k = 0; k < cfg.n_subcarriers; ++k) {
    sym.freq_domain.push_back(std::polar(1.0, phi[static_cast<std::size_t>(k)]));
    sym.subcarrier_freqs.push_back(cfg.subcarrier_freq(k));
  }
  return sym;
}

double crest_factor_db(const SoundingSymbol& sym, int oversample) {
  if (oversample < 4) fail(ErrorKind::Validation, "crest_factor_db: oversample must be >= 4");
  const auto n = static_cast<long>(sym.freq_domain.size());
  if (n == 0) fail(ErrorKind::Validation, "crest_factor_db: empty symbol");
  const long len = n * oversample;
  std::vector<cdouble> spec(static_cast<std::size_t>(len), 0.0);
  for (long k = 0; k < n; ++k) {
    const long bin = ((k - n / 2) % len + len) % len;
    spec[static_cast<std::size_t>(bin)] = sym.freq_domain[static_cast<std::size_t>(k)];
  }
  std::vector<cdouble> x(spec.size());
  fft::backward(spec, x);
  double peak = 0.0;
  double power = 0.0;
  for (const auto& v : x) {
    const double p = std::norm(v);
    peak = std::max(peak, p);
    power += p;
  }
  power /= static_cast<double>(x.size());
  return 10.0 * std::log10(peak / power);
}

std::vector<cdouble> b2b_reference(const SignalConfig& cfg, std::span<const cdouble> tx_rx_response) {
  const auto sym = generate_symbol(cfg);
  if (tx_rx_response.size() != sym.freq_domain.size())
    fail(ErrorKind::Validation, "b2b_reference: response length does not match n_subcarriers");
  std::vector<cdouble> out(sym.freq_domain.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (tx_rx_response[k] == cdouble(0.0)) {
      std::ostringstream os;
      os << "b2b_reference: calibration singularity, zero hardware response at subcarrier " << k;
      fail(ErrorKind::Data, os.str());
    }
    out[k] = sym.freq_domain[k] * tx_rx_response[k];
  }
  return out;
}

std::vector<cdouble> hardware_response(const SignalConfig& cfg, std::uint64_t seed) {
  const int n = cfg.n_subcarriers;
  Rng rng(seed);
  constexpr int kHarmonics = 3;
  double amp_a[kHarmonics], amp_phi[kHarmonics], ph_a[kHarmonics], ph_phi[kHarmonics];
  for (int i = 0; i < kHarmonics; ++i) {
    amp_a[i] = rng.uniform(-1.0, 1.0);
    amp_phi[i] = rng.uniform(0.0, 2.0 * std::numbers::pi);
    ph_a[i] = rng.uniform(-1.0, 1.0);
    ph_phi[i] = rng.uniform(0.0, 2.0 * std::numbers::pi);
  }
  const double latency = rng.uniform(0.0, 50e-9);

  // Ripple shape normalized so its peak excursion is exactly 1.5 dB.
  std::vector<double> ripple(static_cast<std::size_t>(n));
  std::vector<double> phase(static_cast<std::size_t>(n));
  double max_abs = 0.0;
  for (int k = 0; k < n; ++k) {
    const double x = static_cast<double>(k) / n;
    double r = 0.0;
    double p = 0.0;
    for (int i = 0; i < kHarmonics; ++i) {
      r += amp_a[i] * std::cos(2.0 * std::numbers::pi * (i + 1) * x + amp_phi[i]);
      p += ph_a[i] * std::cos(2.0 * std::numbers::pi * (i + 1) * x + ph_phi[i]);
    }
    ripple[static_cast<std::size_t>(k)] = r;
    phase[static_cast<std::size_t>(k)] = 0.1 * p;
    max_abs = std::max(max_abs, std::abs(r));
  }

  // Raised-cosine taper over the outer 5% on each side, down to -20 dB at the edge.
  const int edge = std::max(1, n / 20);
  std::vector<cdouble> g(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const int from_edge = std::min(k, n - 1 - k);
    double taper = 1.0;
    if (from_edge < edge) {
      const double u = static_cast<double>(from_edge) / edge;
      taper = 0.1 + 0.9 * 0.5 * (1.0 - std::cos(std::numbers::pi * u));
    }
    const double ripple_db = max_abs > 0.0 ? 1.5 * ripple[static_cast<std::size_t>(k)] / max_abs : 0.0;
    const double mag = taper * std::pow(10.0, ripple_db / 20.0);
    const double ph = phase[static_cast<std::size_t>(k)] -
                      2.0 * std::numbers::pi * cfg.subcarrier_freq(k) * latency;
    g[static_cast<std::size_t>(k)] = std::polar(mag, ph);
  }
  return g;
}

}  // namespace isac
