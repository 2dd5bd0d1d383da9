// SPDX-License-Identifier: Apache-2.0
#include "isac/channel.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "isac/clock.hpp"
#include "isac/error.hpp"
#include "isac/rng.hpp"

namespace isac {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double carrier_phase(double f_c, double range_m) {
  // Reduce the cycle count before scaling to keep precision at long ranges.
  const double cycles = f_c * range_m / kSpeedOfLight;
  return -kTwoPi * (cycles - std::floor(cycles));
}

const char* kind_name(PathKind k) {
  switch (k) {
    case PathKind::Los:
      return "los";
    case PathKind::Target:
      return "target";
    case PathKind::Clutter:
      return "clutter";
  }
  return "path";
}

}  // namespace

cdouble los_gain(double eirp_dbm, double g_tx_db, double g_rx_db, double f_c, double range_m) {
  if (!(range_m > 0.0)) fail(ErrorKind::Validation, "los_gain: range must be positive");
  const double lambda = kSpeedOfLight / f_c;
  const double amp = std::sqrt(std::pow(10.0, (eirp_dbm + g_tx_db + g_rx_db) / 10.0 - 3.0)) *
                     lambda / (4.0 * std::numbers::pi * range_m);
  return std::polar(amp, carrier_phase(f_c, range_m));
}

cdouble target_gain(double eirp_dbm, double g_tx_db, double g_rx_db, double f_c, double r_tx_m, double r_rx_m,
                    double rcs_dbsm, double scatter_phase_rad) {
  if (!(r_tx_m > 0.0) || !(r_rx_m > 0.0)) fail(ErrorKind::Validation, "target_gain: ranges must be positive");
  const double lambda = kSpeedOfLight / f_c;
  const double eirp_w = std::pow(10.0, (eirp_dbm + g_tx_db) / 10.0 - 3.0);
  const double g_rx = std::pow(10.0, g_rx_db / 10.0);
  const double sigma = std::pow(10.0, rcs_dbsm / 10.0);
  const double four_pi = 4.0 * std::numbers::pi;
  const double power = eirp_w * g_rx * lambda * lambda * sigma /
                       (four_pi * four_pi * four_pi * r_tx_m * r_tx_m * r_rx_m * r_rx_m);
  return std::polar(std::sqrt(power), carrier_phase(f_c, r_tx_m + r_rx_m) + scatter_phase_rad);
}

void accumulate_paths(std::span<const PathContribution> paths, const SignalConfig& cfg, double t,
                      std::span<const cdouble> x_cal, std::span<cdouble> out) {
  const int n = cfg.n_subcarriers;
  if (x_cal.size() != static_cast<std::size_t>(n) || out.size() != static_cast<std::size_t>(n))
    fail(ErrorKind::Validation, "accumulate_paths: buffer length does not match n_subcarriers");
  constexpr int kAnchor = 64;
  for (const auto& p : paths) {
    if (!(p.delay_s >= 0.0 && p.delay_s < cfg.t_symbol)) {
      std::ostringstream os;
      os << "aliasing: " << kind_name(p.kind) << " path '" << p.label << "' has delay " << p.delay_s
         << " s outside [0, " << cfg.t_symbol << ") s";
      fail(ErrorKind::Range, os.str());
    }
    const double dop_cycles = p.doppler_hz * t;
    const cdouble common = p.gain * std::polar(1.0, kTwoPi * (dop_cycles - std::floor(dop_cycles)));
    const cdouble step = std::polar(1.0, -kTwoPi * cfg.subcarrier_spacing() * p.delay_s);
    cdouble rot;
    for (int k = 0; k < n; ++k) {
      if (k % kAnchor == 0) {
        const double cyc = cfg.subcarrier_freq(k) * p.delay_s;
        rot = std::polar(1.0, -kTwoPi * (cyc - std::floor(cyc)));
      }
      out[static_cast<std::size_t>(k)] += common * rot * x_cal[static_cast<std::size_t>(k)];
      rot *= step;
    }
  }
}

double noise_variance(double noise_floor_dbm_hz, double bandwidth_hz) {
  return std::pow(10.0, noise_floor_dbm_hz / 10.0 - 3.0) * bandwidth_hz;
}

namespace {

void store_column(Capture& cap, int m, std::span<const cdouble> col, Rng* noise, double variance) {
  const int n = cap.cfg.n_subcarriers;
  for (int k = 0; k < n; ++k) {
    cdouble v = col[static_cast<std::size_t>(k)];
    if (noise && variance > 0.0) v += noise->complex_normal(variance);
    cap.at(k, m) = cfloat(static_cast<float>(v.real()), static_cast<float>(v.imag()));
  }
}

}  // namespace

Capture synthesize_paths(const SignalConfig& cfg, double start_time_s, std::span<const cdouble> x_cal,
                         const PathFunction& paths, double noise_var, std::uint64_t seed) {
  cfg.validate();
  Capture cap;
  cap.cfg = cfg;
  cap.start_time_s = start_time_s;
  cap.seed = seed;
  const int n = cfg.n_subcarriers;
  const int m_total = cfg.n_symbols();
  cap.data.assign(static_cast<std::size_t>(n) * m_total, cfloat{});
  Rng noise(derive_seed(seed, hash_tag("noise")));
  std::vector<cdouble> col(static_cast<std::size_t>(n));
  for (int m = 0; m < m_total; ++m) {
    const double t = cap.symbol_time(m);
    std::fill(col.begin(), col.end(), cdouble{});
    const auto p = paths(m, t);
    accumulate_paths(p, cfg, t, x_cal, col);
    store_column(cap, m, col, &noise, noise_var);
  }
  return cap;
}

double scatter_phase(std::uint64_t scenario_seed, const std::string& target_id, const std::string& rx_id) {
  Rng rng(derive_seed(derive_seed(scenario_seed, hash_tag(target_id)), hash_tag(rx_id)));
  return rng.uniform(0.0, kTwoPi);
}

std::vector<cdouble> chain_response(const SignalConfig& cfg, std::uint64_t tx_hw_seed, std::uint64_t rx_hw_seed) {
  const auto g_tx = hardware_response(cfg, tx_hw_seed);
  const auto g_rx = hardware_response(cfg, rx_hw_seed);
  std::vector<cdouble> g(g_tx.size());
  for (std::size_t k = 0; k < g.size(); ++k) g[k] = g_tx[k] * g_rx[k];
  return b2b_reference(cfg, g);
}

std::uint64_t capture_seed(std::uint64_t scenario_seed, const std::string& tx_id, const std::string& rx_id,
                           std::size_t window) {
  return derive_seed(derive_seed(derive_seed(scenario_seed, hash_tag(tx_id)), hash_tag(rx_id)), window);
}

Capture synthesize_capture(const Scenario& sc, const Node& tx, const Node& rx, double start_time_s,
                           std::uint64_t seed) {
  if (tx.role != NodeRole::Tx) fail(ErrorKind::Validation, "synthesize_capture: node '" + tx.id + "' is not a transmitter");
  if (rx.role != NodeRole::Rx) fail(ErrorKind::Validation, "synthesize_capture: node '" + rx.id + "' is not a receiver");
  const auto& cfg = sc.signal;
  cfg.validate();
  const double f_c = cfg.f_c;
  const auto x_cal = chain_response(cfg, tx.hw_seed, rx.hw_seed);

  ClockProcess clk_tx(sc.clock(tx.clock_id));
  ClockProcess clk_rx(sc.clock(rx.clock_id));
  const double off_tx = clk_tx.model().initial_time_offset_s;
  const double off_rx = clk_rx.model().initial_time_offset_s;
  const bool shared_clock = tx.clock_id == rx.clock_id;

  std::vector<const ClutterTap*> taps;
  for (const auto& c : sc.clutter)
    if (c.rx_id == rx.id) taps.push_back(&c);
  std::vector<double> scatter;
  for (const auto& tgt : sc.targets) scatter.push_back(scatter_phase(sc.seed, tgt.id, rx.id));

  const int m_total = cfg.n_symbols();
  CaptureTruth truth;
  truth.symbol_time_s.reserve(static_cast<std::size_t>(m_total));
  truth.targets.resize(sc.targets.size());
  for (std::size_t i = 0; i < sc.targets.size(); ++i) truth.targets[i].id = sc.targets[i].id;

  auto paths = [&](int, double t) {
    const Vec3 p_tx = position_at(tx.trajectory, t);
    const Vec3 p_rx = position_at(rx.trajectory, t);
    const Vec3 v_tx = velocity_at(tx.trajectory, t);
    const Vec3 v_rx = velocity_at(rx.trajectory, t);
    const ClockState s_tx = clk_tx.at(t);
    const ClockState s_rx = shared_clock ? s_tx : clk_rx.at(t);
    const double dte = s_rx.time_error_s - s_tx.time_error_s;
    const double cfo_cycles = f_c * ((s_rx.time_error_s - off_rx) - (s_tx.time_error_s - off_tx));
    const cdouble cfo = std::polar(1.0, kTwoPi * (cfo_cycles - std::floor(cfo_cycles)));

    std::vector<PathContribution> out;
    const double r_los = (p_rx - p_tx).norm();
    const double tau_los = los_delay(p_tx, p_rx);
    const cdouble g_los = los_gain(tx.eirp_dbm, antenna_gain(tx.antenna, p_rx - p_tx),
                                   antenna_gain(rx.antenna, p_tx - p_rx), f_c, r_los) *
                          std::pow(10.0, -rx.los_attenuation_db / 20.0);
    out.push_back({PathKind::Los, tx.id + "->" + rx.id, g_los * cfo, tau_los + dte, 0.0});

    truth.symbol_time_s.push_back(t);
    truth.los_delay_s.push_back(tau_los);
    truth.tx_time_error_s.push_back(s_tx.time_error_s);
    truth.rx_time_error_s.push_back(s_rx.time_error_s);
    truth.tx_ffo.push_back(s_tx.ffo);
    truth.rx_ffo.push_back(s_rx.ffo);

    for (std::size_t i = 0; i < sc.targets.size(); ++i) {
      const auto& tgt = sc.targets[i];
      const Vec3 p = position_at(tgt.trajectory, t);
      const Vec3 v = velocity_at(tgt.trajectory, t);
      const double tau = bistatic_delay(p_tx, p, p_rx);
      const double r_tx = (p - p_tx).norm();
      const double r_rx = (p - p_rx).norm();
      const cdouble g = target_gain(tx.eirp_dbm, antenna_gain(tx.antenna, p - p_tx), antenna_gain(rx.antenna, p - p_rx),
                                    f_c, r_tx, r_rx, tgt.rcs_dbsm, scatter[i]);
      out.push_back({PathKind::Target, tgt.id, g * cfo, tau + dte, 0.0});
      truth.targets[i].delay_s.push_back(tau);
      truth.targets[i].doppler_hz.push_back(bistatic_doppler(p_tx, p, v, p_rx, f_c, v_tx, v_rx));
    }
    for (std::size_t i = 0; i < taps.size(); ++i) {
      const auto& c = *taps[i];
      const cdouble g = std::abs(g_los) * std::pow(10.0, c.gain_db / 20.0) * std::polar(1.0, c.phase_rad);
      out.push_back({PathKind::Clutter, rx.id + "#" + std::to_string(i), g * cfo, c.delay_s + dte, 0.0});
    }
    return out;
  };

  Capture cap = synthesize_paths(cfg, start_time_s, x_cal, paths, noise_variance(rx.noise_floor_dbm_hz, cfg.bandwidth), seed);
  cap.rx_id = rx.id;
  cap.tx_id = tx.id;
  cap.tx_trajectory = tx.trajectory;
  cap.rx_trajectory = rx.trajectory;
  cap.truth = std::move(truth);
  return cap;
}

Capture synthesize_b2b_capture(const SignalConfig& cfg, std::uint64_t tx_hw_seed, std::uint64_t rx_hw_seed,
                               double cable_attenuation_db, double snr_db, std::uint64_t seed) {
  cfg.validate();
  const auto ref = chain_response(cfg, tx_hw_seed, rx_hw_seed);
  const double scale = std::pow(10.0, -cable_attenuation_db / 20.0);
  double mean_power = 0.0;
  for (const auto& v : ref) mean_power += std::norm(v);
  mean_power *= scale * scale / static_cast<double>(ref.size());
  const double variance = mean_power * std::pow(10.0, -snr_db / 10.0);

  Capture cap;
  cap.cfg = cfg;
  cap.cfg.n_cpi = 1;
  cap.seed = seed;
  cap.is_b2b = true;
  cap.cable_attenuation_db = cable_attenuation_db;
  cap.tx_hw_seed = tx_hw_seed;
  cap.rx_hw_seed = rx_hw_seed;
  const int n = cfg.n_subcarriers;
  const int m_total = cfg.n_symbols_per_cpi;
  cap.data.assign(static_cast<std::size_t>(n) * m_total, cfloat{});
  Rng noise(derive_seed(seed, hash_tag("b2b")));
  std::vector<cdouble> col(ref.size());
  for (int m = 0; m < m_total; ++m) {
    for (std::size_t k = 0; k < ref.size(); ++k) col[k] = ref[k] * scale;
    store_column(cap, m, col, &noise, variance);
  }
  return cap;
}

}  // namespace isac
