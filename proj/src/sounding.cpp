// SPDX-License-Identifier: Apache-2.0
#include "isac/sounding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "isac/error.hpp"
#include "isac/fft.hpp"

namespace isac {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kZeroPad = 8;

double wrap_phase(double x) { return std::remainder(x, kTwoPi); }

double median_of(std::vector<double>& v) {
  const auto mid = v.begin() + static_cast<long>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

bool same_signal(const SignalConfig& a, const SignalConfig& b) {
  return a.n_subcarriers == b.n_subcarriers && a.t_symbol == b.t_symbol && a.f_c == b.f_c &&
         a.bandwidth == b.bandwidth;
}

// Applies exp(+j2 pi f_k delay) * exp(-j phase) to one column.
void rotate_column(std::span<cdouble> col, const SignalConfig& cfg, double delay, double phase) {
  const cdouble common = std::polar(1.0, -phase);
  for (int k = 0; k < cfg.n_subcarriers; ++k) {
    col[static_cast<std::size_t>(k)] *= std::polar(1.0, kTwoPi * cfg.subcarrier_freq(k) * delay) * common;
  }
}

}  // namespace

CtfRecord estimate_ctf(const Capture& cap, const Capture& b2b) {
  if (!same_signal(cap.cfg, b2b.cfg))
    fail(ErrorKind::Validation, "estimate_ctf: capture and B2B signal configs differ");
  const int n = cap.cfg.n_subcarriers;
  const int nb = b2b.n_symbols();
  if (nb == 0) fail(ErrorKind::Data, "estimate_ctf: empty B2B record");

  std::vector<cdouble> x_cal(static_cast<std::size_t>(n), 0.0);
  for (int m = 0; m < nb; ++m)
    for (int k = 0; k < n; ++k) x_cal[static_cast<std::size_t>(k)] += cdouble(b2b.at(k, m));
  const double scale = std::pow(10.0, b2b.cable_attenuation_db / 20.0) / nb;
  for (auto& v : x_cal) v *= scale;

  std::vector<double> mags(x_cal.size());
  std::transform(x_cal.begin(), x_cal.end(), mags.begin(), [](cdouble v) { return std::abs(v); });
  auto tmp = mags;
  const double med = median_of(tmp);
  std::vector<int> bad;
  for (int k = 0; k < n; ++k)
    if (!(mags[static_cast<std::size_t>(k)] > 1e-6 * med)) bad.push_back(k);
  if (!bad.empty()) {
    std::ostringstream os;
    os << "estimate_ctf: near-zero calibration bins at subcarriers";
    for (std::size_t i = 0; i < bad.size() && i < 32; ++i) os << ' ' << bad[i];
    if (bad.size() > 32) os << " ... (" << bad.size() << " total)";
    fail(ErrorKind::Data, os.str());
  }

  CtfRecord out;
  out.rx_id = cap.rx_id;
  out.tx_id = cap.tx_id;
  out.cfg = cap.cfg;
  out.start_time_s = cap.start_time_s;
  const int ns = cap.n_symbols();
  out.h.resize(cap.data.size());
  std::vector<cdouble> inv(x_cal.size());
  for (std::size_t k = 0; k < inv.size(); ++k) inv[k] = 1.0 / x_cal[k];
  for (int m = 0; m < ns; ++m) {
    for (int k = 0; k < n; ++k) {
      const auto idx = static_cast<std::size_t>(m) * n + k;
      out.h[idx] = cdouble(cap.data[idx]) * inv[static_cast<std::size_t>(k)];
    }
  }
  out.applied_delay_s.assign(static_cast<std::size_t>(ns), 0.0);
  out.applied_phase_rad.assign(static_cast<std::size_t>(ns), 0.0);
  return out;
}

LosEstimate estimate_los_delay(std::span<const cdouble> h_column, const SignalConfig& cfg,
                               double window_lo, double window_hi) {
  const int n = cfg.n_subcarriers;
  if (static_cast<int>(h_column.size()) != n)
    fail(ErrorKind::Validation, "estimate_los_delay: column length does not match n_subcarriers");
  window_lo = std::max(window_lo, 0.0);
  window_hi = std::min(window_hi, cfg.t_symbol);
  if (!(window_hi > window_lo)) fail(ErrorKind::Validation, "estimate_los_delay: empty search window");
  if (std::all_of(h_column.begin(), h_column.end(), [](cdouble v) { return v == cdouble(0.0); }))
    fail(ErrorKind::Data, "estimate_los_delay: all-zero column");

  const long len = static_cast<long>(n) * kZeroPad;
  std::vector<cdouble> spec(static_cast<std::size_t>(len), 0.0);
  for (long k = 0; k < n; ++k) {
    const long bin = ((k - n / 2) % len + len) % len;
    spec[static_cast<std::size_t>(bin)] = h_column[static_cast<std::size_t>(k)];
  }
  std::vector<cdouble> a(spec.size());
  fft::backward(spec, a);

  const double step = 1.0 / (cfg.bandwidth * kZeroPad);
  long first = static_cast<long>(std::ceil(window_lo / step));
  long last = static_cast<long>(std::ceil(window_hi / step)) - 1;
  first = std::clamp(first, 0L, len - 1);
  last = std::clamp(last, first, len - 1);

  long best = first;
  double best_p = -1.0;
  std::vector<double> powers;
  powers.reserve(static_cast<std::size_t>(last - first + 1));
  for (long i = first; i <= last; ++i) {
    const double p = std::norm(a[static_cast<std::size_t>(i)]);
    powers.push_back(p);
    if (p > best_p) {
      best_p = p;
      best = i;
    }
  }
  const double med = median_of(powers);

  // Newton iterations on |A(tau)|^2 with analytic derivatives, kept inside one grid step.
  const double tau0 = static_cast<double>(best) * step;
  double tau = tau0;
  for (int it = 0; it < 8; ++it) {
    cdouble a0 = 0.0, a1 = 0.0, a2 = 0.0;
    for (int k = 0; k < n; ++k) {
      const double w = kTwoPi * cfg.subcarrier_freq(k);
      const cdouble term = h_column[static_cast<std::size_t>(k)] * std::polar(1.0, w * tau);
      a0 += term;
      a1 += cdouble(0.0, w) * term;
      a2 += -w * w * term;
    }
    const double d1 = 2.0 * std::real(std::conj(a0) * a1);
    const double d2 = 2.0 * (std::norm(a1) + std::real(std::conj(a0) * a2));
    if (!(d2 < 0.0)) break;
    const double next = tau - d1 / d2;
    if (std::abs(next - tau0) > step) break;
    const bool done = std::abs(next - tau) < 1e-6 * step;
    tau = next;
    if (done) break;
  }

  cdouble amp = 0.0;
  for (int k = 0; k < n; ++k)
    amp += h_column[static_cast<std::size_t>(k)] * std::polar(1.0, kTwoPi * cfg.subcarrier_freq(k) * tau);

  LosEstimate est;
  est.delay_s = tau;
  est.amplitude = amp / static_cast<double>(n);
  est.peak_to_median_db = med > 0.0 ? 10.0 * std::log10(best_p / med) : std::numeric_limits<double>::infinity();
  return est;
}

std::vector<double> moving_median(std::span<const double> x, int window) {
  if (window < 1) fail(ErrorKind::Validation, "moving_median: window must be >= 1");
  const long n = static_cast<long>(x.size());
  const long half = window / 2;
  std::vector<double> out(x.size());
  std::vector<double> buf;
  for (long i = 0; i < n; ++i) {
    buf.clear();
    for (long j = std::max(0L, i - half); j <= std::min(n - 1, i + half); ++j)
      if (!std::isnan(x[static_cast<std::size_t>(j)])) buf.push_back(x[static_cast<std::size_t>(j)]);
    out[static_cast<std::size_t>(i)] = buf.empty() ? std::numeric_limits<double>::quiet_NaN() : median_of(buf);
  }
  return out;
}

std::vector<double> moving_mean(std::span<const double> x, int window) {
  if (window < 1) fail(ErrorKind::Validation, "moving_mean: window must be >= 1");
  const long n = static_cast<long>(x.size());
  const long half = window / 2;
  std::vector<double> out(x.size());
  for (long i = 0; i < n; ++i) {
    double sum = 0.0;
    int count = 0;
    for (long j = std::max(0L, i - half); j <= std::min(n - 1, i + half); ++j) {
      const double v = x[static_cast<std::size_t>(j)];
      if (!std::isnan(v)) {
        sum += v;
        ++count;
      }
    }
    out[static_cast<std::size_t>(i)] = count ? sum / count : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

namespace {

// Replaces NaN entries with the nearest defined neighbour.
void fill_gaps(std::vector<double>& v) {
  const long n = static_cast<long>(v.size());
  long last = -1;
  for (long i = 0; i < n; ++i) {
    if (!std::isnan(v[static_cast<std::size_t>(i)])) {
      for (long j = last + 1; j < i; ++j)
        v[static_cast<std::size_t>(j)] =
            (last < 0 || i - j < j - last) ? v[static_cast<std::size_t>(i)] : v[static_cast<std::size_t>(last)];
      last = i;
    }
  }
  if (last >= 0)
    for (long j = last + 1; j < n; ++j) v[static_cast<std::size_t>(j)] = v[static_cast<std::size_t>(last)];
}

std::vector<double> smooth(std::span<const double> raw, const DriftParams& p) {
  auto med = moving_median(raw, p.median_window);
  auto out = moving_mean(med, p.mean_window);
  fill_gaps(out);
  return out;
}

}  // namespace

std::pair<CtfRecord, DriftEstimate> compensate_drift(const CtfRecord& ctf,
                                                     std::span<const double> truth_los_delay,
                                                     const DriftParams& params) {
  const int ns = ctf.n_symbols();
  if (static_cast<int>(truth_los_delay.size()) != ns)
    fail(ErrorKind::Validation, "compensate_drift: truth LoS delays must cover every symbol");
  const auto& cfg = ctf.cfg;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  DriftEstimate est;
  est.median_window = params.median_window;
  est.mean_window = params.mean_window;
  est.raw_delay_s.assign(static_cast<std::size_t>(ns), nan);
  for (int m = 0; m < ns; ++m) {
    const double expected = truth_los_delay[static_cast<std::size_t>(m)];
    const auto los = estimate_los_delay(ctf.column(m), cfg, expected - params.search_halfwidth_s,
                                        expected + params.search_halfwidth_s);
    if (los.peak_to_median_db >= params.min_peak_db)
      est.raw_delay_s[static_cast<std::size_t>(m)] = los.delay_s - expected;
    else
      ++est.missing;
  }
  if (est.missing > params.max_missing_fraction * ns) {
    std::ostringstream os;
    os << "compensate_drift: unreliable beacon, LoS undetected in " << est.missing << " of " << ns
       << " symbols (" << ctf.tx_id << " -> " << ctf.rx_id << ")";
    fail(ErrorKind::Data, os.str());
  }
  est.delay_s = smooth(est.raw_delay_s, params);

  CtfRecord out = ctf;
  for (int m = 0; m < ns; ++m) rotate_column(out.column(m), cfg, est.delay_s[static_cast<std::size_t>(m)], 0.0);

  est.raw_phase_rad.assign(static_cast<std::size_t>(ns), nan);
  est.phase_rad.assign(static_cast<std::size_t>(ns), 0.0);
  if (params.remove_phase) {
    double prev = nan;
    for (int m = 0; m < ns; ++m) {
      if (std::isnan(est.raw_delay_s[static_cast<std::size_t>(m)])) continue;
      const double tau = truth_los_delay[static_cast<std::size_t>(m)];
      cdouble amp = 0.0;
      const auto col = out.column(m);
      for (int k = 0; k < cfg.n_subcarriers; ++k)
        amp += col[static_cast<std::size_t>(k)] * std::polar(1.0, kTwoPi * cfg.subcarrier_freq(k) * tau);
      const double geometric = -kTwoPi * std::fmod(cfg.f_c * tau, 1.0);
      double psi = wrap_phase(std::arg(amp) - geometric);
      if (!std::isnan(prev)) psi = prev + wrap_phase(psi - prev);
      est.raw_phase_rad[static_cast<std::size_t>(m)] = psi;
      prev = psi;
    }
    est.phase_rad = smooth(est.raw_phase_rad, params);
    for (int m = 0; m < ns; ++m) rotate_column(out.column(m), cfg, 0.0, est.phase_rad[static_cast<std::size_t>(m)]);
  }

  for (int m = 0; m < ns; ++m) {
    out.applied_delay_s[static_cast<std::size_t>(m)] += est.delay_s[static_cast<std::size_t>(m)];
    out.applied_phase_rad[static_cast<std::size_t>(m)] += est.phase_rad[static_cast<std::size_t>(m)];
  }
  return {std::move(out), std::move(est)};
}

CtfRecord restore_raw(const CtfRecord& ctf) {
  CtfRecord out = ctf;
  for (int m = 0; m < ctf.n_symbols(); ++m) {
    rotate_column(out.column(m), ctf.cfg, -ctf.applied_delay_s[static_cast<std::size_t>(m)],
                  -ctf.applied_phase_rad[static_cast<std::size_t>(m)]);
    out.applied_delay_s[static_cast<std::size_t>(m)] = 0.0;
    out.applied_phase_rad[static_cast<std::size_t>(m)] = 0.0;
  }
  return out;
}

}  // namespace isac
