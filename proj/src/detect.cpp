// SPDX-License-Identifier: Apache-2.0
#include "isac/detect.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "isac/error.hpp"
#include "isac/fft.hpp"
#include "isac/rng.hpp"

namespace isac {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Periodic Hann, sum = n / 2.
std::vector<double> hann(int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) w[static_cast<std::size_t>(i)] = 0.5 * (1.0 - std::cos(kTwoPi * i / n));
  return w;
}

}  // namespace

DelayDopplerMap form_dd_map(const CtfRecord& ctf, int cpi_index, const MapParams& params) {
  const auto& cfg = ctf.cfg;
  const int n = cfg.n_subcarriers;
  const int m_cpi = cfg.n_symbols_per_cpi;
  const int m0 = cpi_index * m_cpi;
  if (cpi_index < 0 || m0 + m_cpi > ctf.n_symbols()) {
    std::ostringstream os;
    os << "form_dd_map: CPI " << cpi_index << " (" << m_cpi << " symbols) not inside record of "
       << ctf.n_symbols() << " symbols";
    fail(ErrorKind::Range, os.str());
  }

  DelayDopplerMap map;
  map.cpi_index = cpi_index;
  map.time_s = ctf.start_time_s + (m0 + 0.5 * m_cpi) * cfg.t_symbol;
  map.n_delay = n;
  map.n_doppler = m_cpi;
  map.delay_bin = cfg.delay_bin();
  map.doppler_bin = cfg.doppler_bin();
  map.cmap.assign(static_cast<std::size_t>(n) * m_cpi, 0.0);

  const auto w_sc = params.delay_window ? hann(n) : std::vector<double>(static_cast<std::size_t>(n), 1.0);
  const auto w_slow = hann(m_cpi);

  // Delay profiles: h[d] = sum_k w_k H[k] exp(+j2 pi (k - n/2) d / n).
  std::vector<cdouble> in(static_cast<std::size_t>(n)), out(static_cast<std::size_t>(n));
  std::vector<cdouble> profiles(static_cast<std::size_t>(n) * m_cpi);
  for (int m = 0; m < m_cpi; ++m) {
    const auto col = ctf.column(m0 + m);
    for (int k = 0; k < n; ++k) in[static_cast<std::size_t>(k)] = col[static_cast<std::size_t>(k)] * w_sc[static_cast<std::size_t>(k)];
    fft::backward(in, out);
    for (int d = 0; d < n; ++d) {
      const double sign = (d * (n / 2)) % 2 == 0 ? 1.0 : -1.0;  // exp(-j pi d) shift of the k origin
      profiles[static_cast<std::size_t>(d) * m_cpi + m] = sign * out[static_cast<std::size_t>(d)] * w_slow[static_cast<std::size_t>(m)];
    }
  }

  std::vector<cdouble> slow_out(static_cast<std::size_t>(m_cpi));
  for (int d = 0; d < n; ++d) {
    std::span<const cdouble> row(profiles.data() + static_cast<std::size_t>(d) * m_cpi, static_cast<std::size_t>(m_cpi));
    fft::forward(row, slow_out);
    for (int j = 0; j < m_cpi; ++j) {
      const int v = (j + m_cpi / 2) % m_cpi;
      map.cmap[map.index(d, v)] = slow_out[static_cast<std::size_t>(j)];
    }
  }
  map.power.resize(map.cmap.size());
  std::transform(map.cmap.begin(), map.cmap.end(), map.power.begin(), [](cdouble c) { return std::norm(c); });
  return map;
}

BackgroundSubtractor::BackgroundSubtractor(double alpha) : alpha_(alpha) {
  if (!(alpha >= 0.0 && alpha < 1.0)) {
    std::ostringstream os;
    os << "background subtraction: forgetting factor " << alpha << " outside [0, 1)";
    fail(ErrorKind::Validation, os.str());
  }
}

DelayDopplerMap BackgroundSubtractor::apply(const DelayDopplerMap& map) {
  DelayDopplerMap out = map;
  if (!background_) {
    background_ = map.cmap;
    std::fill(out.cmap.begin(), out.cmap.end(), cdouble(0.0));
    std::fill(out.power.begin(), out.power.end(), 0.0);
    return out;
  }
  auto& b = *background_;
  if (b.size() != map.cmap.size()) fail(ErrorKind::Validation, "background subtraction: map size changed");
  for (std::size_t i = 0; i < b.size(); ++i) {
    out.cmap[i] = map.cmap[i] - b[i];
    out.power[i] = std::norm(out.cmap[i]);
    b[i] = alpha_ * b[i] + (1.0 - alpha_) * map.cmap[i];
  }
  return out;
}

std::vector<DelayDopplerMap> subtract_background(std::span<const DelayDopplerMap> maps, double alpha) {
  BackgroundSubtractor sub(alpha);
  std::vector<DelayDopplerMap> out;
  out.reserve(maps.size());
  for (const auto& m : maps) out.push_back(sub.apply(m));
  return out;
}

// ---------------------------------------------------------------------------
// SO-CFAR

int so_cfar_half_size(const CfarParams& p) {
  const int outer_v = 2 * (p.guard_doppler + p.train_doppler) + 1;
  const int guard_v = 2 * p.guard_doppler + 1;
  return (p.guard_delay + p.train_delay) * outer_v - p.guard_delay * guard_v;
}

namespace {

void check_params(const CfarParams& p) {
  if (p.guard_delay < 0 || p.guard_doppler < 0 || p.train_delay < 1 || p.train_doppler < 0)
    fail(ErrorKind::Validation, "cfar: degenerate window (need train_delay >= 1, non-negative sizes)");
  if (!(p.pfa > 0.0 && p.pfa < 0.1)) fail(ErrorKind::Validation, "cfar: pfa must lie in (0, 0.1)");
  if (so_cfar_half_size(p) < 1) fail(ErrorKind::Validation, "cfar: degenerate window");
}

// Gamma(shape, 1) by Marsaglia-Tsang; shape >= 1.
double gamma_draw(Rng& rng, double shape) {
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

struct TableEntry {
  int gd, gv, td, tv;
  double pfa;
  double factor;
};

// Regenerate with `isac_cfar_table` (1e7 draws, seed 2025).
constexpr TableEntry kTable[] = {
#include "cfar_table.inc"
};

// Summed-area table with a zero first row/column.
class Integral {
 public:
  Integral(const std::vector<double>& v, int rows, int cols) : cols_(cols + 1), s_(static_cast<std::size_t>(rows + 1) * (cols + 1), 0.0) {
    for (int r = 0; r < rows; ++r) {
      double row = 0.0;
      for (int c = 0; c < cols; ++c) {
        row += v[static_cast<std::size_t>(r) * cols + c];
        s_[idx(r + 1, c + 1)] = s_[idx(r, c + 1)] + row;
      }
    }
  }
  // Sum over rows [r0, r1], cols [c0, c1] inclusive.
  double sum(int r0, int r1, int c0, int c1) const {
    return s_[idx(r1 + 1, c1 + 1)] - s_[idx(r0, c1 + 1)] - s_[idx(r1 + 1, c0)] + s_[idx(r0, c0)];
  }

 private:
  std::size_t idx(int r, int c) const { return static_cast<std::size_t>(r) * cols_ + c; }
  int cols_;
  std::vector<double> s_;
};

enum class Combine { SmallestOf, CellAveraging };

std::vector<CellDetection> run_cfar(const DelayDopplerMap& map, const CfarParams& p, double factor, Combine mode) {
  check_params(p);
  const int rd = p.guard_delay + p.train_delay;
  const int rv = p.guard_doppler + p.train_doppler;
  if (map.n_delay < 2 * rd + 1 || map.n_doppler < 2 * rv + 1)
    fail(ErrorKind::Validation, "cfar: map smaller than the CFAR window");
  const Integral sat(map.power, map.n_delay, map.n_doppler);
  const double half = so_cfar_half_size(p);
  std::vector<CellDetection> out;
  for (int d = rd; d < map.n_delay - rd; ++d) {
    for (int v = rv; v < map.n_doppler - rv; ++v) {
      const double lead = sat.sum(d - rd, d - 1, v - rv, v + rv) -
                          (p.guard_delay > 0 ? sat.sum(d - p.guard_delay, d - 1, v - p.guard_doppler, v + p.guard_doppler) : 0.0);
      const double lag = sat.sum(d + 1, d + rd, v - rv, v + rv) -
                         (p.guard_delay > 0 ? sat.sum(d + 1, d + p.guard_delay, v - p.guard_doppler, v + p.guard_doppler) : 0.0);
      const double noise = mode == Combine::SmallestOf ? std::min(lead, lag) / half : (lead + lag) / (2.0 * half);
      const double cut = map.p(d, v);
      if (cut > factor * noise) out.push_back({d, v, cut, noise});
    }
  }
  return out;
}

}  // namespace

double calibrate_so_cfar(const CfarParams& params, std::size_t n_draws, std::uint64_t seed) {
  check_params(params);
  const int n = so_cfar_half_size(params);
  Rng rng(seed);
  std::vector<double> z(n_draws);
  for (auto& v : z) v = std::min(gamma_draw(rng, n), gamma_draw(rng, n)) / n;
  const auto pfa_of = [&](double alpha) {
    double s = 0.0;
    for (const double v : z) s += std::exp(-alpha * v);
    return s / static_cast<double>(z.size());
  };
  double lo = 0.0, hi = 1.0;
  while (pfa_of(hi) > params.pfa) hi *= 2.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (pfa_of(mid) > params.pfa ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double so_cfar_factor(const CfarParams& params) {
  check_params(params);
  for (const auto& e : kTable) {
    if (e.gd == params.guard_delay && e.gv == params.guard_doppler && e.td == params.train_delay &&
        e.tv == params.train_doppler && std::abs(e.pfa - params.pfa) <= 1e-9 * params.pfa)
      return e.factor;
  }
  return calibrate_so_cfar(params, 200000, 2025);
}

std::vector<CellDetection> so_cfar(const DelayDopplerMap& map, const CfarParams& params, double factor) {
  return run_cfar(map, params, factor, Combine::SmallestOf);
}

std::vector<CellDetection> so_cfar(const DelayDopplerMap& map, const CfarParams& params) {
  return so_cfar(map, params, so_cfar_factor(params));
}

std::vector<CellDetection> ca_cfar(const DelayDopplerMap& map, const CfarParams& params, double factor) {
  return run_cfar(map, params, factor, Combine::CellAveraging);
}

std::vector<CellDetection> local_maxima(const DelayDopplerMap& map, std::span<const CellDetection> cells) {
  std::vector<CellDetection> out;
  for (const auto& c : cells) {
    bool peak = true;
    for (int dd = -1; dd <= 1 && peak; ++dd) {
      for (int dv = -1; dv <= 1; ++dv) {
        if (dd == 0 && dv == 0) continue;
        const int d = c.d + dd, v = c.v + dv;
        if (d < 0 || d >= map.n_delay || v < 0 || v >= map.n_doppler) continue;
        if (map.p(d, v) > c.power) {
          peak = false;
          break;
        }
      }
    }
    if (peak) out.push_back(c);
  }
  return out;
}

std::vector<CellDetection> screen_detections(const DelayDopplerMap& raw, const DelayDopplerMap& output,
                                             std::span<const CellDetection> cells, const ScreenParams& params) {
  if (raw.cmap.size() != output.cmap.size()) fail(ErrorKind::Validation, "screen_detections: map sizes differ");
  double peak = 0.0;
  for (double p : output.power) peak = std::max(peak, p);
  const double floor = params.dynamic_range_db > 0.0 ? peak * std::pow(10.0, -params.dynamic_range_db / 10.0) : 0.0;
  const double ratio2 = params.ghost_ratio * params.ghost_ratio;
  std::vector<CellDetection> out;
  for (const auto& c : cells) {
    const auto i = output.index(c.d, c.v);
    if (output.power[i] < floor) continue;
    if (std::norm(raw.cmap[i]) < ratio2 * output.power[i]) continue;
    out.push_back(c);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Off-grid refinement

std::optional<double> parabolic_offset(double left_db, double center_db, double right_db) {
  const double denom = left_db - 2.0 * center_db + right_db;
  if (!(denom < 0.0)) return std::nullopt;
  return std::clamp((left_db - right_db) / (2.0 * denom), -0.5, 0.5);
}

namespace {

double to_db(double p) { return 10.0 * std::log10(std::max(p, 1e-300)); }

}  // namespace

Detection refine_peak(const DelayDopplerMap& map, const CellDetection& cell) {
  if (cell.d <= 0 || cell.d >= map.n_delay - 1 || cell.v <= 0 || cell.v >= map.n_doppler - 1) {
    std::ostringstream os;
    os << "refine_peak: cell (" << cell.d << ", " << cell.v << ") on the map border";
    fail(ErrorKind::Range, os.str());
  }
  Detection det;
  det.cpi_index = map.cpi_index;
  det.time_s = map.time_s;
  det.peak_power = map.p(cell.d, cell.v);
  const double c_db = to_db(det.peak_power);
  const auto dd = parabolic_offset(to_db(map.p(cell.d - 1, cell.v)), c_db, to_db(map.p(cell.d + 1, cell.v)));
  const auto dv = parabolic_offset(to_db(map.p(cell.d, cell.v - 1)), c_db, to_db(map.p(cell.d, cell.v + 1)));
  det.delay_flat = !dd.has_value();
  det.doppler_flat = !dv.has_value();
  det.delay_offset_bins = dd.value_or(0.0);
  det.doppler_offset_bins = dv.value_or(0.0);
  det.delay_s = map.delay_of(cell.d + det.delay_offset_bins);
  det.doppler_hz = map.doppler_of(cell.v + det.doppler_offset_bins);
  const double noise = cell.noise > 0.0 ? cell.noise : 1e-300;
  det.snr_db = 10.0 * std::log10(det.peak_power / noise);
  return det;
}

}  // namespace isac
