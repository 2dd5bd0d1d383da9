// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "isac/sounding.hpp"

namespace isac {

/// Complex delay-Doppler map of one CPI. Row-major [delay][doppler]:
/// delay index d covers d * delay_bin, Doppler index v covers
/// (v - n_doppler/2) * doppler_bin.
struct DelayDopplerMap {
  int cpi_index = 0;
  double time_s = 0.0;  // CPI center
  int n_delay = 0;
  int n_doppler = 0;
  double delay_bin = 0.0;
  double doppler_bin = 0.0;
  std::vector<cdouble> cmap;
  std::vector<double> power;

  std::size_t index(int d, int v) const { return static_cast<std::size_t>(d) * n_doppler + v; }
  double p(int d, int v) const { return power[index(d, v)]; }
  double delay_of(double d) const { return d * delay_bin; }
  double doppler_of(double v) const { return (v - n_doppler / 2) * doppler_bin; }
};

struct MapParams {
  bool delay_window = true;  // Hann taper across subcarriers before the delay IDFT
};

/// Delay IDFT over subcarriers, then Hann-windowed DFT over the CPI's
/// symbols. Throws Range if the CPI is not fully inside the record.
DelayDopplerMap form_dd_map(const CtfRecord& ctf, int cpi_index, const MapParams& params = {});

/// Exponential background over complex maps: B_n = a B_{n-1} + (1-a) C_n with
/// B_0 = C_0; the output for map n >= 1 is C_n - B_{n-1}, the first output is zero.
class BackgroundSubtractor {
 public:
  /// Throws Validation unless 0 <= alpha < 1.
  explicit BackgroundSubtractor(double alpha);
  DelayDopplerMap apply(const DelayDopplerMap& map);
  void reset() { background_.reset(); }

 private:
  double alpha_;
  std::optional<std::vector<cdouble>> background_;
};

std::vector<DelayDopplerMap> subtract_background(std::span<const DelayDopplerMap> maps, double alpha);

struct CfarParams {
  int guard_delay = 2;
  int guard_doppler = 2;
  int train_delay = 8;
  int train_doppler = 4;
  double pfa = 1e-4;
};

struct CellDetection {
  int d = 0;
  int v = 0;
  double power = 0.0;
  double noise = 0.0;  // smallest-of training mean
};

/// Threshold factor for unit-mean exponential cells: shipped table when the
/// window/pfa combination is listed, otherwise calibrated on the fly with a
/// fixed seed.
double so_cfar_factor(const CfarParams& params);

/// Monte Carlo calibration: draws the smallest-of noise statistic n_draws
/// times and solves E[exp(-alpha Z)] = pfa for alpha.
double calibrate_so_cfar(const CfarParams& params, std::size_t n_draws, std::uint64_t seed);

/// Training cells per half-window (leading or lagging along delay).
int so_cfar_half_size(const CfarParams& params);

/// 2D smallest-of CFAR. Training ring minus guard ring, split along delay into
/// leading (d < 0) and lagging (d > 0) halves; the d = 0 column is unused.
/// Border cells whose window leaves the map are skipped. Detect iff
/// P > factor * min(mean_lead, mean_lag).
std::vector<CellDetection> so_cfar(const DelayDopplerMap& map, const CfarParams& params);
std::vector<CellDetection> so_cfar(const DelayDopplerMap& map, const CfarParams& params, double factor);

/// Cell-averaging variant with the same window, used as a comparison baseline.
std::vector<CellDetection> ca_cfar(const DelayDopplerMap& map, const CfarParams& params, double factor);

/// Keeps detections that are maxima of their 3x3 neighbourhood.
std::vector<CellDetection> local_maxima(const DelayDopplerMap& map, std::span<const CellDetection> cells);

struct ScreenParams {
  double dynamic_range_db = 25.0;  // drop cells this far below the strongest output cell; 0 disables
  double ghost_ratio = 0.5;        // require |raw| >= ratio * |output|; 0 disables
};

/// Post-CFAR screening of background-subtracted detections. A cell whose
/// output is dominated by the subtracted background (|raw| < ratio * |output|)
/// is a trail left by a mover and is dropped, as are cells below the dynamic
/// range floor.
std::vector<CellDetection> screen_detections(const DelayDopplerMap& raw, const DelayDopplerMap& output,
                                             std::span<const CellDetection> cells, const ScreenParams& params = {});

struct Detection {
  int cpi_index = 0;
  double time_s = 0.0;
  double delay_s = 0.0;
  double doppler_hz = 0.0;
  double snr_db = 0.0;
  double peak_power = 0.0;
  double delay_offset_bins = 0.0;
  double doppler_offset_bins = 0.0;
  bool delay_flat = false;    // non-concave triple, offset forced to zero
  bool doppler_flat = false;
};

/// Three-point parabolic offset on dB values, clamped to [-0.5, 0.5]. Returns
/// nullopt when the triple is not strictly concave.
std::optional<double> parabolic_offset(double left_db, double center_db, double right_db);

/// Independent parabolic refinement along both axes. Throws Range for border cells.
Detection refine_peak(const DelayDopplerMap& map, const CellDetection& cell);

}  // namespace isac
