// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "isac/clock.hpp"
#include "isac/detect.hpp"
#include "isac/locate.hpp"
#include "isac/scene.hpp"
#include "isac/sounding.hpp"
#include "isac/track.hpp"
#include "isac/waveform.hpp"

namespace isac {

/// One Tx active for one capture (n_symbols_per_cpi * n_cpi symbols).
struct ScheduleWindow {
  std::string tx_id;
  double start_s = 0.0;
};

struct B2bConfig {
  double cable_attenuation_db = 30.0;
  double snr_db = 70.0;
};

struct ProcessingConfig {
  double alpha = 0.9;
  CfarParams cfar;
  ScreenParams screen;
  MapParams map;
  DriftParams drift;
  TrackerConfig tracker;  // bins and f_c are filled from the signal config
  LocalizerConfig localizer;
  int dd_exports = 3;     // DD maps written per receiver
};

struct Scenario {
  int schema_version = 1;
  std::string name = "scenario";
  SignalConfig signal;
  std::vector<ClockModel> clocks;
  std::vector<Node> nodes;
  std::vector<Target> targets;
  std::vector<ClutterTap> clutter;
  std::vector<ScheduleWindow> schedule;
  B2bConfig b2b;
  ProcessingConfig processing;
  std::uint64_t seed = 1;
  double position_noise_m = 0.0;  // Gaussian noise on node positions handed to the localizer

  const Node& node(const std::string& id) const;
  const ClockModel& clock(const std::string& id) const;
  const Target* target(const std::string& id) const;
  std::vector<const Node*> receivers() const;
  double capture_duration() const { return signal.n_symbols() * signal.t_symbol; }
  /// End of the last scheduled window.
  double end_time() const;
};

/// Schema and cross-reference validation; throws Validation with a
/// path-to-field prefix such as "nodes[2].clock".
void validate(const Scenario& s);

Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const Scenario& s);
Scenario load_scenario(const std::filesystem::path& path);

/// Directional rooftop Tx, one ground Rx behind LoS absorbers and three hovering Rx observing a
/// VTOL-like target on a 100 m straight pass at 10 m/s.
Scenario demo_scenario();

}  // namespace isac
