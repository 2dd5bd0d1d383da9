// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "isac/capture.hpp"
#include "isac/locate.hpp"
#include "isac/scenario.hpp"
#include "isac/track.hpp"

namespace isac {

// ---------------------------------------------------------------------------
// simulate

struct SimulateSummary {
  int captures = 0;
  int b2b = 0;
  int telemetry_records = 0;
};

/// Writes every scheduled (tx, rx) capture, one B2B record per hardware chain,
/// telemetry.jsonl, scenario.json and manifest.json into out_dir.
SimulateSummary run_simulate(const Scenario& scenario, const std::filesystem::path& out_dir);

/// One line per node per second of simulated time, t = 0, 1, ...
std::vector<nlohmann::json> telemetry_records(const Scenario& scenario,
                                              const std::map<std::string, std::map<long, double>>& rx_power_dbm);

// ---------------------------------------------------------------------------
// process

struct ProcessOptions {
  std::optional<int> cpi;
  std::optional<double> alpha;
  std::optional<double> pfa;
};

struct DriftTrace {
  double start_time_s = 0.0;
  std::vector<double> symbol_time_s;
  DriftEstimate estimate;
  std::vector<double> true_offset_s;  // empty without truth
};

/// Detection, tracking and drift output of one (tx, rx) stream.
struct StreamResult {
  std::string tx_id;
  std::string rx_id;
  int cpi_length = 0;
  std::vector<CpiDetections> detections;
  std::vector<TrackState> tracks;  // confirmed at least once
  UpdateStats stats;
  std::vector<DriftTrace> drift;
  std::vector<DelayDopplerMap> exports;
  std::vector<std::string> warnings;
};

/// Captures of one stream in time order, fetched lazily.
using CaptureSource = std::function<Capture(std::size_t)>;

/// window_index maps capture start times to their position on the shared
/// schedule; global CPI index = window * cpis_per_capture + local index.
StreamResult process_stream(std::size_t n_captures, const CaptureSource& source, const Capture& b2b,
                            const ProcessingConfig& cfg, const std::map<double, int>& window_index, int cpi_length,
                            const std::vector<int>& export_cpis);

struct ProcessSummary {
  int streams = 0;
  int captures = 0;
  int detections = 0;
  int confirmed_tracks = 0;
};

ProcessSummary run_process(const std::filesystem::path& captures_dir, const std::filesystem::path& out_dir,
                           const ProcessOptions& options);

// ---------------------------------------------------------------------------
// localize

struct LocalizeSummary {
  int cpis = 0;
  int fixes = 0;
  int gaps = 0;
  std::optional<double> rmse_m;
  std::optional<double> ce90_m;
};

LocalizeSummary run_localize(const std::filesystem::path& tracks_dir, const Scenario& scenario,
                             const std::filesystem::path& out_dir);

/// Track file round trip.
nlohmann::json tracks_to_json(const StreamResult& stream, const std::vector<std::pair<int, double>>& cpis);
std::vector<TrackState> tracks_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// report

struct ReportSummary {
  int sections = 0;
  int warnings = 0;
};

ReportSummary run_report(const std::filesystem::path& out_dir);

}  // namespace isac
