// SPDX-License-Identifier: Apache-2.0
#include "isac/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "isac/capture_io.hpp"
#include "isac/channel.hpp"
#include "isac/clock.hpp"
#include "isac/error.hpp"
#include "isac/rng.hpp"

namespace isac {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string g17(double v) { return fmt("%.17g", v); }

Vec3 position_clamped(const Trajectory& traj, double t) {
  if (traj.is_stationary()) return traj.samples().front().pos;
  return position_at(traj, std::clamp(t, traj.start_time(), traj.end_time()));
}

// target relative to base
std::string relative_to(const fs::path& target, const fs::path& base) {
  const auto rel = fs::weakly_canonical(target).lexically_relative(fs::weakly_canonical(base));
  return rel.empty() ? fs::weakly_canonical(target).generic_string() : rel.generic_string();
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create directory " + dir.string() + ": " + ec.message());
}

std::string stream_stem(const std::string& tx, const std::string& rx) { return tx + "_" + rx; }

std::vector<std::size_t> schedule_order(const Scenario& sc) {
  std::vector<std::size_t> order(sc.schedule.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return sc.schedule[a].start_s < sc.schedule[b].start_s; });
  return order;
}

}  // namespace

// ---------------------------------------------------------------------------
// simulate

std::vector<json> telemetry_records(const Scenario& sc, const std::map<std::string, std::map<long, double>>& rx_power_dbm) {
  const long seconds = static_cast<long>(std::ceil(sc.end_time()));
  std::map<std::string, ClockProcess> clocks;
  for (const auto& c : sc.clocks) clocks.emplace(c.id, ClockProcess(c));
  std::vector<json> out;
  for (long s = 0; s < seconds; ++s) {
    const double t = static_cast<double>(s);
    for (const auto& n : sc.nodes) {
      const Vec3 p = position_clamped(n.trajectory, t);
      const ClockState cs = clocks.at(n.clock_id).at(t);
      json r;
      r["t"] = t;
      r["node_id"] = n.id;
      r["role"] = n.role == NodeRole::Tx ? "tx" : "rx";
      r["position"] = {p.x(), p.y(), p.z()};
      r["time_error_s"] = cs.time_error_s;
      r["ffo"] = cs.ffo;
      if (n.role == NodeRole::Rx) {
        const auto node = rx_power_dbm.find(n.id);
        const auto sec = node == rx_power_dbm.end() ? nullptr : &node->second;
        if (sec && sec->count(s))
          r["rx_mean_power_dbm"] = sec->at(s);
        else
          r["rx_mean_power_dbm"] = nullptr;
      }
      out.push_back(std::move(r));
    }
  }
  return out;
}

SimulateSummary run_simulate(const Scenario& sc, const fs::path& out_dir) {
  validate(sc);
  ensure_dir(out_dir);
  SimulateSummary summary;
  json manifest;
  manifest["scenario"] = sc.name;
  manifest["seed"] = sc.seed;
  manifest["captures"] = json::array();
  manifest["b2b"] = json::array();
  write_file_atomic(out_dir / "scenario.json", scenario_to_json(sc).dump(2) + "\n");

  std::map<std::string, std::map<long, std::pair<double, int>>> power;
  std::set<std::string> active_tx;
  const auto order = schedule_order(sc);
  for (std::size_t w = 0; w < order.size(); ++w) {
    const auto& win = sc.schedule[order[w]];
    const Node& tx = sc.node(win.tx_id);
    active_tx.insert(tx.id);
    for (const Node* rx : sc.receivers()) {
      const Capture cap = synthesize_capture(sc, tx, *rx, win.start_s, capture_seed(sc.seed, tx.id, rx->id, w));
      char stem[256];
      std::snprintf(stem, sizeof stem, "cap_%s_w%04zu", stream_stem(tx.id, rx->id).c_str(), w);
      const auto hash = write_capture(cap, out_dir, stem);
      manifest["captures"].push_back({{"file", std::string(stem) + ".json"}, {"sha256", hash}});
      double mean = 0.0;
      for (const auto& v : cap.data) mean += std::norm(std::complex<double>(v));
      mean /= static_cast<double>(cap.data.size());
      auto& acc = power[rx->id][static_cast<long>(std::floor(win.start_s))];
      acc.first += mean;
      acc.second += 1;
      ++summary.captures;
    }
  }
  for (const auto& tx_id : active_tx) {
    const Node& tx = sc.node(tx_id);
    for (const Node* rx : sc.receivers()) {
      Capture b2b = synthesize_b2b_capture(sc.signal, tx.hw_seed, rx->hw_seed, sc.b2b.cable_attenuation_db, sc.b2b.snr_db,
                                           derive_seed(capture_seed(sc.seed, tx.id, rx->id, 0), hash_tag("b2b")));
      b2b.tx_id = tx.id;
      b2b.rx_id = rx->id;
      const std::string stem = "b2b_" + stream_stem(tx.id, rx->id);
      const auto hash = write_capture(b2b, out_dir, stem);
      manifest["b2b"].push_back({{"file", stem + ".json"}, {"sha256", hash}});
      ++summary.b2b;
    }
  }

  std::map<std::string, std::map<long, double>> power_dbm;
  for (const auto& [rx, secs] : power)
    for (const auto& [s, acc] : secs) power_dbm[rx][s] = 10.0 * std::log10(acc.first / acc.second) + 30.0;
  std::string lines;
  const auto records = telemetry_records(sc, power_dbm);
  for (const auto& r : records) lines += r.dump() + "\n";
  write_file_atomic(out_dir / "telemetry.jsonl", lines);
  summary.telemetry_records = static_cast<int>(records.size());
  manifest["telemetry"] = {{"file", "telemetry.jsonl"}, {"records", summary.telemetry_records}};
  write_file_atomic(out_dir / "manifest.json", manifest.dump(2) + "\n");
  return summary;
}

// ---------------------------------------------------------------------------
// process

StreamResult process_stream(std::size_t n_captures, const CaptureSource& source, const Capture& b2b,
                            const ProcessingConfig& cfg, const std::map<double, int>& window_index, int cpi_length,
                            const std::vector<int>& export_cpis) {
  StreamResult r;
  r.tx_id = b2b.tx_id;
  r.rx_id = b2b.rx_id;
  r.cpi_length = cpi_length;
  if (cpi_length < 4) fail(ErrorKind::Validation, "process: CPI length must be >= 4 symbols");

  TrackerConfig tcfg = cfg.tracker;
  tcfg.f_c = b2b.cfg.f_c;
  tcfg.delay_bin = b2b.cfg.delay_bin();
  tcfg.doppler_bin = 1.0 / (cpi_length * b2b.cfg.t_symbol);
  Tracker tracker(tcfg);
  BackgroundSubtractor background(cfg.alpha);
  const double factor = so_cfar_factor(cfg.cfar);
  const std::set<int> exports(export_cpis.begin(), export_cpis.end());

  for (std::size_t i = 0; i < n_captures; ++i) {
    const Capture cap = source(i);
    const int n_sym = cap.n_symbols();
    if (n_sym % cpi_length != 0) {
      std::ostringstream os;
      os << "process: capture of " << n_sym << " symbols is not a whole number of " << cpi_length << "-symbol CPIs";
      fail(ErrorKind::Validation, os.str());
    }
    const int n_cpi = n_sym / cpi_length;
    const auto w = window_index.find(cap.start_time_s);
    if (w == window_index.end()) fail(ErrorKind::Data, "process: capture start time not on the schedule");
    if (cap.tx_trajectory.samples().empty() || cap.rx_trajectory.samples().empty())
      fail(ErrorKind::Data, "process: capture " + cap.tx_id + " -> " + cap.rx_id + " carries no node geometry");

    CtfRecord ctf = estimate_ctf(cap, b2b);
    std::vector<double> los(static_cast<std::size_t>(n_sym));
    for (int m = 0; m < n_sym; ++m) {
      const double t = cap.symbol_time(m);
      los[static_cast<std::size_t>(m)] = los_delay(position_clamped(cap.tx_trajectory, t), position_clamped(cap.rx_trajectory, t));
    }

    std::optional<CtfRecord> aligned;
    try {
      auto [out, est] = compensate_drift(ctf, los, cfg.drift);
      DriftTrace trace;
      trace.start_time_s = cap.start_time_s;
      for (int m = 0; m < n_sym; ++m) trace.symbol_time_s.push_back(cap.symbol_time(m));
      trace.estimate = std::move(est);
      if (cap.truth && cap.truth->rx_time_error_s.size() == static_cast<std::size_t>(n_sym))
        for (int m = 0; m < n_sym; ++m)
          trace.true_offset_s.push_back(cap.truth->rx_time_error_s[static_cast<std::size_t>(m)] -
                                        cap.truth->tx_time_error_s[static_cast<std::size_t>(m)]);
      r.drift.push_back(std::move(trace));
      aligned = std::move(out);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Data) throw;
      r.warnings.push_back(e.what());
    }

    for (int c = 0; c < n_cpi; ++c) {
      const int global = w->second * n_cpi + c;
      const double t_center = cap.start_time_s + (c + 0.5) * cpi_length * cap.cfg.t_symbol;
      CpiDetections cd;
      cd.cpi_index = global;
      cd.time_s = t_center;
      if (aligned) {
        aligned->cfg.n_symbols_per_cpi = cpi_length;
        aligned->cfg.n_cpi = n_cpi;
        DelayDopplerMap map = form_dd_map(*aligned, c, cfg.map);
        map.cpi_index = global;
        DelayDopplerMap diff = background.apply(map);
        const auto peaks = local_maxima(diff, so_cfar(diff, cfg.cfar, factor));
        const auto cells = screen_detections(map, diff, peaks, cfg.screen);
        for (const auto& cell : cells) {
          try {
            cd.detections.push_back(refine_peak(diff, cell));
          } catch (const Error& e) {
            if (e.kind() != ErrorKind::Range) throw;
          }
        }
        if (exports.count(global)) r.exports.push_back(std::move(diff));
      }
      tracker.step(cd.cpi_index, cd.time_s, cd.detections);
      r.detections.push_back(std::move(cd));
    }
  }
  for (const auto& t : tracker.tracks()) {
    const bool ever = std::any_of(t.history.begin(), t.history.end(), [](const TrackPoint& p) {
      return p.status == TrackStatus::Confirmed || p.status == TrackStatus::Coasting;
    });
    if (ever) r.tracks.push_back(t);
  }
  r.stats = tracker.stats();
  return r;
}

json tracks_to_json(const StreamResult& s, const std::vector<std::pair<int, double>>& cpis) {
  json j;
  j["schema_version"] = 1;
  j["tx_id"] = s.tx_id;
  j["rx_id"] = s.rx_id;
  j["cpi_length"] = s.cpi_length;
  json grid = json::array();
  for (const auto& [i, t] : cpis) grid.push_back({i, t});
  j["cpis"] = grid;
  j["tracks"] = json::array();
  for (const auto& t : s.tracks) {
    json h = json::array();
    for (const auto& p : t.history)
      h.push_back({{"cpi", p.cpi_index},
                   {"t", p.time_s},
                   {"delay_s", p.x(0)},
                   {"doppler_hz", p.x(1)},
                   {"p", {p.p(0, 0), p.p(0, 1), p.p(1, 0), p.p(1, 1)}},
                   {"status", to_string(p.status)},
                   {"updated", p.updated},
                   {"snr_db", p.snr_db}});
    j["tracks"].push_back({{"id", t.id}, {"status", to_string(t.status)}, {"history", h}});
  }
  j["nis"] = s.stats.nis;
  return j;
}

namespace {

TrackStatus status_from(const std::string& s) {
  for (auto st : {TrackStatus::Tentative, TrackStatus::Confirmed, TrackStatus::Coasting, TrackStatus::Dead})
    if (s == to_string(st)) return st;
  fail(ErrorKind::Data, "unknown track status '" + s + "'");
}

}  // namespace

std::vector<TrackState> tracks_from_json(const json& j) {
  std::vector<TrackState> out;
  try {
    for (const auto& jt : j.at("tracks")) {
      TrackState t;
      t.id = jt.at("id").get<int>();
      t.status = status_from(jt.at("status").get<std::string>());
      for (const auto& jp : jt.at("history")) {
        TrackPoint p;
        p.cpi_index = jp.at("cpi").get<int>();
        p.time_s = jp.at("t").get<double>();
        p.x << jp.at("delay_s").get<double>(), jp.at("doppler_hz").get<double>();
        const auto& m = jp.at("p");
        p.p << m.at(0).get<double>(), m.at(1).get<double>(), m.at(2).get<double>(), m.at(3).get<double>();
        p.status = status_from(jp.at("status").get<std::string>());
        p.updated = jp.at("updated").get<bool>();
        p.snr_db = jp.at("snr_db").get<double>();
        t.history.push_back(p);
      }
      if (!t.history.empty()) {
        t.x = t.history.back().x;
        t.p = t.history.back().p;
        t.last_time_s = t.history.back().time_s;
      }
      out.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::Data, std::string("malformed track file: ") + e.what());
  }
  return out;
}

namespace {

struct SidecarInfo {
  fs::path path;
  bool b2b = false;
  std::string tx, rx;
  double start = 0.0;
  int n_symbols_per_cpi = 0;
  int n_symbols = 0;
};

std::vector<SidecarInfo> scan_captures(const fs::path& dir) {
  if (!fs::is_directory(dir)) fail(ErrorKind::Validation, "captures directory " + dir.string() + " does not exist");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<SidecarInfo> out;
  for (const auto& f : files) {
    json j;
    try {
      j = json::parse(read_file(f));
    } catch (const json::parse_error&) {
      continue;
    }
    if (!j.is_object() || !j.contains("kind") || !j.contains("payload")) continue;
    try {
      SidecarInfo s;
      s.path = f;
      s.b2b = j.at("kind").get<std::string>() == "b2b";
      s.tx = j.at("tx_id").get<std::string>();
      s.rx = j.at("rx_id").get<std::string>();
      s.start = j.at("start_time_s").get<double>();
      s.n_symbols_per_cpi = j.at("cfg").at("n_symbols_per_cpi").get<int>();
      s.n_symbols = j.at("n_symbols").get<int>();
      out.push_back(s);
    } catch (const json::exception& e) {
      fail(ErrorKind::Data, f.string() + ": malformed capture metadata: " + e.what());
    }
  }
  return out;
}

void write_dd_exports(const StreamResult& r, const fs::path& out_dir, json& files) {
  for (const auto& map : r.exports) {
    const std::string stem = "dd_" + stream_stem(r.tx_id, r.rx_id) + "_cpi" + std::to_string(map.cpi_index);
    double peak = 0.0;
    for (double p : map.power) peak = std::max(peak, p);
    const double ref = peak > 0.0 ? peak : 1.0;

    std::string csv;
    csv.reserve(map.power.size() * 9);
    for (int d = 0; d < map.n_delay; ++d) {
      for (int v = 0; v < map.n_doppler; ++v) {
        if (v) csv += ',';
        csv += fmt("%.3f", 10.0 * std::log10(std::max(map.p(d, v), 1e-300)));
      }
      csv += '\n';
    }
    write_file_atomic(out_dir / (stem + ".csv"), csv);

    // Raster: rows are delay bins, columns Doppler bins, 60 dB dynamic range.
    std::vector<unsigned char> img(map.power.size());
    for (std::size_t i = 0; i < img.size(); ++i) {
      const double db = 10.0 * std::log10(std::max(map.power[i] / ref, 1e-30));
      img[i] = static_cast<unsigned char>(std::lround(std::clamp((db + 60.0) / 60.0, 0.0, 1.0) * 200.0));
    }
    json marks = json::array();
    for (const auto& t : r.tracks) {
      for (const auto& p : t.history) {
        if (p.cpi_index != map.cpi_index) continue;
        const int d = static_cast<int>(std::lround(p.x(0) / map.delay_bin));
        const int v = static_cast<int>(std::lround(p.x(1) / map.doppler_bin)) + map.n_doppler / 2;
        marks.push_back({{"track", t.id}, {"d", d}, {"v", v}, {"status", to_string(p.status)}});
        for (int k = -3; k <= 3; ++k) {
          if (d + k >= 0 && d + k < map.n_delay && v >= 0 && v < map.n_doppler) img[map.index(d + k, v)] = 255;
          if (v + k >= 0 && v + k < map.n_doppler && d >= 0 && d < map.n_delay) img[map.index(d, v + k)] = 255;
        }
      }
    }
    std::string pgm = "P5\n" + std::to_string(map.n_doppler) + " " + std::to_string(map.n_delay) + "\n255\n";
    pgm.append(reinterpret_cast<const char*>(img.data()), img.size());
    write_file_atomic(out_dir / (stem + ".pgm"), pgm);
    files.push_back({{"cpi", map.cpi_index},
                     {"time_s", map.time_s},
                     {"grid", stem + ".csv"},
                     {"image", stem + ".pgm"},
                     {"shape", {map.n_delay, map.n_doppler}},
                     {"delay_bin_s", map.delay_bin},
                     {"doppler_bin_hz", map.doppler_bin},
                     {"track_marks", marks}});
  }
}

std::optional<double> drift_rms_ns(const StreamResult& r) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& tr : r.drift) {
    if (tr.true_offset_s.size() != tr.estimate.delay_s.size()) continue;
    for (std::size_t m = 0; m < tr.true_offset_s.size(); ++m) {
      const double e = tr.estimate.delay_s[m] - tr.true_offset_s[m];
      sum += e * e;
      ++n;
    }
  }
  if (!n) return std::nullopt;
  return std::sqrt(sum / static_cast<double>(n)) * 1e9;
}

}  // namespace

ProcessSummary run_process(const fs::path& captures_dir, const fs::path& out_dir, const ProcessOptions& options) {
  const auto sidecars = scan_captures(captures_dir);
  ProcessingConfig cfg;
  if (fs::exists(captures_dir / "scenario.json")) cfg = load_scenario(captures_dir / "scenario.json").processing;
  if (options.alpha) cfg.alpha = *options.alpha;
  if (options.pfa) cfg.cfar.pfa = *options.pfa;
  if (!(cfg.alpha >= 0.0 && cfg.alpha < 1.0)) fail(ErrorKind::Validation, "process: alpha must lie in [0, 1)");
  if (!(cfg.cfar.pfa > 0.0 && cfg.cfar.pfa < 0.1)) fail(ErrorKind::Validation, "process: pfa must lie in (0, 0.1)");
  if (options.cpi && *options.cpi < 4) fail(ErrorKind::Validation, "process: cpi must be >= 4");

  std::map<std::pair<std::string, std::string>, std::vector<const SidecarInfo*>> streams;
  std::map<std::pair<std::string, std::string>, const SidecarInfo*> b2b;
  std::map<std::string, std::set<double>> starts;
  for (const auto& s : sidecars) {
    if (s.b2b) {
      b2b[{s.tx, s.rx}] = &s;
    } else {
      streams[{s.tx, s.rx}].push_back(&s);
      starts[s.tx].insert(s.start);
    }
  }
  if (streams.empty()) fail(ErrorKind::Data, "process: no captures found in " + captures_dir.string());
  for (const auto& [key, caps] : streams)
    if (!b2b.count(key))
      fail(ErrorKind::Data, "process: missing B2B calibration for " + key.first + " -> " + key.second + " (expected b2b_" +
                                stream_stem(key.first, key.second) +
                                ".json); re-run simulate or record a back-to-back capture for this chain");

  ensure_dir(out_dir);
  ProcessSummary summary;
  json jsum;
  jsum["captures_dir"] = relative_to(captures_dir, out_dir);
  jsum["alpha"] = cfg.alpha;
  jsum["pfa"] = cfg.cfar.pfa;
  jsum["streams"] = json::array();
  for (auto& [key, caps] : streams) {
    std::sort(caps.begin(), caps.end(), [](auto* a, auto* b) { return a->start < b->start; });
    const int cpi = options.cpi.value_or(caps.front()->n_symbols_per_cpi);
    const int cpis_per_capture = caps.front()->n_symbols / std::max(cpi, 1);
    std::map<double, int> window_index;
    int w = 0;
    for (double s : starts.at(key.first)) window_index[s] = w++;
    const int total = w * cpis_per_capture;
    std::vector<int> export_cpis;
    for (int e = 0; e < cfg.dd_exports; ++e) export_cpis.push_back(static_cast<int>((e + 1) * static_cast<long>(total) / (cfg.dd_exports + 1)));

    const Capture b2b_cap = read_capture(b2b.at(key)->path);
    auto source = [&](std::size_t i) { return read_capture(caps[i]->path); };
    const StreamResult r = process_stream(caps.size(), source, b2b_cap, cfg, window_index, cpi, export_cpis);

    const std::string stem = stream_stem(key.first, key.second);
    std::string det_csv = "cpi,time_s,delay_s,doppler_hz,snr_db,delay_offset_bins,doppler_offset_bins\n";
    std::vector<std::pair<int, double>> grid;
    int n_det = 0;
    for (const auto& cd : r.detections) {
      grid.emplace_back(cd.cpi_index, cd.time_s);
      for (const auto& d : cd.detections) {
        det_csv += std::to_string(cd.cpi_index) + "," + g17(cd.time_s) + "," + g17(d.delay_s) + "," + g17(d.doppler_hz) + "," +
                   fmt("%.4f", d.snr_db) + "," + fmt("%.5f", d.delay_offset_bins) + "," + fmt("%.5f", d.doppler_offset_bins) + "\n";
        ++n_det;
      }
    }
    write_file_atomic(out_dir / ("detections_" + stem + ".csv"), det_csv);
    write_file_atomic(out_dir / ("tracks_" + stem + ".json"), tracks_to_json(r, grid).dump(1) + "\n");

    std::string drift_csv = "time_s,raw_delay_ns,delay_ns,raw_phase_rad,phase_rad,true_offset_ns\n";
    for (const auto& tr : r.drift) {
      for (std::size_t m = 0; m < tr.symbol_time_s.size(); ++m) {
        drift_csv += g17(tr.symbol_time_s[m]) + "," + fmt("%.6f", tr.estimate.raw_delay_s[m] * 1e9) + "," +
                     fmt("%.6f", tr.estimate.delay_s[m] * 1e9) + "," + fmt("%.6f", tr.estimate.raw_phase_rad[m]) + "," +
                     fmt("%.6f", tr.estimate.phase_rad[m]) + "," +
                     (tr.true_offset_s.empty() ? std::string() : fmt("%.6f", tr.true_offset_s[m] * 1e9)) + "\n";
      }
    }
    write_file_atomic(out_dir / ("drift_" + stem + ".csv"), drift_csv);

    json exports = json::array();
    write_dd_exports(r, out_dir, exports);
    int confirmed = static_cast<int>(r.tracks.size());
    json js = {{"tx_id", key.first},
               {"rx_id", key.second},
               {"captures", caps.size()},
               {"cpi_length", cpi},
               {"cpis", r.detections.size()},
               {"detections", n_det},
               {"confirmed_tracks", confirmed},
               {"files",
                {{"detections", "detections_" + stem + ".csv"}, {"tracks", "tracks_" + stem + ".json"}, {"drift", "drift_" + stem + ".csv"}}},
               {"dd_exports", exports},
               {"warnings", r.warnings}};
    if (const auto rms = drift_rms_ns(r)) js["drift_rms_ns"] = *rms;
    jsum["streams"].push_back(js);
    ++summary.streams;
    summary.captures += static_cast<int>(caps.size());
    summary.detections += n_det;
    summary.confirmed_tracks += confirmed;
  }
  write_file_atomic(out_dir / "process_summary.json", jsum.dump(2) + "\n");
  return summary;
}

// ---------------------------------------------------------------------------
// localize

LocalizeSummary run_localize(const fs::path& tracks_dir, const Scenario& sc, const fs::path& out_dir) {
  if (!fs::is_directory(tracks_dir)) fail(ErrorKind::Validation, "tracks directory " + tracks_dir.string() + " does not exist");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(tracks_dir)) {
    const auto name = e.path().filename().string();
    if (e.is_regular_file() && name.rfind("tracks_", 0) == 0 && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());

  std::map<std::string, std::map<std::string, std::vector<TrackState>>> by_tx;
  std::map<int, double> cpi_grid;
  for (const auto& f : files) {
    json j;
    try {
      j = json::parse(read_file(f));
    } catch (const json::parse_error& e) {
      fail(ErrorKind::Data, f.string() + ": " + e.what());
    }
    const auto tx = j.value("tx_id", std::string());
    const auto rx = j.value("rx_id", std::string());
    by_tx[tx][rx] = tracks_from_json(j);
    if (j.contains("cpis"))
      for (const auto& c : j["cpis"]) cpi_grid.emplace(c.at(0).get<int>(), c.at(1).get<double>());
  }

  const double sigma = sc.position_noise_m;
  const std::uint64_t seed = sc.seed;
  PositionProvider positions = [&](const std::string& id, double t) {
    Vec3 p = position_clamped(sc.node(id).trajectory, t);
    if (sigma > 0.0) {
      Rng rng(derive_seed(derive_seed(seed, hash_tag("position:" + id)), static_cast<std::uint64_t>(std::llround(t * 1e6))));
      p += sigma * Vec3(rng.normal(), rng.normal(), rng.normal());
    }
    return p;
  };
  TruthProvider truth;
  if (!sc.targets.empty()) {
    const Trajectory traj = sc.targets.front().trajectory;
    truth = [traj](double t) -> std::optional<Vec3> {
      if (!traj.is_stationary() && (t < traj.start_time() || t > traj.end_time())) return std::nullopt;
      return position_at(traj, t);
    };
  }

  std::vector<LocalizedFix> fixes;
  std::set<int> failed;
  for (const auto& [tx, tracks] : by_tx) {
    const auto res = localize_track(tracks, tx, positions, truth, sc.processing.localizer);
    fixes.insert(fixes.end(), res.fixes.begin(), res.fixes.end());
    failed.insert(res.failed.begin(), res.failed.end());
  }
  std::stable_sort(fixes.begin(), fixes.end(), [](const auto& a, const auto& b) { return a.cpi_index < b.cpi_index; });

  ensure_dir(out_dir);
  std::string csv = "cpi,time_s,x,y,z,sigma_x,sigma_y,sigma_z,rss_residual_s2,n_obs,converged,ambiguous,ill_conditioned,truth_x,truth_y,truth_z,error_m\n";
  std::vector<double> err3, errh;
  std::set<int> fixed;
  for (const auto& f : fixes) {
    fixed.insert(f.cpi_index);
    const auto& p = f.fix.p;
    const auto& c = f.fix.covariance;
    csv += std::to_string(f.cpi_index) + "," + g17(f.time_s) + "," + fmt("%.6f", p.x()) + "," + fmt("%.6f", p.y()) + "," +
           fmt("%.6f", p.z()) + "," + fmt("%.6f", std::sqrt(std::max(c(0, 0), 0.0))) + "," +
           fmt("%.6f", std::sqrt(std::max(c(1, 1), 0.0))) + "," + fmt("%.6f", std::sqrt(std::max(c(2, 2), 0.0))) + "," +
           fmt("%.6e", f.fix.rss_residual) + "," + std::to_string(f.fix.n_obs) + "," + (f.fix.converged ? "1" : "0") + "," +
           (f.fix.ambiguous ? "1" : "0") + "," + (f.fix.ill_conditioned ? "1" : "0") + ",";
    if (f.truth && f.error_m) {
      csv += fmt("%.6f", f.truth->x()) + "," + fmt("%.6f", f.truth->y()) + "," + fmt("%.6f", f.truth->z()) + "," + fmt("%.6f", *f.error_m);
      err3.push_back(*f.error_m);
      errh.push_back((f.fix.p - *f.truth).head<2>().norm());
    } else {
      csv += ",,,";
    }
    csv += "\n";
  }
  write_file_atomic(out_dir / "fixes.csv", csv);

  LocalizeSummary summary;
  summary.cpis = static_cast<int>(cpi_grid.size());
  summary.fixes = static_cast<int>(fixes.size());
  json gaps = json::array();
  for (const auto& [i, t] : cpi_grid)
    if (!fixed.count(i)) gaps.push_back({{"cpi", i}, {"time_s", t}, {"reason", failed.count(i) ? "solver" : "fewer than three receivers"}});
  summary.gaps = static_cast<int>(gaps.size());
  if (!err3.empty()) {
    double s = 0.0;
    for (double e : err3) s += e * e;
    summary.rmse_m = std::sqrt(s / static_cast<double>(err3.size()));
    std::sort(errh.begin(), errh.end());
    const auto rank = static_cast<std::size_t>(std::ceil(0.9 * static_cast<double>(errh.size())));
    summary.ce90_m = errh[std::max<std::size_t>(rank, 1) - 1];
  }

  json j;
  j["scenario"] = sc.name;
  j["sources"] = {{"tracks_dir", relative_to(tracks_dir, out_dir)}, {"track_files", files.size()}};
  j["cpis"] = summary.cpis;
  j["fixes"] = summary.fixes;
  j["coverage"] = summary.cpis ? static_cast<double>(summary.fixes) / summary.cpis : 0.0;
  j["rmse_m"] = summary.rmse_m ? json(*summary.rmse_m) : json(nullptr);
  j["ce90_m"] = summary.ce90_m ? json(*summary.ce90_m) : json(nullptr);
  j["truth"] = !sc.targets.empty();
  j["gaps"] = gaps;
  if (by_tx.empty() || std::all_of(by_tx.begin(), by_tx.end(), [](const auto& kv) { return kv.second.size() < 3; }))
    j["warnings"] = {"fewer than three receiver track files; every CPI is a gap"};
  else
    j["warnings"] = json::array();
  j["files"] = {{"fixes", "fixes.csv"}};
  write_file_atomic(out_dir / "localization.json", j.dump(2) + "\n");
  return summary;
}

// ---------------------------------------------------------------------------
// report

namespace {

std::optional<json> try_load(const fs::path& p, std::vector<std::string>& warnings) {
  if (!fs::exists(p)) return std::nullopt;
  try {
    return json::parse(read_file(p));
  } catch (const std::exception& e) {
    warnings.push_back("could not parse " + p.filename().string() + ": " + e.what());
    return std::nullopt;
  }
}

std::string num(const json& v, const char* f) { return v.is_number() ? fmt(f, v.get<double>()) : std::string("n/a"); }

}  // namespace

ReportSummary run_report(const fs::path& out_dir) {
  ensure_dir(out_dir);
  std::vector<std::string> warnings;
  ReportSummary summary;
  std::ostringstream md;
  md << "# ISAC processing report\n\n";

  const auto loc = try_load(out_dir / "localization.json", warnings);
  std::optional<json> proc;
  fs::path tracks_rel;
  if (loc && loc->contains("sources")) {
    tracks_rel = fs::path((*loc)["sources"].value("tracks_dir", std::string()));
    proc = try_load(out_dir / tracks_rel / "process_summary.json", warnings);
    if (!proc) warnings.push_back("process summary not found in " + tracks_rel.generic_string());
  } else if (!loc) {
    warnings.push_back("localization.json not found; run localize first");
  }

  md << "## Synchronization drift\n\n";
  if (proc) {
    md << "| stream | captures | drift RMS vs truth (ns) | warnings | trace |\n|---|---|---|---|---|\n";
    for (const auto& s : (*proc)["streams"]) {
      const auto drift = (tracks_rel / s["files"].value("drift", std::string())).generic_string();
      md << "| " << s.value("tx_id", "") << " -> " << s.value("rx_id", "") << " | " << s.value("captures", 0) << " | "
         << (s.contains("drift_rms_ns") ? num(s["drift_rms_ns"], "%.3f") : "n/a") << " | " << s["warnings"].size() << " | "
         << drift << " |\n";
    }
    md << "\n";
    ++summary.sections;
  } else {
    md << "_missing: no drift traces available_\n\n";
  }

  md << "## Delay-Doppler maps\n\n";
  if (proc) {
    for (const auto& s : (*proc)["streams"]) {
      md << "### " << s.value("tx_id", "") << " -> " << s.value("rx_id", "") << "\n\n";
      md << "detections: " << s.value("detections", 0) << ", confirmed tracks: " << s.value("confirmed_tracks", 0) << "\n\n";
      for (const auto& e : s["dd_exports"]) {
        md << "- CPI " << e.value("cpi", 0) << " at " << num(e["time_s"], "%.3f") << " s: image "
           << (tracks_rel / e.value("image", std::string())).generic_string() << ", grid "
           << (tracks_rel / e.value("grid", std::string())).generic_string() << ", " << e["track_marks"].size()
           << " track marks\n";
      }
      md << "\n";
    }
    ++summary.sections;
  } else {
    md << "_missing: no delay-Doppler exports available_\n\n";
  }

  md << "## Localization\n\n";
  if (loc) {
    md << "- fixes: " << loc->value("fixes", 0) << " of " << loc->value("cpis", 0) << " CPIs (coverage "
       << num((*loc)["coverage"], "%.3f") << ")\n";
    md << "- 3D RMSE: " << num((*loc)["rmse_m"], "%.3f") << " m\n";
    md << "- CE90 (horizontal): " << num((*loc)["ce90_m"], "%.3f") << " m\n";
    md << "- gaps: " << (*loc)["gaps"].size() << "\n";
    md << "- error series: " << "fixes.csv" << "\n\n";
    for (const auto& w : (*loc)["warnings"]) warnings.push_back(w.get<std::string>());
    ++summary.sections;
  } else {
    md << "_missing: no localization output_\n\n";
  }

  md << "## Warnings\n\n";
  if (warnings.empty()) md << "none\n";
  for (const auto& w : warnings) md << "- " << w << "\n";
  write_file_atomic(out_dir / "report.md", md.str());
  summary.warnings = static_cast<int>(warnings.size());
  return summary;
}

}  // namespace isac
