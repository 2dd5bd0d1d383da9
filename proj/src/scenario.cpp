// SPDX-License-Identifier: Apache-2.0
#include "isac/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "isac/error.hpp"

namespace isac {

using nlohmann::json;

const Node& Scenario::node(const std::string& id) const {
  for (const auto& n : nodes)
    if (n.id == id) return n;
  fail(ErrorKind::Validation, "unknown node '" + id + "'");
}

const ClockModel& Scenario::clock(const std::string& id) const {
  for (const auto& c : clocks)
    if (c.id == id) return c;
  fail(ErrorKind::Validation, "unknown clock '" + id + "'");
}

const Target* Scenario::target(const std::string& id) const {
  for (const auto& t : targets)
    if (t.id == id) return &t;
  return nullptr;
}

std::vector<const Node*> Scenario::receivers() const {
  std::vector<const Node*> out;
  for (const auto& n : nodes)
    if (n.role == NodeRole::Rx) out.push_back(&n);
  return out;
}

double Scenario::end_time() const {
  double end = 0.0;
  for (const auto& w : schedule) end = std::max(end, w.start_s + capture_duration());
  return end;
}

// ---------------------------------------------------------------------------
// Validation

namespace {

[[noreturn]] void invalid(const std::string& path, const std::string& msg) {
  fail(ErrorKind::Validation, path + ": " + msg);
}

void check_covers(const Trajectory& traj, double t0, double t1, const std::string& path) {
  if (traj.is_stationary()) return;
  if (traj.start_time() > t0 || traj.end_time() < t1) {
    std::ostringstream os;
    os << "trajectory span [" << traj.start_time() << ", " << traj.end_time() << "] s does not cover the schedule ["
       << t0 << ", " << t1 << "] s";
    invalid(path, os.str());
  }
}

}  // namespace

void validate(const Scenario& s) {
  try {
    s.signal.validate();
  } catch (const Error& e) {
    invalid("signal", e.what());
  }
  std::set<std::string> clock_ids;
  for (std::size_t i = 0; i < s.clocks.size(); ++i) {
    const auto& c = s.clocks[i];
    const std::string path = "clocks[" + std::to_string(i) + "]";
    if (c.id.empty()) invalid(path + ".id", "empty id");
    if (!clock_ids.insert(c.id).second) invalid(path + ".id", "duplicate clock id '" + c.id + "'");
    if (!(c.ffo_random_walk_psd >= 0.0)) invalid(path + ".ffo_random_walk_psd", "must be >= 0");
    if (!std::isfinite(c.initial_ffo) || !std::isfinite(c.initial_time_offset_s)) invalid(path, "non-finite value");
  }

  const double t0 = s.schedule.empty() ? 0.0 : std::min_element(s.schedule.begin(), s.schedule.end(), [](auto& a, auto& b) { return a.start_s < b.start_s; })->start_s;
  const double t1 = s.end_time();

  std::set<std::string> node_ids;
  std::map<std::string, NodeRole> roles;
  for (std::size_t i = 0; i < s.nodes.size(); ++i) {
    const auto& n = s.nodes[i];
    const std::string path = "nodes[" + std::to_string(i) + "]";
    if (n.id.empty()) invalid(path + ".id", "empty id");
    if (!node_ids.insert(n.id).second) invalid(path + ".id", "duplicate node id '" + n.id + "'");
    roles[n.id] = n.role;
    if (!clock_ids.count(n.clock_id)) invalid(path + ".clock", "unknown clock '" + n.clock_id + "'");
    if (n.antenna.kind == AntennaKind::Directional) {
      if (!(n.antenna.boresight.norm() > 0.0)) invalid(path + ".antenna.boresight", "zero vector");
      if (!(n.antenna.beamwidth_10db_deg > 0.0)) invalid(path + ".antenna.beamwidth_10db_deg", "must be > 0");
    }
    if (!std::isfinite(n.eirp_dbm)) invalid(path + ".eirp_dbm", "non-finite");
    if (!std::isfinite(n.noise_floor_dbm_hz)) invalid(path + ".noise_floor_dbm_hz", "non-finite");
    if (!s.schedule.empty()) check_covers(n.trajectory, t0, t1, path + ".trajectory");
  }
  if (std::none_of(s.nodes.begin(), s.nodes.end(), [](const Node& n) { return n.role == NodeRole::Tx; }))
    invalid("nodes", "no transmitter declared");
  if (std::none_of(s.nodes.begin(), s.nodes.end(), [](const Node& n) { return n.role == NodeRole::Rx; }))
    invalid("nodes", "no receiver declared");

  std::set<std::string> target_ids;
  for (std::size_t i = 0; i < s.targets.size(); ++i) {
    const auto& t = s.targets[i];
    const std::string path = "targets[" + std::to_string(i) + "]";
    if (!target_ids.insert(t.id).second) invalid(path + ".id", "duplicate target id '" + t.id + "'");
    if (!std::isfinite(t.rcs_dbsm)) invalid(path + ".rcs_dbsm", "non-finite");
    if (!s.schedule.empty()) check_covers(t.trajectory, t0, t1, path + ".trajectory");
  }

  for (std::size_t i = 0; i < s.clutter.size(); ++i) {
    const auto& c = s.clutter[i];
    const std::string path = "clutter[" + std::to_string(i) + "]";
    const auto r = roles.find(c.rx_id);
    if (r == roles.end()) invalid(path + ".rx", "unknown node '" + c.rx_id + "'");
    if (r->second != NodeRole::Rx) invalid(path + ".rx", "node '" + c.rx_id + "' is not a receiver");
    if (!(c.delay_s >= 0.0 && c.delay_s < s.signal.t_symbol)) invalid(path + ".delay_s", "must lie in [0, t_symbol)");
    if (!std::isfinite(c.gain_db) || !std::isfinite(c.phase_rad)) invalid(path, "non-finite value");
  }

  if (s.schedule.empty()) invalid("schedule", "no capture windows");
  for (std::size_t i = 0; i < s.schedule.size(); ++i) {
    const auto& w = s.schedule[i];
    const std::string path = "schedule[" + std::to_string(i) + "]";
    const auto r = roles.find(w.tx_id);
    if (r == roles.end()) invalid(path + ".tx", "unknown node '" + w.tx_id + "'");
    if (r->second != NodeRole::Tx) invalid(path + ".tx", "node '" + w.tx_id + "' is not a transmitter");
    if (!(w.start_s >= 0.0)) invalid(path + ".start_s", "must be >= 0");
  }
  // Single carrier: windows must be pairwise disjoint.
  std::vector<std::size_t> order(s.schedule.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return s.schedule[a].start_s < s.schedule[b].start_s; });
  std::vector<std::string> conflicts;
  for (std::size_t i = 1; i < order.size(); ++i) {
    const auto& a = s.schedule[order[i - 1]];
    const auto& b = s.schedule[order[i]];
    if (b.start_s < a.start_s + s.capture_duration())
      conflicts.push_back("schedule[" + std::to_string(order[i - 1]) + "] overlaps schedule[" + std::to_string(order[i]) + "]");
  }
  if (!conflicts.empty()) {
    std::string msg;
    for (const auto& c : conflicts) msg += (msg.empty() ? "" : "; ") + c;
    invalid("schedule", msg);
  }

  const auto& p = s.processing;
  if (!(p.alpha >= 0.0 && p.alpha < 1.0)) invalid("processing.alpha", "must lie in [0, 1)");
  if (!(p.cfar.pfa > 0.0 && p.cfar.pfa < 0.1)) invalid("processing.cfar.pfa", "must lie in (0, 0.1)");
  if (!(p.screen.dynamic_range_db >= 0.0)) invalid("processing.screen.dynamic_range_db", "must be non-negative");
  if (!(p.screen.ghost_ratio >= 0.0 && p.screen.ghost_ratio <= 1.0)) invalid("processing.screen.ghost_ratio", "must lie in [0, 1]");
  if (p.cfar.train_delay < 1 || p.cfar.guard_delay < 0 || p.cfar.guard_doppler < 0 || p.cfar.train_doppler < 0)
    invalid("processing.cfar", "degenerate window");
  if (p.drift.median_window < 1 || p.drift.mean_window < 1) invalid("processing.drift", "windows must be >= 1");
  try {
    p.tracker.validate();
  } catch (const Error& e) {
    invalid("processing.tracker", e.what());
  }
  if (!(s.position_noise_m >= 0.0)) invalid("position_noise_m", "must be >= 0");
}

// ---------------------------------------------------------------------------
// JSON

namespace {

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

  bool has(const char* key) const { return j_.is_object() && j_.contains(key); }
  Reader at(const char* key) const {
    if (!has(key)) invalid(path_.empty() ? key : path_ + "." + key, "missing required field");
    return Reader(j_.at(key), child(key));
  }
  Reader item(std::size_t i) const {
    if (i >= size()) invalid(path_, "expected at least " + std::to_string(i + 1) + " elements");
    return Reader(j_.at(i), path_ + "[" + std::to_string(i) + "]");
  }
  std::size_t size() const {
    if (!j_.is_array()) invalid(path_, "expected an array");
    return j_.size();
  }
  double number() const {
    if (!j_.is_number()) invalid(path_, "expected a number");
    return j_.get<double>();
  }
  long integer() const {
    if (!j_.is_number_integer() && !(j_.is_number() && std::floor(j_.get<double>()) == j_.get<double>()))
      invalid(path_, "expected an integer");
    return j_.is_number_integer() ? j_.get<long>() : static_cast<long>(j_.get<double>());
  }
  std::uint64_t u64() const {
    if (!j_.is_number_unsigned() && !(j_.is_number_integer() && j_.get<long>() >= 0)) invalid(path_, "expected a non-negative integer");
    return j_.get<std::uint64_t>();
  }
  std::string string() const {
    if (!j_.is_string()) invalid(path_, "expected a string");
    return j_.get<std::string>();
  }
  bool boolean() const {
    if (!j_.is_boolean()) invalid(path_, "expected a boolean");
    return j_.get<bool>();
  }
  Vec3 vec3() const {
    if (!j_.is_array() || j_.size() != 3) invalid(path_, "expected [x, y, z]");
    Vec3 v(item(0).number(), item(1).number(), item(2).number());
    if (!v.allFinite()) invalid(path_, "non-finite component");
    return v;
  }
  double number_or(const char* key, double def) const { return has(key) ? at(key).number() : def; }
  long integer_or(const char* key, long def) const { return has(key) ? at(key).integer() : def; }
  bool boolean_or(const char* key, bool def) const { return has(key) ? at(key).boolean() : def; }
  const std::string& path() const { return path_; }

 private:
  std::string child(const char* key) const { return path_.empty() ? key : path_ + "." + key; }
  const json& j_;
  std::string path_;
};

Trajectory read_trajectory(const Reader& r, const std::string& name) {
  if (r.has("position")) return Trajectory::stationary(name, r.at("position").vec3());
  const auto tr = r.at("trajectory");
  std::vector<std::pair<double, Vec3>> pts;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    const auto s = tr.item(i);
    pts.emplace_back(s.at("t").number(), s.at("pos").vec3());
  }
  Trajectory traj;
  try {
    traj = Trajectory(name, pts);
  } catch (const Error& e) {
    invalid(tr.path(), e.what());
  }
  for (std::size_t i = 0; i + 1 < tr.size(); ++i) {
    const auto s = tr.item(i);
    if (!s.has("vel")) continue;
    const Vec3 given = s.at("vel").vec3();
    const Vec3 derived = traj.samples()[i].vel;
    if ((given - derived).norm() > 1e-9 * std::max(1.0, derived.norm()))
      invalid(s.path() + ".vel", "inconsistent with the sample positions");
  }
  return traj;
}

void trajectory_to_json(const Trajectory& t, json& out) {
  if (t.is_stationary()) {
    const auto& p = t.samples().front().pos;
    out["position"] = {p.x(), p.y(), p.z()};
    return;
  }
  json arr = json::array();
  for (const auto& s : t.samples()) arr.push_back({{"t", s.t}, {"pos", {s.pos.x(), s.pos.y(), s.pos.z()}}});
  out["trajectory"] = arr;
}

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

}  // namespace

Scenario scenario_from_json(const json& j) {
  const Reader root(j, "");
  if (!j.is_object()) invalid("<root>", "expected an object");
  Scenario s;
  s.schema_version = static_cast<int>(root.integer_or("schema_version", 1));
  if (s.schema_version != 1) invalid("schema_version", "unsupported version " + std::to_string(s.schema_version));
  if (root.has("name")) s.name = root.at("name").string();
  if (root.has("seed")) s.seed = root.at("seed").u64();
  s.position_noise_m = root.number_or("position_noise_m", 0.0);

  const auto sig = root.at("signal");
  s.signal.f_c = sig.at("fc_hz").number();
  s.signal.n_subcarriers = static_cast<int>(sig.at("n_subcarriers").integer());
  s.signal.t_symbol = sig.at("t_symbol_s").number();
  s.signal.bandwidth = sig.number_or("bandwidth_hz", s.signal.n_subcarriers / s.signal.t_symbol);
  s.signal.n_symbols_per_cpi = static_cast<int>(sig.at("n_symbols_per_cpi").integer());
  s.signal.n_cpi = static_cast<int>(sig.integer_or("n_cpi", 1));

  const auto clocks = root.at("clocks");
  for (std::size_t i = 0; i < clocks.size(); ++i) {
    const auto c = clocks.item(i);
    ClockModel m;
    m.id = c.at("id").string();
    m.initial_time_offset_s = c.number_or("initial_time_offset_s", 0.0);
    m.initial_ffo = c.number_or("initial_ffo", 0.0);
    m.ffo_random_walk_psd = c.number_or("ffo_random_walk_psd", 0.0);
    m.seed = c.has("seed") ? c.at("seed").u64() : i + 1;
    s.clocks.push_back(m);
  }

  const auto nodes = root.at("nodes");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto r = nodes.item(i);
    Node n;
    n.id = r.at("id").string();
    const auto role = r.at("role").string();
    if (role == "tx")
      n.role = NodeRole::Tx;
    else if (role == "rx")
      n.role = NodeRole::Rx;
    else
      invalid(r.path() + ".role", "expected \"tx\" or \"rx\"");
    n.clock_id = r.at("clock").string();
    n.trajectory = read_trajectory(r, n.id);
    if (n.role == NodeRole::Tx) n.eirp_dbm = r.at("eirp_dbm").number();
    n.noise_floor_dbm_hz = r.number_or("noise_floor_dbm_hz", -168.0);
    n.los_attenuation_db = r.number_or("los_attenuation_db", 0.0);
    n.hw_seed = r.has("hw_seed") ? r.at("hw_seed").u64() : 1000 + i;
    if (r.has("antenna")) {
      const auto a = r.at("antenna");
      const auto kind = a.at("kind").string();
      if (kind == "omni") {
        n.antenna.kind = AntennaKind::Omni;
      } else if (kind == "directional") {
        n.antenna.kind = AntennaKind::Directional;
        n.antenna.boresight = a.at("boresight").vec3();
        n.antenna.beamwidth_10db_deg = a.number_or("beamwidth_10db_deg", 40.0);
      } else {
        invalid(a.path() + ".kind", "expected \"omni\" or \"directional\"");
      }
    }
    s.nodes.push_back(std::move(n));
  }

  if (root.has("targets")) {
    const auto ts = root.at("targets");
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const auto r = ts.item(i);
      Target t;
      t.id = r.at("id").string();
      t.trajectory = read_trajectory(r, t.id);
      t.rcs_dbsm = r.number_or("rcs_dbsm", -3.0);
      s.targets.push_back(std::move(t));
    }
  }
  if (root.has("clutter")) {
    const auto cs = root.at("clutter");
    for (std::size_t i = 0; i < cs.size(); ++i) {
      const auto r = cs.item(i);
      s.clutter.push_back({r.at("rx").string(), r.at("delay_s").number(), r.at("gain_db").number(), r.number_or("phase_rad", 0.0)});
    }
  }

  const auto sched = root.at("schedule");
  for (std::size_t i = 0; i < sched.size(); ++i) {
    const auto r = sched.item(i);
    const auto tx = r.at("tx").string();
    const double start = r.at("start_s").number();
    const long repeat = r.integer_or("repeat", 1);
    const double period = repeat > 1 ? r.at("period_s").number() : 0.0;
    if (repeat < 1) invalid(r.path() + ".repeat", "must be >= 1");
    for (long k = 0; k < repeat; ++k) s.schedule.push_back({tx, start + k * period});
  }

  if (root.has("b2b")) {
    const auto b = root.at("b2b");
    s.b2b.cable_attenuation_db = b.number_or("cable_attenuation_db", s.b2b.cable_attenuation_db);
    s.b2b.snr_db = b.number_or("snr_db", s.b2b.snr_db);
  }

  if (root.has("processing")) {
    const auto p = root.at("processing");
    auto& pc = s.processing;
    pc.alpha = p.number_or("alpha", pc.alpha);
    pc.dd_exports = static_cast<int>(p.integer_or("dd_exports", pc.dd_exports));
    if (p.has("cfar")) {
      const auto c = p.at("cfar");
      if (c.has("guard")) {
        pc.cfar.guard_delay = static_cast<int>(c.at("guard").item(0).integer());
        pc.cfar.guard_doppler = static_cast<int>(c.at("guard").item(1).integer());
      }
      if (c.has("train")) {
        pc.cfar.train_delay = static_cast<int>(c.at("train").item(0).integer());
        pc.cfar.train_doppler = static_cast<int>(c.at("train").item(1).integer());
      }
      pc.cfar.pfa = c.number_or("pfa", pc.cfar.pfa);
    }
    if (p.has("screen")) {
      const auto c = p.at("screen");
      pc.screen.dynamic_range_db = c.number_or("dynamic_range_db", pc.screen.dynamic_range_db);
      pc.screen.ghost_ratio = c.number_or("ghost_ratio", pc.screen.ghost_ratio);
    }
    if (p.has("map")) pc.map.delay_window = p.at("map").boolean_or("delay_window", pc.map.delay_window);
    if (p.has("drift")) {
      const auto d = p.at("drift");
      pc.drift.median_window = static_cast<int>(d.integer_or("median_window", pc.drift.median_window));
      pc.drift.mean_window = static_cast<int>(d.integer_or("mean_window", pc.drift.mean_window));
      pc.drift.search_halfwidth_s = d.number_or("search_halfwidth_s", pc.drift.search_halfwidth_s);
      pc.drift.min_peak_db = d.number_or("min_peak_db", pc.drift.min_peak_db);
      pc.drift.remove_phase = d.boolean_or("remove_phase", pc.drift.remove_phase);
    }
    if (p.has("tracker")) {
      const auto t = p.at("tracker");
      auto& tc = pc.tracker;
      tc.q_doppler = t.number_or("q_doppler", tc.q_doppler);
      tc.gate_chi2 = t.number_or("gate_chi2", tc.gate_chi2);
      tc.confirm_m = static_cast<int>(t.integer_or("confirm_m", tc.confirm_m));
      tc.confirm_n = static_cast<int>(t.integer_or("confirm_n", tc.confirm_n));
      tc.max_coast = static_cast<int>(t.integer_or("max_coast", tc.max_coast));
      tc.crlb_factor = t.number_or("crlb_factor", tc.crlb_factor);
      tc.min_sigma_bins = t.number_or("min_sigma_bins", tc.min_sigma_bins);
    }
    if (p.has("localizer")) {
      const auto l = p.at("localizer");
      auto& lc = pc.localizer;
      lc.max_iterations = static_cast<int>(l.integer_or("max_iterations", lc.max_iterations));
      lc.grid_step_m = l.number_or("grid_step_m", lc.grid_step_m);
      if (l.has("bounds_min")) lc.bounds_min = l.at("bounds_min").vec3();
      if (l.has("bounds_max")) lc.bounds_max = l.at("bounds_max").vec3();
      lc.altitude_prior = l.boolean_or("altitude_prior", lc.altitude_prior);
      lc.altitude_min_m = l.number_or("altitude_min_m", lc.altitude_min_m);
      lc.altitude_max_m = l.number_or("altitude_max_m", lc.altitude_max_m);
      lc.altitude_sigma_m = l.number_or("altitude_sigma_m", lc.altitude_sigma_m);
    }
  }
  s.processing.tracker.f_c = s.signal.f_c;
  s.processing.tracker.delay_bin = 1.0 / s.signal.bandwidth;
  s.processing.tracker.doppler_bin = 1.0 / (s.signal.n_symbols_per_cpi * s.signal.t_symbol);

  validate(s);
  return s;
}

json scenario_to_json(const Scenario& s) {
  json j;
  j["schema_version"] = s.schema_version;
  j["name"] = s.name;
  j["seed"] = s.seed;
  j["position_noise_m"] = s.position_noise_m;
  j["signal"] = {{"fc_hz", s.signal.f_c},
                 {"bandwidth_hz", s.signal.bandwidth},
                 {"n_subcarriers", s.signal.n_subcarriers},
                 {"t_symbol_s", s.signal.t_symbol},
                 {"n_symbols_per_cpi", s.signal.n_symbols_per_cpi},
                 {"n_cpi", s.signal.n_cpi}};
  j["clocks"] = json::array();
  for (const auto& c : s.clocks)
    j["clocks"].push_back({{"id", c.id},
                           {"initial_time_offset_s", c.initial_time_offset_s},
                           {"initial_ffo", c.initial_ffo},
                           {"ffo_random_walk_psd", c.ffo_random_walk_psd},
                           {"seed", c.seed}});
  j["nodes"] = json::array();
  for (const auto& n : s.nodes) {
    json o = {{"id", n.id}, {"role", n.role == NodeRole::Tx ? "tx" : "rx"}, {"clock", n.clock_id}, {"hw_seed", n.hw_seed}};
    if (n.role == NodeRole::Tx)
      o["eirp_dbm"] = n.eirp_dbm;
    else {
      o["noise_floor_dbm_hz"] = n.noise_floor_dbm_hz;
      o["los_attenuation_db"] = n.los_attenuation_db;
    }
    if (n.antenna.kind == AntennaKind::Omni)
      o["antenna"] = {{"kind", "omni"}};
    else
      o["antenna"] = {{"kind", "directional"}, {"boresight", vec_json(n.antenna.boresight)}, {"beamwidth_10db_deg", n.antenna.beamwidth_10db_deg}};
    trajectory_to_json(n.trajectory, o);
    j["nodes"].push_back(o);
  }
  j["targets"] = json::array();
  for (const auto& t : s.targets) {
    json o = {{"id", t.id}, {"rcs_dbsm", t.rcs_dbsm}};
    trajectory_to_json(t.trajectory, o);
    j["targets"].push_back(o);
  }
  j["clutter"] = json::array();
  for (const auto& c : s.clutter)
    j["clutter"].push_back({{"rx", c.rx_id}, {"delay_s", c.delay_s}, {"gain_db", c.gain_db}, {"phase_rad", c.phase_rad}});
  j["schedule"] = json::array();
  for (const auto& w : s.schedule) j["schedule"].push_back({{"tx", w.tx_id}, {"start_s", w.start_s}});
  j["b2b"] = {{"cable_attenuation_db", s.b2b.cable_attenuation_db}, {"snr_db", s.b2b.snr_db}};
  const auto& p = s.processing;
  j["processing"] = {
      {"alpha", p.alpha},
      {"dd_exports", p.dd_exports},
      {"cfar", {{"guard", {p.cfar.guard_delay, p.cfar.guard_doppler}}, {"train", {p.cfar.train_delay, p.cfar.train_doppler}}, {"pfa", p.cfar.pfa}}},
      {"screen", {{"dynamic_range_db", p.screen.dynamic_range_db}, {"ghost_ratio", p.screen.ghost_ratio}}},
      {"map", {{"delay_window", p.map.delay_window}}},
      {"drift",
       {{"median_window", p.drift.median_window},
        {"mean_window", p.drift.mean_window},
        {"search_halfwidth_s", p.drift.search_halfwidth_s},
        {"min_peak_db", p.drift.min_peak_db},
        {"remove_phase", p.drift.remove_phase}}},
      {"tracker",
       {{"q_doppler", p.tracker.q_doppler},
        {"gate_chi2", p.tracker.gate_chi2},
        {"confirm_m", p.tracker.confirm_m},
        {"confirm_n", p.tracker.confirm_n},
        {"max_coast", p.tracker.max_coast},
        {"crlb_factor", p.tracker.crlb_factor},
        {"min_sigma_bins", p.tracker.min_sigma_bins}}},
      {"localizer",
       {{"max_iterations", p.localizer.max_iterations},
        {"grid_step_m", p.localizer.grid_step_m},
        {"bounds_min", vec_json(p.localizer.bounds_min)},
        {"bounds_max", vec_json(p.localizer.bounds_max)},
        {"altitude_prior", p.localizer.altitude_prior},
        {"altitude_min_m", p.localizer.altitude_min_m},
        {"altitude_max_m", p.localizer.altitude_max_m},
        {"altitude_sigma_m", p.localizer.altitude_sigma_m}}}};
  return j;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open scenario file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Validation, path.string() + ": " + e.what());
  }
  return scenario_from_json(j);
}

Scenario demo_scenario() {
  Scenario s;
  s.name = "demo-vtol-pass";
  s.seed = 7;
  s.signal = make_signal_config(1280, 16e-6, 3.75e9, 256, 1);

  s.clocks = {
      {"clk_roof", 12e-9, 0.6e-9, 1e-22, 11},
      {"clk_ground", -15e-9, -0.8e-9, 1e-22, 12},
      {"clk_uav1", 18e-9, 0.9e-9, 1e-22, 13},
      {"clk_uav2", -7e-9, -0.4e-9, 1e-22, 14},
      {"clk_uav3", 4e-9, 1.0e-9, 1e-22, 15},
  };

  const Vec3 area_center(50.0, 50.0, 15.0);
  auto directional = [&](const Vec3& from) {
    AntennaPattern a;
    a.kind = AntennaKind::Directional;
    a.boresight = (area_center - from).normalized();
    a.beamwidth_10db_deg = 40.0;
    return a;
  };

  Node tx;
  tx.id = "tx_roof";
  tx.role = NodeRole::Tx;
  tx.trajectory = Trajectory::stationary(tx.id, Vec3(0.0, 0.0, 8.0));
  tx.antenna = directional(Vec3(0.0, 0.0, 8.0));
  tx.eirp_dbm = 46.0;
  tx.clock_id = "clk_roof";
  tx.hw_seed = 101;
  s.nodes.push_back(tx);

  struct RxSpec {
    const char* id;
    Vec3 pos;
    const char* clock;
    double los_att;
  };
  const RxSpec rx_specs[] = {
      {"rx_ground", Vec3(60.0, -5.0, 2.0), "clk_ground", 20.0},
      {"rx_uav1", Vec3(-30.0, 60.0, 35.0), "clk_uav1", 0.0},
      {"rx_uav2", Vec3(130.0, 40.0, 40.0), "clk_uav2", 0.0},
      {"rx_uav3", Vec3(50.0, 20.0, 45.0), "clk_uav3", 0.0},
  };
  std::uint64_t hw = 201;
  for (const auto& r : rx_specs) {
    Node n;
    n.id = r.id;
    n.role = NodeRole::Rx;
    n.trajectory = Trajectory::stationary(n.id, r.pos);
    n.noise_floor_dbm_hz = -168.0;
    n.los_attenuation_db = r.los_att;
    n.clock_id = r.clock;
    n.hw_seed = hw++;
    s.nodes.push_back(n);
  }

  Target vtol;
  vtol.id = "vtol";
  vtol.rcs_dbsm = -3.0;
  vtol.trajectory = Trajectory("vtol", {{0.0, Vec3(0.0, 50.0, 20.0)}, {10.0, Vec3(100.0, 50.0, 20.0)}});
  s.targets.push_back(vtol);

  // Static scatterers near each receiver's LoS delay.
  const Vec3 p_tx = tx.trajectory.samples().front().pos;
  double phase = 0.3;
  for (const auto& r : rx_specs) {
    const double los = los_delay(p_tx, r.pos);
    s.clutter.push_back({r.id, los + 45e-9, -12.0, phase});
    s.clutter.push_back({r.id, los + 160e-9, -20.0, phase + 1.9});
    phase += 0.7;
  }

  for (int i = 0; i < 40; ++i) s.schedule.push_back({"tx_roof", 0.1 + 0.245 * i});
  s.processing.tracker.f_c = s.signal.f_c;
  s.processing.tracker.delay_bin = s.signal.delay_bin();
  s.processing.tracker.doppler_bin = s.signal.doppler_bin();
  s.processing.localizer.bounds_min = Vec3(-40.0, -20.0, 0.0);
  s.processing.localizer.bounds_max = Vec3(140.0, 120.0, 60.0);
  validate(s);
  return s;
}

}  // namespace isac
