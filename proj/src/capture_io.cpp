// SPDX-License-Identifier: Apache-2.0
#include "isac/capture_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include "isac/error.hpp"

namespace isac {

using nlohmann::json;

namespace {

std::uint32_t to_little(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  return ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) | (v >> 24);
}

void put_float(char* dst, float f) {
  const std::uint32_t u = to_little(std::bit_cast<std::uint32_t>(f));
  std::memcpy(dst, &u, 4);
}

float get_float(const char* src) {
  std::uint32_t u;
  std::memcpy(&u, src, 4);
  return std::bit_cast<float>(to_little(u));
}

}  // namespace

std::string encode_payload(std::span<const cfloat> data) {
  std::string out(data.size() * 8, '\0');
  for (std::size_t i = 0; i < data.size(); ++i) {
    put_float(out.data() + 8 * i, data[i].real());
    put_float(out.data() + 8 * i + 4, data[i].imag());
  }
  return out;
}

std::vector<cfloat> decode_payload(std::string_view bytes) {
  if (bytes.size() % 8 != 0) fail(ErrorKind::Data, "capture payload length is not a multiple of 8 bytes");
  std::vector<cfloat> out(bytes.size() / 8);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = cfloat(get_float(bytes.data() + 8 * i), get_float(bytes.data() + 8 * i + 4));
  return out;
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    fail(ErrorKind::Io, "SHA-256 computation failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xF]);
  }
  return out;
}

json signal_to_json(const SignalConfig& cfg) {
  return {{"fc_hz", cfg.f_c},
          {"bandwidth_hz", cfg.bandwidth},
          {"n_subcarriers", cfg.n_subcarriers},
          {"t_symbol_s", cfg.t_symbol},
          {"n_symbols_per_cpi", cfg.n_symbols_per_cpi},
          {"n_cpi", cfg.n_cpi}};
}

SignalConfig signal_from_json(const json& j) {
  try {
    SignalConfig cfg;
    cfg.f_c = j.at("fc_hz").get<double>();
    cfg.bandwidth = j.at("bandwidth_hz").get<double>();
    cfg.n_subcarriers = j.at("n_subcarriers").get<int>();
    cfg.t_symbol = j.at("t_symbol_s").get<double>();
    cfg.n_symbols_per_cpi = j.at("n_symbols_per_cpi").get<int>();
    cfg.n_cpi = j.at("n_cpi").get<int>();
    cfg.validate();
    return cfg;
  } catch (const json::exception& e) {
    fail(ErrorKind::Data, std::string("capture metadata: bad signal config: ") + e.what());
  }
}

json trajectory_json(const Trajectory& t) {
  json arr = json::array();
  for (const auto& s : t.samples()) arr.push_back({s.t, s.pos.x(), s.pos.y(), s.pos.z()});
  return arr;
}

Trajectory trajectory_from_json(const json& j, const std::string& name) {
  std::vector<std::pair<double, Vec3>> pts;
  for (const auto& row : j) pts.emplace_back(row.at(0).get<double>(), Vec3(row.at(1).get<double>(), row.at(2).get<double>(), row.at(3).get<double>()));
  if (pts.empty()) return {};
  if (pts.size() == 1) return Trajectory::stationary(name, pts.front().second);
  return Trajectory(name, pts);
}

json capture_metadata(const Capture& cap, const std::string& payload_file, const std::string& payload_sha256) {
  json j;
  j["schema_version"] = kCaptureSchemaVersion;
  j["kind"] = cap.is_b2b ? "b2b" : "capture";
  j["cfg"] = signal_to_json(cap.cfg);
  j["tx_id"] = cap.tx_id;
  j["rx_id"] = cap.rx_id;
  j["start_time_s"] = cap.start_time_s;
  j["seed"] = cap.seed;
  j["n_subcarriers"] = cap.cfg.n_subcarriers;
  j["n_symbols"] = cap.n_symbols();
  j["payload"] = {{"file", payload_file},
                  {"format", "complex64-le"},
                  {"layout", "symbol-major"},
                  {"bytes", cap.data.size() * 8},
                  {"sha256", payload_sha256}};
  if (cap.is_b2b) {
    j["b2b"] = {{"cable_attenuation_db", cap.cable_attenuation_db}, {"tx_hw_seed", cap.tx_hw_seed}, {"rx_hw_seed", cap.rx_hw_seed}};
  } else {
    j["geometry"] = {{"tx", trajectory_json(cap.tx_trajectory)}, {"rx", trajectory_json(cap.rx_trajectory)}};
  }
  if (cap.truth) {
    const auto& t = *cap.truth;
    json targets = json::array();
    for (const auto& tt : t.targets) targets.push_back({{"id", tt.id}, {"delay_s", tt.delay_s}, {"doppler_hz", tt.doppler_hz}});
    j["truth"] = {{"symbol_time_s", t.symbol_time_s},
                  {"los_delay_s", t.los_delay_s},
                  {"targets", targets},
                  {"tx_time_error_s", t.tx_time_error_s},
                  {"rx_time_error_s", t.rx_time_error_s},
                  {"tx_ffo", t.tx_ffo},
                  {"rx_ffo", t.rx_ffo}};
  }
  return j;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorKind::Io, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorKind::Io, "cannot rename " + tmp.string() + ": " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string write_capture(const Capture& cap, const std::filesystem::path& dir, const std::string& stem) {
  const auto payload = encode_payload(cap.data);
  const auto hash = sha256_hex(payload);
  write_file_atomic(dir / (stem + ".bin"), payload);
  write_file_atomic(dir / (stem + ".json"), capture_metadata(cap, stem + ".bin", hash).dump(1) + "\n");
  return hash;
}

Capture read_capture(const std::filesystem::path& sidecar) {
  json j;
  try {
    j = json::parse(read_file(sidecar));
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Data, sidecar.string() + ": " + e.what());
  }
  try {
    const int version = j.at("schema_version").get<int>();
    if (version != kCaptureSchemaVersion)
      fail(ErrorKind::Data, sidecar.string() + ": unsupported schema_version " + std::to_string(version));
    Capture cap;
    cap.cfg = signal_from_json(j.at("cfg"));
    cap.tx_id = j.at("tx_id").get<std::string>();
    cap.rx_id = j.at("rx_id").get<std::string>();
    cap.start_time_s = j.at("start_time_s").get<double>();
    cap.seed = j.at("seed").get<std::uint64_t>();
    cap.is_b2b = j.at("kind").get<std::string>() == "b2b";
    const auto& pl = j.at("payload");
    const auto bytes = read_file(sidecar.parent_path() / pl.at("file").get<std::string>());
    const auto n_symbols = j.at("n_symbols").get<std::size_t>();
    const std::size_t expected = 8 * static_cast<std::size_t>(cap.cfg.n_subcarriers) * n_symbols;
    if (bytes.size() != expected) {
      std::ostringstream os;
      os << sidecar.string() << ": payload is " << bytes.size() << " bytes, expected " << expected;
      fail(ErrorKind::Data, os.str());
    }
    if (sha256_hex(bytes) != pl.at("sha256").get<std::string>())
      fail(ErrorKind::Data, sidecar.string() + ": payload hash mismatch");
    cap.data = decode_payload(bytes);
    if (cap.is_b2b) {
      const auto& b = j.at("b2b");
      cap.cable_attenuation_db = b.at("cable_attenuation_db").get<double>();
      cap.tx_hw_seed = b.at("tx_hw_seed").get<std::uint64_t>();
      cap.rx_hw_seed = b.at("rx_hw_seed").get<std::uint64_t>();
    } else if (j.contains("geometry")) {
      cap.tx_trajectory = trajectory_from_json(j["geometry"].at("tx"), cap.tx_id);
      cap.rx_trajectory = trajectory_from_json(j["geometry"].at("rx"), cap.rx_id);
    }
    if (j.contains("truth")) {
      const auto& t = j["truth"];
      CaptureTruth truth;
      truth.symbol_time_s = t.at("symbol_time_s").get<std::vector<double>>();
      truth.los_delay_s = t.at("los_delay_s").get<std::vector<double>>();
      for (const auto& tt : t.at("targets"))
        truth.targets.push_back({tt.at("id").get<std::string>(), tt.at("delay_s").get<std::vector<double>>(),
                                 tt.at("doppler_hz").get<std::vector<double>>()});
      truth.tx_time_error_s = t.at("tx_time_error_s").get<std::vector<double>>();
      truth.rx_time_error_s = t.at("rx_time_error_s").get<std::vector<double>>();
      truth.tx_ffo = t.at("tx_ffo").get<std::vector<double>>();
      truth.rx_ffo = t.at("rx_ffo").get<std::vector<double>>();
      cap.truth = std::move(truth);
    }
    return cap;
  } catch (const json::exception& e) {
    fail(ErrorKind::Data, sidecar.string() + ": malformed metadata: " + e.what());
  }
}

}  // namespace isac
