// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "isac/capture.hpp"

namespace isac {

inline constexpr int kCaptureSchemaVersion = 1;

/// Payload bytes: little-endian float32 (re, im) pairs in symbol-major order.
std::string encode_payload(std::span<const cfloat> data);
std::vector<cfloat> decode_payload(std::string_view bytes);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);

nlohmann::json signal_to_json(const SignalConfig& cfg);
SignalConfig signal_from_json(const nlohmann::json& j);
nlohmann::json trajectory_json(const Trajectory& t);
Trajectory trajectory_from_json(const nlohmann::json& j, const std::string& name);

/// Metadata sidecar for a capture whose payload hashes to `payload_sha256`.
nlohmann::json capture_metadata(const Capture& cap, const std::string& payload_file, const std::string& payload_sha256);

/// Writes <dir>/<stem>.bin and <dir>/<stem>.json atomically. Returns the payload hash.
std::string write_capture(const Capture& cap, const std::filesystem::path& dir, const std::string& stem);

/// Reads a capture from its sidecar path. Throws Data on a length or hash mismatch.
Capture read_capture(const std::filesystem::path& sidecar);

/// Write to a temporary sibling then rename over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace isac
