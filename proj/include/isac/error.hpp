// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace isac {

enum class ErrorKind {
  Validation,   // malformed input, schema or precondition violation
  Data,         // inconsistent or unusable data (bad captures, singular calibration)
  Range,        // argument outside its domain (time outside trajectory, ...)
  Degenerate,   // coincident points, singular geometry
  Io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace isac
