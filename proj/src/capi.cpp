// SPDX-License-Identifier: Apache-2.0
#include "isac/isac.h"

#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "isac/capture_io.hpp"
#include "isac/error.hpp"
#include "isac/pipeline.hpp"
#include "isac/scenario.hpp"

struct isac_scenario {
  isac::Scenario value;
};

struct isac_capture {
  isac::Capture value;
};

namespace {

thread_local std::string g_last_error;

isac_status code_of(isac::ErrorKind k) {
  switch (k) {
    case isac::ErrorKind::Validation:
      return ISAC_ERR_VALIDATION;
    case isac::ErrorKind::Data:
      return ISAC_ERR_DATA;
    case isac::ErrorKind::Range:
      return ISAC_ERR_RANGE;
    case isac::ErrorKind::Degenerate:
      return ISAC_ERR_DEGENERATE;
    case isac::ErrorKind::Io:
      return ISAC_ERR_IO;
  }
  return ISAC_ERR_INTERNAL;
}

template <class F>
isac_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return ISAC_OK;
  } catch (const isac::Error& e) {
    g_last_error = e.what();
    return code_of(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return ISAC_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return ISAC_ERR_INTERNAL;
  }
}

isac_status null_arg(const char* name) {
  g_last_error = std::string("null argument: ") + name;
  return ISAC_ERR_VALIDATION;
}

}  // namespace

extern "C" {

const char* isac_last_error(void) { return g_last_error.c_str(); }

const char* isac_version(void) { return "1.0.0"; }

isac_status isac_scenario_load(const char* path, isac_scenario** out) {
  if (!path) return null_arg("path");
  if (!out) return null_arg("out");
  return guarded([&] { *out = new isac_scenario{isac::load_scenario(path)}; });
}

isac_status isac_scenario_demo(isac_scenario** out) {
  if (!out) return null_arg("out");
  return guarded([&] { *out = new isac_scenario{isac::demo_scenario()}; });
}

isac_status isac_scenario_save(const isac_scenario* s, const char* path) {
  if (!s) return null_arg("scenario");
  if (!path) return null_arg("path");
  return guarded([&] { isac::write_file_atomic(path, isac::scenario_to_json(s->value).dump(2) + "\n"); });
}

isac_status isac_scenario_set_seed(isac_scenario* s, uint64_t seed) {
  if (!s) return null_arg("scenario");
  s->value.seed = seed;
  g_last_error.clear();
  return ISAC_OK;
}

void isac_scenario_free(isac_scenario* s) { delete s; }

isac_status isac_simulate(const isac_scenario* s, const char* out_dir, isac_simulate_summary* summary) {
  if (!s) return null_arg("scenario");
  if (!out_dir) return null_arg("out_dir");
  return guarded([&] {
    const auto r = isac::run_simulate(s->value, out_dir);
    if (summary) *summary = {r.captures, r.b2b, r.telemetry_records};
  });
}

isac_status isac_process(const char* captures_dir, const char* out_dir, const isac_process_options* options,
                         isac_process_summary* summary) {
  if (!captures_dir) return null_arg("captures_dir");
  if (!out_dir) return null_arg("out_dir");
  return guarded([&] {
    isac::ProcessOptions opt;
    if (options) {
      if (options->cpi != 0) opt.cpi = options->cpi;
      if (options->has_alpha) opt.alpha = options->alpha;
      if (options->has_pfa) opt.pfa = options->pfa;
    }
    const auto r = isac::run_process(captures_dir, out_dir, opt);
    if (summary) *summary = {r.streams, r.captures, r.detections, r.confirmed_tracks};
  });
}

isac_status isac_localize(const char* tracks_dir, const isac_scenario* s, const char* out_dir,
                          isac_localize_summary* summary) {
  if (!tracks_dir) return null_arg("tracks_dir");
  if (!s) return null_arg("scenario");
  if (!out_dir) return null_arg("out_dir");
  return guarded([&] {
    const auto r = isac::run_localize(tracks_dir, s->value, out_dir);
    if (summary) {
      summary->cpis = r.cpis;
      summary->fixes = r.fixes;
      summary->gaps = r.gaps;
      summary->has_truth = r.rmse_m.has_value();
      summary->rmse_m = r.rmse_m.value_or(0.0);
      summary->ce90_m = r.ce90_m.value_or(0.0);
    }
  });
}

isac_status isac_report(const char* out_dir, isac_report_summary* summary) {
  if (!out_dir) return null_arg("out_dir");
  return guarded([&] {
    const auto r = isac::run_report(out_dir);
    if (summary) *summary = {r.sections, r.warnings};
  });
}

isac_status isac_capture_open(const char* sidecar_path, isac_capture** out) {
  if (!sidecar_path) return null_arg("sidecar_path");
  if (!out) return null_arg("out");
  return guarded([&] { *out = new isac_capture{isac::read_capture(sidecar_path)}; });
}

isac_status isac_capture_dims(const isac_capture* c, int* n_subcarriers, int* n_symbols) {
  if (!c) return null_arg("capture");
  if (n_subcarriers) *n_subcarriers = c->value.n_subcarriers();
  if (n_symbols) *n_symbols = c->value.n_symbols();
  g_last_error.clear();
  return ISAC_OK;
}

isac_status isac_capture_copy(const isac_capture* c, float* dst, size_t n_floats) {
  if (!c) return null_arg("capture");
  if (!dst) return null_arg("dst");
  if (n_floats != c->value.data.size() * 2) {
    g_last_error = "isac_capture_copy: buffer must hold exactly 2 * n_subcarriers * n_symbols floats";
    return ISAC_ERR_VALIDATION;
  }
  std::memcpy(dst, c->value.data.data(), n_floats * sizeof(float));
  g_last_error.clear();
  return ISAC_OK;
}

void isac_capture_free(isac_capture* c) { delete c; }

}  // extern "C"
