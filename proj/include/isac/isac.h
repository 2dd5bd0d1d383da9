/* SPDX-License-Identifier: Apache-2.0 */
#ifndef ISAC_ISAC_H
#define ISAC_ISAC_H

#include <stddef.h>
#include <stdint.h>

#if defined(ISAC_BUILDING_LIBRARY)
#define ISAC_API __attribute__((visibility("default")))
#else
#define ISAC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum isac_status {
  ISAC_OK = 0,
  ISAC_ERR_VALIDATION = 2,
  ISAC_ERR_DATA = 3,
  ISAC_ERR_RANGE = 4,
  ISAC_ERR_DEGENERATE = 5,
  ISAC_ERR_IO = 6,
  ISAC_ERR_INTERNAL = 7
} isac_status;

typedef struct isac_scenario isac_scenario;
typedef struct isac_capture isac_capture;

/* Message of the last failed call on this thread; empty after success. */
ISAC_API const char* isac_last_error(void);
ISAC_API const char* isac_version(void);

ISAC_API isac_status isac_scenario_load(const char* path, isac_scenario** out);
/* Built-in demonstration scenario. */
ISAC_API isac_status isac_scenario_demo(isac_scenario** out);
/* Writes the scenario as JSON. */
ISAC_API isac_status isac_scenario_save(const isac_scenario* s, const char* path);
ISAC_API isac_status isac_scenario_set_seed(isac_scenario* s, uint64_t seed);
ISAC_API void isac_scenario_free(isac_scenario* s);

typedef struct isac_simulate_summary {
  int captures;
  int b2b;
  int telemetry_records;
} isac_simulate_summary;

ISAC_API isac_status isac_simulate(const isac_scenario* s, const char* out_dir, isac_simulate_summary* summary);

/* Zero fields keep the defaults of the scenario stored with the captures. */
typedef struct isac_process_options {
  int cpi;
  double alpha;
  double pfa;
  int has_alpha;
  int has_pfa;
} isac_process_options;

typedef struct isac_process_summary {
  int streams;
  int captures;
  int detections;
  int confirmed_tracks;
} isac_process_summary;

ISAC_API isac_status isac_process(const char* captures_dir, const char* out_dir, const isac_process_options* options,
                                  isac_process_summary* summary);

typedef struct isac_localize_summary {
  int cpis;
  int fixes;
  int gaps;
  int has_truth;
  double rmse_m;
  double ce90_m;
} isac_localize_summary;

ISAC_API isac_status isac_localize(const char* tracks_dir, const isac_scenario* s, const char* out_dir,
                                   isac_localize_summary* summary);

typedef struct isac_report_summary {
  int sections;
  int warnings;
} isac_report_summary;

ISAC_API isac_status isac_report(const char* out_dir, isac_report_summary* summary);

/* Capture access: open a sidecar, query dimensions, copy interleaved
   (re, im) float samples in symbol-major order. */
ISAC_API isac_status isac_capture_open(const char* sidecar_path, isac_capture** out);
ISAC_API isac_status isac_capture_dims(const isac_capture* c, int* n_subcarriers, int* n_symbols);
ISAC_API isac_status isac_capture_copy(const isac_capture* c, float* dst, size_t n_floats);
ISAC_API void isac_capture_free(isac_capture* c);

#ifdef __cplusplus
}
#endif

#endif
