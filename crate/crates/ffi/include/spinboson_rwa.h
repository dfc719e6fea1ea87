/* Copyright 2026 The spinboson-rwa Contributors
 * SPDX-License-Identifier: Apache-2.0 */

#ifndef SPINBOSON_RWA_H
#define SPINBOSON_RWA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call. The numeric values of the library error
// kinds match the exit codes of the `spinboson` binary.
typedef enum SbStatus {
  SB_STATUS_OK = 0,
  SB_STATUS_IO = 1,
  // Null pointer, invalid UTF-8, unknown name or similar misuse.
  SB_STATUS_INVALID_ARGUMENT = 2,
  SB_STATUS_CONFIG = 3,
  SB_STATUS_TRUNCATION = 4,
  SB_STATUS_SOLVER = 5,
  SB_STATUS_PANIC = 6,
  // The caller's buffer is shorter than the data.
  SB_STATUS_BUFFER_TOO_SMALL = 7,
} SbStatus;

// Spectral density family for [`SbSpectralDensity`].
typedef enum SbFamily {
  // `p0` = exponent, `p1` = scale, `p2` = cutoff, `shape` used.
  SB_FAMILY_OHMIC = 0,
  // `p0` = level, `p1` = lower edge, `p2` = upper edge.
  SB_FAMILY_FLAT_BAND = 1,
  // `p0` = frequency, `p1` = coupling, `p2` ignored.
  SB_FAMILY_SINGLE_MODE = 2,
} SbFamily;

typedef enum SbCutoff {
  SB_CUTOFF_EXPONENTIAL = 0,
  SB_CUTOFF_HARD = 1,
  SB_CUTOFF_NONE = 2,
} SbCutoff;

// The result of running a scenario.
typedef struct SbRun SbRun;

// A parsed and validated scenario.
typedef struct SbScenario SbScenario;

// A survival amplitude computed directly from a spectral density.
typedef struct SbSurvival SbSurvival;

// Plain-data description of `J(ω)`.
typedef struct SbSpectralDensity {
  enum SbFamily family;
  double p0;
  double p1;
  double p2;
  enum SbCutoff shape;
} SbSpectralDensity;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the last failure on this thread (empty after a
// success). Returns the bytes needed including the NUL.
size_t sb_last_error(char *buf, size_t capacity);

// Library version as a static NUL-terminated string.
const char *sb_version(void);

// Parses a TOML scenario and checks every precondition.
enum SbStatus sb_scenario_from_toml(const char *toml, struct SbScenario **out);

// Reads and checks a scenario file.
enum SbStatus sb_scenario_from_path(const char *path, struct SbScenario **out);

// Loads a built-in scenario by name.
enum SbStatus sb_scenario_from_preset(const char *name, struct SbScenario **out);

void sb_scenario_free(struct SbScenario *s);

// Hex SHA-256 of the scenario's computational content.
size_t sb_scenario_config_hash(const struct SbScenario *s, char *buf, size_t capacity);

// Runs the scenario on `threads` workers (0 means all cores).
enum SbStatus sb_run(const struct SbScenario *s, size_t threads, struct SbRun **out);

void sb_run_free(struct SbRun *r);

// Shape of a result table. Fails with `InvalidArgument` if the run has no
// table of that name.
enum SbStatus sb_run_table_shape(const struct SbRun *r,
                                 const char *name,
                                 size_t *rows,
                                 size_t *columns);

// Name of column `index` of a table.
size_t sb_run_table_column_name(const struct SbRun *r,
                                const char *name,
                                size_t index,
                                char *buf,
                                size_t capacity);

// Copies a table in row-major order into `data`, which must hold
// `rows * columns` doubles. Masked points are NaN.
enum SbStatus sb_run_table_copy(const struct SbRun *r, const char *name, double *data, size_t len);

// A structured report (`equilibrium`, `survival_report`) or the manifest
// (`manifest`) as JSON. Returns the bytes needed including the NUL, or 0 if
// there is no such report.
size_t sb_run_report_json(const struct SbRun *r, const char *name, char *buf, size_t capacity);

// Writes every table (`format`: 0 = CSV, 1 = JSON), report and the
// manifest into `dir`, exactly as the `spinboson run` command does.
enum SbStatus sb_run_write(const struct SbRun *r, const char *dir, uint32_t format);

// Solves for the survival amplitude `U₊(t)` of the excited qubit in the
// vacuum on `steps + 1` equally spaced times in `[0, t_max]`.
enum SbStatus sb_survival_solve(const struct SbSpectralDensity *j,
                                double omega,
                                double t_max,
                                size_t steps,
                                struct SbSurvival **out);

void sb_survival_free(struct SbSurvival *s);

// Number of time points (0 for a null handle).
size_t sb_survival_len(const struct SbSurvival *s);

// Copies times, `Re U₊`, `Im U₊` and the flip norm. Any output pointer may
// be null to skip it; the others must hold `sb_survival_len` doubles.
enum SbStatus sb_survival_copy(const struct SbSurvival *s,
                               double *times,
                               double *re,
                               double *im,
                               double *flip_norm,
                               size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPINBOSON_RWA_H */
