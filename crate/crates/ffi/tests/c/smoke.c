/* Copyright 2026 The spinboson-rwa Contributors
 * SPDX-License-Identifier: Apache-2.0 */

#include <math.h>
#include <stdio.h>
#include <stdlib.h>

#include "spinboson_rwa.h"

static int fail(const char *what) {
    char msg[512];
    sb_last_error(msg, sizeof msg);
    fprintf(stderr, "%s: %s\n", what, msg);
    return 1;
}

int main(void) {
    SbSpectralDensity j = {SB_FAMILY_SINGLE_MODE, 1.0, 0.1, 0.0, SB_CUTOFF_EXPONENTIAL};
    SbSurvival *s = NULL;
    if (sb_survival_solve(&j, 1.0, 20.0, 4000, &s) != SB_STATUS_OK) return fail("solve");
    size_t n = sb_survival_len(s);
    double *t = malloc(n * sizeof *t), *re = malloc(n * sizeof *re);
    if (sb_survival_copy(s, t, re, NULL, NULL, n) != SB_STATUS_OK) return fail("copy");
    double err = 0.0;
    for (size_t i = 0; i < n; i++) {
        double d = fabs(re[i] - cos(0.1 * t[i]));
        if (d > err) err = d;
    }
    sb_survival_free(s);
    free(t);
    free(re);
    if (err > 1e-6) {
        fprintf(stderr, "max |Re U - cos(gt)| = %g\n", err);
        return 1;
    }

    SbScenario *sc = NULL;
    if (sb_scenario_from_toml("name = \"bad\"", &sc) != SB_STATUS_CONFIG) return fail("expected config error");
    if (sb_scenario_from_preset("uncoupled", &sc) != SB_STATUS_OK) return fail("preset");
    SbRun *run = NULL;
    if (sb_run(sc, 2, &run) != SB_STATUS_OK) return fail("run");
    size_t rows = 0, cols = 0;
    if (sb_run_table_shape(run, "coefficients", &rows, &cols) != SB_STATUS_OK) return fail("shape");
    double *data = malloc(rows * cols * sizeof *data);
    if (sb_run_table_copy(run, "coefficients", data, rows * cols) != SB_STATUS_OK) return fail("table");
    for (size_t i = 0; i < rows; i++) {
        if (fabs(data[i * cols + 1] - 1.0) > 1e-12 || fabs(data[i * cols + 2] - 1.0) > 1e-12) {
            fprintf(stderr, "alpha/xi != 1 at row %zu\n", i);
            return 1;
        }
    }
    free(data);
    sb_run_free(run);
    sb_scenario_free(sc);
    printf("ok %s\n", sb_version());
    return 0;
}
