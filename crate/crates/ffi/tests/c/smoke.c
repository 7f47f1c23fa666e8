#include <math.h>
#include <stdio.h>
#include "amalgam.h"

#define CHECK(cond) do { if (!(cond)) { fprintf(stderr, "failed: %s (%s)\n", #cond, amalgam_last_error() ? amalgam_last_error() : ""); return 1; } } while (0)

int main(void) {
    AmalgamMeasure *m = NULL;
    AmalgamFunction *f = NULL;
    AmalgamKernel *k = NULL;
    double v = 0.0;

    CHECK(amalgam_measure_parse("power:0.5", &m) == AMALGAM_STATUS_OK);
    CHECK(amalgam_function_indicator(0.0, 1.0, &f) == AMALGAM_STATUS_OK);

    CHECK(amalgam_measure_mass(m, 0.0, 1.0, &v) == AMALGAM_STATUS_OK);
    CHECK(fabs(v - 2.0) < 1e-9);

    CHECK(amalgam_lq_norm(m, f, INFINITY, &v) == AMALGAM_STATUS_OK);
    CHECK(v == 1.0);

    CHECK(amalgam_kernel_riesz(0.5, &k) == AMALGAM_STATUS_OK);
    CHECK(amalgam_potential(m, f, k, 2.0, 1e-10, &v) == AMALGAM_STATUS_OK);
    CHECK(v > 0.0 && isfinite(v));

    CHECK(amalgam_measure_power(2.0, &m) == AMALGAM_STATUS_INVALID_MEASURE);

    amalgam_kernel_free(k);
    amalgam_function_free(f);
    amalgam_measure_free(m);
    printf("ok %s\n", amalgam_version());
    return 0;
}
