#include <stdio.h>
#include <stdlib.h>
#include "qcycle.h"

int main(void) {
    QcParams *p = NULL;
    if (qc_params_new(&p) != QC_STATUS_OK) return 1;
    qc_params_set(p, "mu", "0.8");

    QcSimulation *sim = NULL;
    if (qc_simulation_new(p, 4, &sim) != QC_STATUS_OK) {
        fprintf(stderr, "%s\n", qc_last_error());
        return 1;
    }
    size_t width = qc_record_width(), cycles = 5;
    double *rows = malloc((cycles + 1) * width * sizeof(double));
    if (qc_simulation_run(sim, "1,e,0", cycles, rows, (cycles + 1) * width) != QC_STATUS_OK) {
        fprintf(stderr, "%s\n", qc_last_error());
        return 1;
    }
    for (size_t k = 0; k <= cycles; k++) {
        for (size_t j = 0; j < width; j++) printf(j ? ",%.6f" : "%.0f", rows[k * width + j]);
        printf("\n");
    }
    free(rows);
    qc_simulation_free(sim);
    qc_params_free(p);
    return 0;
}
