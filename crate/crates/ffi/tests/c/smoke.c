#include <stdio.h>
#include <string.h>
#include "physdec.h"

int main(void) {
    PhysdecSystem *sys = NULL;
    if (physdec_system_preset("hamming_ml", &sys) != PHYSDEC_STATUS_OK) {
        fprintf(stderr, "preset: %s\n", physdec_last_error_message());
        return 1;
    }
    size_t n = 0, m = 0;
    int complex_samples = -1;
    physdec_system_dims(sys, &n, &m, &complex_samples);
    if (n != 7 || complex_samples != 0) return 2;

    double word[7] = {1, 1, 1, -1, -1, -1, -1};
    double y[512];
    double est[7];
    if (m > 512) return 3;
    if (physdec_system_transmit(sys, word, n, 0.05, 4, y, NULL, m) != PHYSDEC_STATUS_OK) return 4;
    if (physdec_system_decode(sys, PHYSDEC_DECODER_ML, y, NULL, m, 0, est, n) != PHYSDEC_STATUS_OK) return 5;
    if (memcmp(est, word, sizeof word) != 0) return 6;

    PhysdecCode *code = NULL;
    if (physdec_code_builtin("bogus", &code) != PHYSDEC_STATUS_CODE) return 7;
    if (physdec_last_error_message() == NULL) return 8;
    physdec_system_free(sys);
    printf("ok %s\n", physdec_version());
    return 0;
}
