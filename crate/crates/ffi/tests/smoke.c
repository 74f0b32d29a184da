#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include "foley.h"

#define CHECK(expr)                                                        \
    do {                                                                   \
        if ((expr) != FOLEY_STATUS_OK) {                                   \
            fprintf(stderr, "%s failed: %s\n", #expr, foley_last_error()); \
            return 1;                                                      \
        }                                                                  \
    } while (0)

int main(void) {
    enum { FS = 48000, N = 48000 };
    float *mono = malloc(sizeof(float) * N);
    unsigned s = 1;
    for (int i = 0; i < N; i++) {
        s = s * 1103515245u + 12345u;
        mono[i] = ((float)((s >> 8) & 0xffff) / 65535.0f - 0.5f);
    }
    FoleyClip *clip = NULL, *stereo = NULL, *surround = NULL;
    FoleyTrajectory *traj = NULL;
    CHECK(foley_clip_new(FS, 1, mono, N, &clip));
    CHECK(foley_trajectory_constant(25.0, 25, 135.0, 1.0, &traj));
    CHECK(foley_render_event(clip, traj, NULL, &stereo));
    double az = 0.0;
    CHECK(foley_gcc_phat_azimuth(stereo, 0.17, &az));
    if (fabs(az - 135.0) > 5.0) {
        fprintf(stderr, "azimuth %f\n", az);
        return 1;
    }
    CHECK(foley_upmix_51(stereo, &surround));
    if (foley_clip_channels(surround) != 6) return 1;
    if (foley_clip_load("/nonexistent/x.wav", &clip) != FOLEY_STATUS_IO) return 1;
    if (foley_last_error() == NULL) return 1;
    foley_clip_free(clip);
    foley_clip_free(stereo);
    foley_clip_free(surround);
    foley_trajectory_free(traj);
    free(mono);
    printf("ok %s\n", foley_version());
    return 0;
}
