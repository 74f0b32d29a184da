#ifndef FOLEY_H
#define FOLEY_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FoleyStatus {
  FOLEY_STATUS_OK = 0,
  FOLEY_STATUS_NULL_POINTER = 1,
  FOLEY_STATUS_INVALID_ARGUMENT = 2,
  FOLEY_STATUS_IO = 3,
  FOLEY_STATUS_FORMAT = 4,
  FOLEY_STATUS_UNSUPPORTED = 5,
  FOLEY_STATUS_ESTIMATION = 6,
  FOLEY_STATUS_AGENT = 7,
  FOLEY_STATUS_JSON = 8,
  FOLEY_STATUS_PANIC = 9,
} FoleyStatus;

typedef enum FoleyEncoding {
  FOLEY_ENCODING_PCM16 = 0,
  FOLEY_ENCODING_FLOAT32 = 1,
} FoleyEncoding;

// Opaque audio clip.
typedef struct FoleyClip FoleyClip;

// Opaque per-frame trajectory.
typedef struct FoleyTrajectory FoleyTrajectory;

// Room used by `foley_render_event`.
typedef struct FoleyRoom {
  double rt60_s;
  double wet_ratio;
  double interaural_m;
} FoleyRoom;

typedef struct FoleySpan {
  double start_s;
  double end_s;
} FoleySpan;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. The pointer
// stays valid until the next `foley_*` call on the same thread.
const char *foley_last_error(void);

const char *foley_version(void);

enum FoleyStatus foley_clip_new(uint32_t sample_rate,
                                uintptr_t channels,
                                const float *samples,
                                uintptr_t len,
                                struct FoleyClip **out_clip);

enum FoleyStatus foley_clip_load(const char *path, struct FoleyClip **out_clip);

enum FoleyStatus foley_clip_save(const struct FoleyClip *clip,
                                 const char *path,
                                 enum FoleyEncoding encoding);

void foley_clip_free(struct FoleyClip *clip);

// 0 for a null handle.
uint32_t foley_clip_sample_rate(const struct FoleyClip *clip);

uintptr_t foley_clip_channels(const struct FoleyClip *clip);

uintptr_t foley_clip_frames(const struct FoleyClip *clip);

// Copies up to `capacity` interleaved samples into `buf` and reports the
// total sample count in `out_len`. Pass a null `buf` to query the length.
enum FoleyStatus foley_clip_copy_samples(const struct FoleyClip *clip,
                                         float *buf,
                                         uintptr_t capacity,
                                         uintptr_t *out_len);

// Interaural time difference in seconds; positive when the left ear is
// delayed.
double foley_itd_of(double azimuth_deg, double interaural_m);

enum FoleyStatus foley_pan_gains(double azimuth_deg,
                                 double depth_m,
                                 double d_ref,
                                 double *out_left,
                                 double *out_right);

enum FoleyStatus foley_azimuth_from_cue(double box_center_x,
                                        double frame_width,
                                        double frame_height,
                                        double depth_m,
                                        double ppm,
                                        double *out_azimuth_deg);

enum FoleyStatus foley_trajectory_constant(double fps,
                                           uintptr_t frames,
                                           double azimuth_deg,
                                           double depth_m,
                                           struct FoleyTrajectory **out_traj);

enum FoleyStatus foley_trajectory_linear(double fps,
                                         uintptr_t frames,
                                         double start_azimuth_deg,
                                         double start_depth_m,
                                         double end_azimuth_deg,
                                         double end_depth_m,
                                         struct FoleyTrajectory **out_traj);

void foley_trajectory_free(struct FoleyTrajectory *traj);

// Renders a mono clip to stereo along `traj`. A null `room` renders dry.
enum FoleyStatus foley_render_event(const struct FoleyClip *mono,
                                    const struct FoleyTrajectory *traj,
                                    const struct FoleyRoom *room,
                                    struct FoleyClip **out_clip);

enum FoleyStatus foley_upmix_51(const struct FoleyClip *stereo, struct FoleyClip **out_clip);

enum FoleyStatus foley_lfe(const struct FoleyClip *stereo, struct FoleyClip **out_clip);

// Integrated loudness in LUFS; negative infinity for silence.
enum FoleyStatus foley_loudness(const struct FoleyClip *clip, double *out_lufs);

enum FoleyStatus foley_rt60(const struct FoleyClip *clip, double *out_rt60_s);

enum FoleyStatus foley_gcc_phat_azimuth(const struct FoleyClip *stereo,
                                        double interaural_m,
                                        double *out_azimuth_deg);

enum FoleyStatus foley_temporal_iou(const struct FoleySpan *pred,
                                    uintptr_t pred_len,
                                    const struct FoleySpan *truth,
                                    uintptr_t truth_len,
                                    double *out_iou);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FOLEY_H */
