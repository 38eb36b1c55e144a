#ifndef LOCO_H
#define LOCO_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LocoStatus {
  LOCO_STATUS_OK = 0,
  LOCO_STATUS_NULL_POINTER = 1,
  LOCO_STATUS_INVALID_UTF8 = 2,
  LOCO_STATUS_PARSE_ERROR = 3,
  LOCO_STATUS_LENGTH_MISMATCH = 4,
  LOCO_STATUS_BUFFER_TOO_SMALL = 5,
  LOCO_STATUS_NUMERIC_ERROR = 6,
  LOCO_STATUS_INVALID_ARGUMENT = 7,
  LOCO_STATUS_PANIC = 8,
} LocoStatus;

// Parsed robot body.
typedef struct LocoMorphology LocoMorphology;

// CPG controller network compiled from a morphology.
typedef struct LocoNetwork LocoNetwork;

typedef struct LocoEvalConfig {
  double duration;
  double tick_rate;
  size_t sample_count;
  double k_v;
  double k_w;
} LocoEvalConfig;

typedef struct LocoFitnessParams {
  double omega;
  double epsilon;
} LocoFitnessParams;

// Fitness breakdown; angles in radians, speed in metres per minute.
typedef struct LocoFitness {
  double beta1;
  double delta;
  double distance_d;
  double penalty_p;
  double path_length_l;
  double fitness_naive;
  double fitness;
  double speed;
} LocoFitness;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Null-terminated library version. The pointer is static.
const char *loco_version(void);

// Copy the calling thread's last error message into `buf` (truncated and
// always null-terminated when `len > 0`). Returns the message length in
// bytes, excluding the terminator.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t loco_last_error_message(char *buf, size_t len);

struct LocoEvalConfig loco_eval_config_default(void);

struct LocoFitnessParams loco_fitness_params_default(void);

// Parse a morphology description. On success `*out` receives a handle
// owned by the caller.
//
// # Safety
// `text` must be a null-terminated string; `out` must be writable.
enum LocoStatus loco_morphology_parse(const char *text, struct LocoMorphology **out);

// # Safety
// `m` must be null or a handle from [`loco_morphology_parse`] not yet freed.
void loco_morphology_free(struct LocoMorphology *m);

// # Safety
// `m` must be a live morphology handle; `out` must be writable.
enum LocoStatus loco_morphology_joint_count(const struct LocoMorphology *m, size_t *out);

// Compile the CPG network of a morphology. On success `*out` receives a
// handle owned by the caller.
//
// # Safety
// `m` must be a live morphology handle; `out` must be writable.
enum LocoStatus loco_network_build(const struct LocoMorphology *m, struct LocoNetwork **out);

// # Safety
// `n` must be null or a handle from [`loco_network_build`] not yet freed.
void loco_network_free(struct LocoNetwork *n);

// # Safety
// `n` must be a live network handle; `out` must be writable.
enum LocoStatus loco_network_parameter_count(const struct LocoNetwork *n, size_t *out);

// Write the 6-D coordinate of every weight, in canonical order, as
// `parameter_count × 6` row-major doubles.
//
// # Safety
// `n` must be a live network handle; `out` must point to `len` doubles.
enum LocoStatus loco_network_weight_coordinates(const struct LocoNetwork *n,
                                                double *out,
                                                size_t len);

// Reset the network, load `weights` and step it `ticks` times, writing
// `ticks × joint_count` row-major outputs.
//
// # Safety
// `n` must be a live network handle not used concurrently; `weights` must
// point to `n_weights` doubles and `outputs` to `outputs_len` doubles.
enum LocoStatus loco_network_run(struct LocoNetwork *n,
                                 const double *weights,
                                 size_t n_weights,
                                 size_t ticks,
                                 double *outputs,
                                 size_t outputs_len);

// Evaluate `weights` in the planar surrogate environment and write the
// sampled trajectory as `sample_count × 3` row-major `(t, x, y)` values.
// `cfg` may be null for defaults.
//
// # Safety
// `n` must be a live network handle; `cfg` null or readable; `weights`
// must point to `n_weights` doubles and `txy` to `txy_len` doubles.
enum LocoStatus loco_surrogate_evaluate(const struct LocoNetwork *n,
                                        const double *weights,
                                        size_t n_weights,
                                        const struct LocoEvalConfig *cfg,
                                        double *txy,
                                        size_t txy_len);

// Score a trajectory of `n_samples` row-major `(t, x, y)` triples against
// target direction `beta0` (radians). `params` may be null for defaults.
//
// # Safety
// `txy` must point to `3 × n_samples` doubles; `params` null or readable;
// `out` writable.
enum LocoStatus loco_evaluate_fitness(const double *txy,
                                      size_t n_samples,
                                      double initial_orientation,
                                      double beta0,
                                      const struct LocoFitnessParams *params,
                                      struct LocoFitness *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LOCO_H */
