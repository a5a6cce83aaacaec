/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef PROBCOV_H
#define PROBCOV_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum ProbcovMethod {
  PROBCOV_METHOD_LABEL = 0,
  PROBCOV_METHOD_BRUTE = 1,
  PROBCOV_METHOD_MONTE_CARLO = 2,
} ProbcovMethod;

typedef enum ProbcovMergePolicy {
  PROBCOV_MERGE_POLICY_ALWAYS = 0,
  PROBCOV_MERGE_POLICY_NEVER = 1,
  PROBCOV_MERGE_POLICY_BRIDGE = 2,
} ProbcovMergePolicy;

typedef enum ProbcovStatus {
  PROBCOV_STATUS_OK = 0,
  PROBCOV_STATUS_NULL_ARGUMENT = 1,
  PROBCOV_STATUS_INVALID_UTF8 = 2,
  PROBCOV_STATUS_INVALID_ARGUMENT = 3,
  PROBCOV_STATUS_PARSE_ERROR = 4,
  PROBCOV_STATUS_INVALID_MODEL = 5,
  PROBCOV_STATUS_ILLEGAL_TRACE = 6,
  PROBCOV_STATUS_GOAL_ERROR = 7,
  PROBCOV_STATUS_PATH_CAP_EXCEEDED = 8,
  PROBCOV_STATUS_INTERNAL = 9,
} ProbcovStatus;

// An execution model, possibly expanded to windows.
typedef struct ProbcovExecModel ProbcovExecModel;

// A parsed model.
typedef struct ProbcovModel ProbcovModel;

typedef struct ProbcovOptions {
  enum ProbcovMethod method;
  enum ProbcovMergePolicy merge_policy;
  // Number of samples for Monte-Carlo estimation.
  uint64_t samples;
  uint64_t seed;
  // Enumeration refuses models with more paths than this.
  uint64_t paths_cap;
} ProbcovOptions;

typedef struct ProbcovExecStats {
  size_t nodes;
  size_t edges;
  // Saturates at `UINT64_MAX`.
  uint64_t paths;
  size_t max_depth;
  size_t word_length;
} ProbcovExecStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Labelling with the bridge merge policy, 100000 samples, seed 0 and a
// path cap of 10^7.
struct ProbcovOptions probcov_options_default(void);

// Parses a model from its text form.
//
// # Safety
// `text` must be a NUL-terminated string and `out` a valid pointer. On
// success `*out` owns a model to be released with [`probcov_model_free`].
enum ProbcovStatus probcov_model_parse(const char *text, struct ProbcovModel **out);

// # Safety
// `model` must be null or a pointer from [`probcov_model_parse`] that has not
// been freed.
void probcov_model_free(struct ProbcovModel *model);

// Checks the model's well-formedness rules. `*out_ok` is set to whether all
// rules hold; the violations are then available from
// [`probcov_last_error_message`].
//
// # Safety
// `model` must be a live handle and `out_ok` a valid pointer.
enum ProbcovStatus probcov_model_validate(const struct ProbcovModel *model, bool *out_ok);

// Probability that `trace` (space-separated actions) covers `goal` on
// `model`. `options` may be null for the defaults.
//
// # Safety
// `model` must be a live handle, `trace` and `goal` NUL-terminated strings,
// `options` null or valid, and `out_prob` a valid pointer.
enum ProbcovStatus probcov_coverage(const struct ProbcovModel *model,
                                    const char *trace,
                                    const char *goal,
                                    const struct ProbcovOptions *options,
                                    double *out_prob);

// Builds the execution model of `trace`, expanded to windows of length
// `expand_k` when it is 2 or more.
//
// # Safety
// `model` must be a live handle, `trace` a NUL-terminated string and `out` a
// valid pointer. On success `*out` must be released with
// [`probcov_exec_free`].
enum ProbcovStatus probcov_exec_build(const struct ProbcovModel *model,
                                      const char *trace,
                                      uint32_t expand_k,
                                      struct ProbcovExecModel **out);

// # Safety
// `exec` must be null or a pointer from [`probcov_exec_build`] that has not
// been freed.
void probcov_exec_free(struct ProbcovExecModel *exec);

// Number of root-to-terminal paths, saturating at `UINT64_MAX`.
//
// # Safety
// `exec` must be a live handle and `out` a valid pointer.
enum ProbcovStatus probcov_exec_path_count(const struct ProbcovExecModel *exec, uint64_t *out);

// # Safety
// `exec` must be a live handle and `out` a valid pointer.
enum ProbcovStatus probcov_exec_stats(const struct ProbcovExecModel *exec,
                                      struct ProbcovExecStats *out);

// Probability that the execution model covers `goal`. Goals with longer
// words than the model's windows expand an unexpanded model first.
//
// # Safety
// `exec` must be a live handle, `goal` a NUL-terminated string, `options`
// null or valid, and `out_prob` a valid pointer.
enum ProbcovStatus probcov_exec_coverage(const struct ProbcovExecModel *exec,
                                         const char *goal,
                                         const struct ProbcovOptions *options,
                                         double *out_prob);

// Message of the last failed call on this thread, or an empty string. The
// pointer stays valid until the next call into this library on the thread.
const char *probcov_last_error_message(void);

// Static name of a status code.
const char *probcov_status_name(enum ProbcovStatus status);

// Library version as a static string.
const char *probcov_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PROBCOV_H */
