/*
 * Copyright 2026 The exrep Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface of libexrep. All objects are opaque handles created and
 * destroyed through this header. Functions return an exrep_status; on
 * failure exrep_last_error() describes what went wrong on the calling
 * thread. Strings returned through char** are owned by the caller and must
 * be released with exrep_free_string().
 */
#ifndef EXREP_EXREP_H_
#define EXREP_EXREP_H_

#include <stddef.h>
#include <stdint.h>

#if defined(EXREP_BUILDING_LIBRARY)
#define EXREP_API __attribute__((visibility("default")))
#else
#define EXREP_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum exrep_status {
  EXREP_OK = 0,
  EXREP_ERR_INVALID_SPEC = 1,
  EXREP_ERR_INVALID_PLACEMENT = 2,
  EXREP_ERR_INVALID_INPUT = 3,
  EXREP_ERR_SHAPE_MISMATCH = 4,
  EXREP_ERR_PARSE = 5,
  EXREP_ERR_SCHEMA = 6,
  EXREP_ERR_INVALID_CONFIG = 7,
  EXREP_ERR_MISSING_POPULARITY = 8,
  EXREP_ERR_INVALID_K = 9,
  EXREP_ERR_IO = 10,
  EXREP_ERR_NULL_ARGUMENT = 11,
  EXREP_ERR_BUFFER_TOO_SMALL = 12,
  EXREP_ERR_INTERNAL = 99
} exrep_status;

typedef struct exrep_cluster exrep_cluster;
typedef struct exrep_trace exrep_trace;
typedef struct exrep_simulation exrep_simulation;

EXREP_API const char* exrep_version(void);
EXREP_API const char* exrep_status_name(exrep_status status);
/* Message of the last failed call on this thread, "" if none. */
EXREP_API const char* exrep_last_error(void);
EXREP_API void exrep_free_string(char* s);

/* ---- cluster ---------------------------------------------------------- */

typedef struct exrep_cluster_params {
  int64_t nodes;
  int64_t slots_per_rank;
  int64_t expert_classes;
  double bw_pci;  /* bytes/s */
  double bw_net;  /* bytes/s */
  int64_t grad_bytes;
  int64_t weight_bytes;
  int64_t optimizer_bytes;
  int64_t tokens_per_batch;
  double capacity_factor;
} exrep_cluster_params;

/* Fills `params` with a one-node, one-slot, one-class cluster. */
EXREP_API void exrep_cluster_params_init(exrep_cluster_params* params);

EXREP_API exrep_status exrep_cluster_create(const exrep_cluster_params* params,
                                            exrep_cluster** out);
/* Known presets: "paper-example". */
EXREP_API exrep_status exrep_cluster_preset(const char* name, exrep_cluster** out);
EXREP_API exrep_status exrep_cluster_from_json(const char* json, exrep_cluster** out);
EXREP_API exrep_status exrep_cluster_to_json(const exrep_cluster* cluster,
                                             char** out_json);
EXREP_API exrep_status exrep_cluster_get_params(const exrep_cluster* cluster,
                                                exrep_cluster_params* out);
EXREP_API void exrep_cluster_destroy(exrep_cluster* cluster);

/* ---- cost model ------------------------------------------------------- */

typedef struct exrep_cost_summary {
  int64_t mem_footprint_bytes;
  int64_t data_grad_bytes;
  int64_t data_weight_bytes;
  double t_grad_static;
  double t_weight_static;
  double t_grad_dynamic;
  double t_weight_dynamic;
  double overhead_offloaded;  /* fraction, not percent */
  double overhead_hbm_only;
  double migration_weights_s; /* one expert */
  double migration_optimizer_s;
} exrep_cost_summary;

EXREP_API exrep_status exrep_cost_summary_get(const exrep_cluster* cluster,
                                              exrep_cost_summary* out);
EXREP_API exrep_status exrep_k_partition_bound(const exrep_cluster* cluster, int64_t k,
                                               double* grad_s, double* weight_s);

typedef enum exrep_payload {
  EXREP_PAYLOAD_WEIGHTS = 0,
  EXREP_PAYLOAD_OPTIMIZER = 1,
  EXREP_PAYLOAD_BOTH = 2
} exrep_payload;

EXREP_API exrep_status exrep_migration_cost(const exrep_cluster* cluster,
                                            int64_t experts_moved,
                                            exrep_payload payload, double* out_s);

/* ---- scheduler and planner -------------------------------------------- */

/* Replica counts (length `experts`) and the slot assignment (length
 * nodes*slots_per_rank) for one popularity vector. Either output may be
 * NULL. */
EXREP_API exrep_status exrep_compute_placement(const int64_t* popularity, size_t experts,
                                               int64_t nodes, int64_t slots_per_rank,
                                               int64_t* counts_out, int32_t* slots_out,
                                               size_t slots_len);

/* Communication plan of `slots` (length nodes*slots_per_rank) as JSON. */
EXREP_API exrep_status exrep_comm_plan_json(const exrep_cluster* cluster,
                                            const int32_t* slots, size_t slots_len,
                                            char** out_json);

/* ---- traces ----------------------------------------------------------- */

typedef enum exrep_trace_mode {
  EXREP_TRACE_WALK = 0,
  EXREP_TRACE_SPIKY = 1,
  EXREP_TRACE_UNIFORM = 2
} exrep_trace_mode;

typedef struct exrep_tracegen_params {
  int64_t experts;
  int64_t iterations;
  int64_t tokens_per_batch;
  exrep_trace_mode mode;
  double volatility;
  double spike_probability;
  double skew;
  uint64_t seed;
} exrep_tracegen_params;

EXREP_API void exrep_tracegen_params_init(exrep_tracegen_params* params);
EXREP_API exrep_status exrep_trace_mode_parse(const char* name, exrep_trace_mode* out);

EXREP_API exrep_status exrep_trace_generate(const exrep_tracegen_params* params,
                                            exrep_trace** out);
EXREP_API exrep_status exrep_trace_load(const char* path, exrep_trace** out);
EXREP_API exrep_status exrep_trace_save(const exrep_trace* trace, const char* path);
EXREP_API exrep_status exrep_trace_to_csv(const exrep_trace* trace, char** out_csv);
EXREP_API int64_t exrep_trace_experts(const exrep_trace* trace);
EXREP_API int64_t exrep_trace_iterations(const exrep_trace* trace);
EXREP_API exrep_status exrep_trace_row(const exrep_trace* trace, int64_t iteration,
                                       int64_t* counts_out, size_t len);
EXREP_API void exrep_trace_destroy(exrep_trace* trace);

/* ---- simulation ------------------------------------------------------- */

/* Runs every policy of a JSON run config over its trace. When `out_dir` is
 * non-NULL it overrides the config's output_dir; reports are written into
 * whichever applies (none if neither is set). */
EXREP_API exrep_status exrep_simulate_config(const char* config_path, const char* out_dir,
                                             exrep_simulation** out);
/* `policies_json` is a JSON array of policy objects. */
EXREP_API exrep_status exrep_simulate(const exrep_cluster* cluster, const exrep_trace* trace,
                                      const char* policies_json, exrep_simulation** out);
EXREP_API size_t exrep_simulation_report_count(const exrep_simulation* sim);
EXREP_API exrep_status exrep_simulation_report_json(const exrep_simulation* sim,
                                                    size_t index, char** out_json);
EXREP_API exrep_status exrep_simulation_summary(const exrep_simulation* sim,
                                                char** out_table);
/* Paths written by exrep_simulate_config, "" when nothing was written. */
EXREP_API exrep_status exrep_simulation_written(const exrep_simulation* sim, size_t index,
                                                char** json_path, char** csv_path);
EXREP_API exrep_status exrep_simulation_write(const exrep_simulation* sim,
                                              const char* out_dir);
EXREP_API void exrep_simulation_destroy(exrep_simulation* sim);

/* ---- verification ----------------------------------------------------- */

typedef struct exrep_check_result {
  const char* id;
  const char* title;
  int passed;
  const char* detail;
  double seconds;
  double budget_seconds;
} exrep_check_result;

typedef void (*exrep_check_callback)(const exrep_check_result* result, void* user);

typedef enum exrep_verify_scope {
  EXREP_VERIFY_ACCEPTANCE = 0,
  EXREP_VERIFY_ALL = 1
} exrep_verify_scope;

/* Runs the built-in suite; `callback` (may be NULL) sees each check as it
 * finishes. Returns EXREP_OK when the suite ran, with the number of failed
 * checks in `failed`. */
EXREP_API exrep_status exrep_verify(exrep_verify_scope scope, exrep_check_callback callback,
                                    void* user, int* failed);

#ifdef __cplusplus
}
#endif

#endif /* EXREP_EXREP_H_ */
