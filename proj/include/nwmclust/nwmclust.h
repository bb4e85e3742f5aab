/* nwmclust: supervised variable clustering via network-wide metrics
 * SPDX-License-Identifier: MIT
 *
 * C interface of the nwmclust shared library. All objects are opaque
 * handles created and destroyed through this API. Every fallible call
 * returns an nwmc_status; on failure nwmc_last_error() describes the
 * problem (the message is thread-local and valid until the next call on
 * the same thread). Strings returned through char** out-parameters are
 * owned by the caller and released with nwmc_string_free().
 */
#ifndef NWMCLUST_H
#define NWMCLUST_H

#include <stddef.h>

#if defined(_WIN32)
#  if defined(NWMC_BUILDING_LIBRARY)
#    define NWMC_API __declspec(dllexport)
#  else
#    define NWMC_API __declspec(dllimport)
#  endif
#else
#  define NWMC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum nwmc_status {
  NWMC_OK = 0,
  NWMC_ERR_USAGE = 2,     /* invalid argument, configuration or input contract */
  NWMC_ERR_NUMERICAL = 3, /* singular, non-convergent or otherwise failed computation */
  NWMC_ERR_IO = 4         /* unreadable or unwritable file */
} nwmc_status;

typedef struct nwmc_config nwmc_config;
typedef struct nwmc_dataset nwmc_dataset;
typedef struct nwmc_result nwmc_result;

NWMC_API const char* nwmc_version(void);
NWMC_API const char* nwmc_last_error(void);
NWMC_API void nwmc_string_free(char* s);

/* Configuration: flat key/value document with [section] headers. */
NWMC_API nwmc_status nwmc_config_create(nwmc_config** out);
NWMC_API nwmc_status nwmc_config_load(const char* path, nwmc_config** out);
NWMC_API nwmc_status nwmc_config_set(nwmc_config* cfg, const char* key, const char* value);
NWMC_API nwmc_status nwmc_config_get(const nwmc_config* cfg, const char* key, char** value);
NWMC_API nwmc_status nwmc_config_validate(const nwmc_config* cfg);
NWMC_API nwmc_status nwmc_config_dump(const nwmc_config* cfg, char** text);
NWMC_API void nwmc_config_free(nwmc_config* cfg);

/* Datasets: a response vector and an n x p predictor matrix. */
NWMC_API nwmc_status nwmc_dataset_load_csv(const char* path, const char* response, nwmc_dataset** out);
/* X is row-major n x p; names may be NULL (defaults X1..Xp). */
NWMC_API nwmc_status nwmc_dataset_from_arrays(const double* y, const double* X, size_t n, size_t p,
                                              const char* const* names, nwmc_dataset** out);
NWMC_API nwmc_status nwmc_dataset_dims(const nwmc_dataset* d, size_t* n, size_t* p);
NWMC_API void nwmc_dataset_free(nwmc_dataset* d);

/* Multiple-split clustering of one dataset under the configuration. */
NWMC_API nwmc_status nwmc_analyze(const nwmc_config* cfg, const nwmc_dataset* d, nwmc_result** out);
NWMC_API nwmc_status nwmc_result_num_clusters(const nwmc_result* r, size_t* k);
/* Cluster rank (0-based) of predictor `var`; -1 selected but unassigned, -2 never selected. */
NWMC_API nwmc_status nwmc_result_cluster_of(const nwmc_result* r, size_t var, long* cluster);
NWMC_API nwmc_status nwmc_result_json(const nwmc_result* r, char** text);
/* Writes clusters.json, clusters.csv, nwm_estimates.csv and splits.csv into out_dir. */
NWMC_API nwmc_status nwmc_result_write(const nwmc_result* r, const char* out_dir);
NWMC_API void nwmc_result_free(nwmc_result* r);

/* Comma-separated list of experiment ids accepted by nwmc_reproduce. */
NWMC_API const char* nwmc_experiment_names(void);
/*
 * Regenerates one published simulation table. Writes <experiment>.csv and
 * <experiment>_report.json into out_dir; `replicates` = 0 uses the
 * configured count. summary (may be NULL) receives a text comparison
 * with the published values.
 */
NWMC_API nwmc_status nwmc_reproduce(const nwmc_config* cfg, const char* experiment, size_t replicates,
                                    const char* out_dir, char** summary);
/*
 * Draws one dataset from a named simulation design ("unsup", "icc-strong",
 * "icc-weak", "grouped", "nwm-bias") and writes it as CSV with response y.
 * n = 0 or p = 0 select the design defaults; r_b applies to "unsup".
 */
NWMC_API nwmc_status nwmc_simulate(const nwmc_config* cfg, const char* design, size_t n, size_t p, double r_b,
                                   const char* csv_path);
/* Runs the built-in oracle/invariant suite; failures receives the failing count. */
NWMC_API nwmc_status nwmc_selftest(const nwmc_config* cfg, char** report, int* failures);
/* Writes out_dir/manifest.json: command, status, message, seed, config and its hash, version. */
NWMC_API nwmc_status nwmc_write_manifest(const nwmc_config* cfg, const char* command, int status,
                                         const char* message, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* NWMCLUST_H */
