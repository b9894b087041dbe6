#ifndef CJMAP_CJMAP_H
#define CJMAP_CJMAP_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(CJMAP_BUILDING)
#    define CJMAP_API __declspec(dllexport)
#  else
#    define CJMAP_API __declspec(dllimport)
#  endif
#else
#  define CJMAP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. Every nonzero code has a stable name (cjmap_status_name). */
typedef enum cjmap_status {
  CJMAP_OK = 0,
  CJMAP_NEGATIVE_VALUE,
  CJMAP_DUPLICATE_COIN_ID,
  CJMAP_OUTPUTS_EXCEED_INPUTS,
  CJMAP_EMPTY_SIDE,
  CJMAP_SIGNATURE_MISMATCH,
  CJMAP_UNKNOWN_DESIGN,
  CJMAP_MISSING_FEERATE,
  CJMAP_INVALID_POLICY,
  CJMAP_VALUE_UNDERFLOW,
  CJMAP_OVERLAPPING_GROUPS,
  CJMAP_DANGLING_ID,
  CJMAP_SUBMAPPING_EXPLOSION,
  CJMAP_INSTANCE_TOO_LARGE,
  CJMAP_ZERO_MASS,
  CJMAP_UNKNOWN_ID,
  CJMAP_UNKNOWN_SIGNATURE,
  CJMAP_UNKNOWN_TX,
  CJMAP_UNKNOWN_OUTPUT,
  CJMAP_INVALID_GRAPH,
  CJMAP_DANGLING_LINK,
  CJMAP_VALUE_MISMATCH,
  CJMAP_INFEASIBLE_PARAMS,
  CJMAP_DEGENERATE_DATA,
  CJMAP_PARSE_ERROR,
  CJMAP_IO_ERROR,
  CJMAP_INVALID_ARGUMENT,
  CJMAP_INTERNAL_ERROR
} cjmap_status;

/* Holds the thread count and the last error message. Not thread-safe; use
 * one context per calling thread. */
typedef struct cjmap_context cjmap_context;
/* An enumeration result. Immutable once created. */
typedef struct cjmap_result cjmap_result;

CJMAP_API const char* cjmap_version(void);
CJMAP_API const char* cjmap_status_name(cjmap_status status);

CJMAP_API cjmap_context* cjmap_context_new(void);
CJMAP_API void cjmap_context_free(cjmap_context* ctx);
/* 0 = hardware concurrency. */
CJMAP_API void cjmap_context_set_threads(cjmap_context* ctx, unsigned threads);
/* Message of the last failed call on ctx; "" after success. */
CJMAP_API const char* cjmap_last_error(const cjmap_context* ctx);

/* Strings returned through char** are owned by the caller. */
CJMAP_API void cjmap_string_free(char* s);

/* tx_json: transaction file. options_json (nullable): config document, plus
 * optional "submapping_cap", "mapping_cap" and "apply_knowledge" (default
 * true). */
CJMAP_API cjmap_status cjmap_enumerate(cjmap_context* ctx, const char* tx_json,
                                       const char* options_json,
                                       cjmap_result** out);
/* linked_json: linked-set file; member paths resolve against base_dir. */
CJMAP_API cjmap_status cjmap_enumerate_linked(cjmap_context* ctx,
                                              const char* linked_json,
                                              const char* base_dir,
                                              const char* options_json,
                                              cjmap_result** out);
CJMAP_API cjmap_status cjmap_result_load(cjmap_context* ctx,
                                         const char* result_json,
                                         cjmap_result** out);
CJMAP_API void cjmap_result_free(cjmap_result* result);

CJMAP_API uint64_t cjmap_result_numeric_count(const cjmap_result* result);
CJMAP_API double cjmap_result_log2_total(const cjmap_result* result);
/* Decimal string of the exact concrete mapping count. */
CJMAP_API cjmap_status cjmap_result_total(cjmap_context* ctx,
                                          const cjmap_result* result,
                                          char** out);

enum {
  CJMAP_DUMP_STATS = 1,    /* include the wall-clock stats block */
  CJMAP_DUMP_CONCRETE = 2  /* expand concrete mappings */
};
CJMAP_API cjmap_status cjmap_result_dump(cjmap_context* ctx,
                                         const cjmap_result* result,
                                         int flags, char** out);

/* Index of the numeric mapping holding the ground truth of tx_json, -1 when
 * absent. has_truth is set to 0 when the file carries no ground truth. */
CJMAP_API cjmap_status cjmap_result_truth_index(cjmap_context* ctx,
                                                const cjmap_result* result,
                                                const char* tx_json,
                                                int* has_truth,
                                                int64_t* index);

/* weights_json and user_inputs_json (array of id arrays) are nullable.
 * links_csv is nullable. */
CJMAP_API cjmap_status cjmap_metrics(cjmap_context* ctx,
                                     const cjmap_result* result,
                                     const char* weights_json,
                                     const char* user_inputs_json,
                                     char** report_json, char** links_csv);
CJMAP_API cjmap_status cjmap_link_probability(cjmap_context* ctx,
                                              const cjmap_result* result,
                                              const char* weights_json,
                                              const char* input_id,
                                              const char* output_id,
                                              double* p);

/* options_json: {"horizons": [1, "inf"], "buckets": "default" | [edges],
 * "clock": "timestamp" | "height", "blocks_per_day": 144, "detect": false,
 * "min_inputs", "min_addresses", "max_reuse", "exclude": [txids]}.
 * Output pointers other than report_json are nullable. */
CJMAP_API cjmap_status cjmap_anonloss(cjmap_context* ctx, const char* graph_json,
                                      const char* options_json,
                                      char** report_json, char** tx_csv,
                                      char** bucket_csv);

/* params_json (nullable): generator parameters. Writes a transaction file
 * with its ground truth. */
CJMAP_API cjmap_status cjmap_generate(cjmap_context* ctx, const char* design,
                                      uint64_t users, uint64_t seed,
                                      const char* params_json, char** tx_json);
CJMAP_API cjmap_status cjmap_trend(cjmap_context* ctx, const char* design,
                                   const uint64_t* sizes, size_t size_count,
                                   uint64_t per_size, uint64_t seed,
                                   const char* params_json, char** csv);

/* predict_size < 0 skips the prediction; loss in [0, 1]. mean_per_size
 * selects the per-size mean aggregation. */
CJMAP_API cjmap_status cjmap_fit(cjmap_context* ctx, const char* csv,
                                 int mean_per_size, double predict_size,
                                 double loss, char** fit_json);

#ifdef __cplusplus
}
#endif

#endif
