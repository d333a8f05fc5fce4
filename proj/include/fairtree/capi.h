/* C API of the fairtree shared library.
 *
 * All functions return an ft_status (FT_OK on success); the thread-local
 * message behind ft_last_error() describes the most recent failure on the
 * calling thread. Objects are opaque handles released with the matching
 * _free function; strings returned through char** are heap-allocated and
 * released with ft_string_free. Handles are safe for concurrent reads;
 * creation and destruction are single-owner.
 */
#ifndef FAIRTREE_CAPI_H
#define FAIRTREE_CAPI_H

#include <stdint.h>

#if defined(_WIN32)
#define FT_API __declspec(dllexport)
#else
#define FT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ft_status {
    FT_OK = 0,
    FT_ERR_CONTRACT = 1,
    FT_ERR_SCHEMA = 2,
    FT_ERR_STRUCTURE = 3,
    FT_ERR_DOMAIN = 4,
    FT_ERR_PARSE = 5,
    FT_ERR_IO = 6,
    FT_ERR_INTERNAL = 7
} ft_status;

typedef struct ft_dataset ft_dataset;
typedef struct ft_tree ft_tree;

FT_API const char* ft_version(void);
FT_API const char* ft_last_error(void);
FT_API void ft_string_free(char* s);

/* Datasets ---------------------------------------------------------------*/

/* spec_json: a dataset spec document, or NULL/"" to use the builtin spec
 * named `builtin_name`. report_json (optional) receives the load report. */
FT_API ft_status ft_dataset_load_csv(const char* csv_path, const char* builtin_name,
                                     const char* spec_json, ft_dataset** out, char** report_json);
FT_API ft_status ft_dataset_synthesize(const char* kind, int64_t n, uint64_t seed, ft_dataset** out);
FT_API ft_status ft_dataset_split(const ft_dataset* data, double train_fraction, uint64_t seed,
                                  ft_dataset** train_out, ft_dataset** test_out);
/* counts in the order a0/y-1, a0/y+1, a1/y-1, a1/y+1 */
FT_API ft_status ft_dataset_contingency(const ft_dataset* data, int64_t counts[4]);
FT_API int64_t ft_dataset_num_rows(const ft_dataset* data);
FT_API int64_t ft_dataset_num_features(const ft_dataset* data);
FT_API void ft_dataset_free(ft_dataset* data);

FT_API ft_status ft_builtin_spec_json(const char* name, char** spec_json_out);

/* Writes <name>-replica.csv into out_dir; path_out receives the file path. */
FT_API ft_status ft_replica_write(const char* name, const char* out_dir, uint64_t seed,
                                  char** path_out);

/* Trees ------------------------------------------------------------------*/

/* growth_json keys: c (number or "inf"), max_depth, min_samples_split,
 * min_samples_leaf, reject_unconverged. solver_json keys: max_iter, kkt_tol,
 * feas_tol, ... NULL/"" selects defaults. */
FT_API ft_status ft_tree_grow(const ft_dataset* data, const char* growth_json,
                              const char* solver_json, ft_tree** out);
FT_API ft_status ft_tree_predict(const ft_tree* tree, const double* row, int64_t p, int* label_out);
FT_API ft_status ft_tree_is_constant(const ft_tree* tree, int* out);
FT_API ft_status ft_tree_to_json(const ft_tree* tree, char** json_out);
FT_API ft_status ft_tree_from_json(const char* json, ft_tree** out);
FT_API void ft_tree_free(ft_tree* tree);

/* Metrics report of `tree` evaluated on `data` as a flat JSON object. */
FT_API ft_status ft_tree_evaluate(const ft_tree* tree, const ft_dataset* data, char** metrics_json);

/* Experiments ------------------------------------------------------------*/

FT_API ft_status ft_sweep_run(const char* config_json, char** result_json);
FT_API ft_status ft_sweep_emit(const char* result_json, const char* format, const char* out_dir);

/* Theory oracle ----------------------------------------------------------*/

FT_API ft_status ft_verify_theory(int64_t instances, uint64_t seed, char** report_json);

#ifdef __cplusplus
}
#endif

#endif /* FAIRTREE_CAPI_H */
