#ifndef LATENTCYCLE_H
#define LATENTCYCLE_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define LC_API __declspec(dllexport)
#else
#define LC_API __attribute__((visibility("default")))
#endif

/* Every call returns a status; on failure lc_last_error() describes it (per thread). */
typedef enum {
    LC_OK = 0,
    LC_ERR_INTERNAL = 1,
    LC_ERR_VALIDATION = 2,
    LC_ERR_RESOURCE = 3,
    LC_ERR_NUMERIC = 4,
    LC_ERR_IO = 5
} lc_status;

typedef struct lc_graph lc_graph;
typedef struct lc_sem lc_sem;
typedef struct lc_dataset lc_dataset;

LC_API const char* lc_version(void);
LC_API const char* lc_last_error(void);
/* strings returned through char** out-parameters are owned by the caller */
LC_API void lc_free_string(char* s);
/* stable 64-bit hash of a text, used for config fingerprints */
LC_API uint64_t lc_hash(const char* text);

/* ---- graphs ---- */
LC_API lc_status lc_graph_from_json(const char* json, lc_graph** out);
LC_API lc_status lc_graph_load(const char* path, lc_graph** out);
LC_API lc_status lc_graph_random_dag(int p, double expected_neighborhood, uint64_t seed, lc_graph** out);
LC_API void lc_graph_free(lc_graph* g);
LC_API lc_status lc_graph_to_json(const lc_graph* g, char** out);
LC_API lc_status lc_graph_size(const lc_graph* g, int* out);
/* vertex id by label, -1 if absent */
LC_API lc_status lc_graph_find(const lc_graph* g, const char* label, int* out);
/* rank of Sigma_{A,B} under rank faithfulness: smallest total choke size */
LC_API lc_status lc_graph_min_choke_size(const lc_graph* g, const int* a, size_t na, const int* b, size_t nb,
                                         int* out);
LC_API lc_status lc_graph_d_separated(const lc_graph* g, const int* a, size_t na, const int* b, size_t nb,
                                      const int* c, size_t nc, int* out);

/* ---- linear SEMs ---- */
/* graph JSON plus optional "coefficients" and "noise"; missing noise uses noise_json (NULL: standard normal) */
LC_API lc_status lc_sem_from_json(const char* json, const char* noise_json, lc_sem** out);
LC_API lc_status lc_sem_load(const char* path, const char* noise_json, lc_sem** out);
/* regime: unit | symmetric_unit | banded | moderate; noise_json e.g. {"dist":"uniform","lo":-1,"hi":1} */
LC_API lc_status lc_sem_random(const lc_graph* g, const char* regime, const char* noise_json, uint64_t seed,
                               lc_sem** out);
LC_API void lc_sem_free(lc_sem* s);
LC_API lc_status lc_sem_to_json(const lc_sem* s, char** out);
LC_API lc_status lc_sem_graph(const lc_sem* s, lc_graph** out);
/* p x p row-major into out (capacity in doubles) */
LC_API lc_status lc_sem_implied_covariance(const lc_sem* s, double* out, size_t capacity);
LC_API lc_status lc_sem_sample(const lc_sem* s, int n, uint64_t seed, int observed_only, lc_dataset** out);

/* ---- datasets ---- */
LC_API lc_status lc_dataset_load(const char* path, lc_dataset** out);
LC_API lc_status lc_dataset_from_csv(const char* text, lc_dataset** out);
LC_API void lc_dataset_free(lc_dataset* d);
LC_API lc_status lc_dataset_shape(const lc_dataset* d, int* rows, int* cols);
LC_API lc_status lc_dataset_to_csv(const lc_dataset* d, char** out);
/* column index by label, -1 if absent */
LC_API lc_status lc_dataset_column(const lc_dataset* d, const char* label, int* out);

/* ---- statistical tests; *decision is 1 when the null (rank bound / independence) is accepted ---- */
LC_API lc_status lc_rank_test(const lc_dataset* d, const int* a, size_t na, const int* b, size_t nb, int r,
                              double alpha, double* p_value, int* decision);
LC_API lc_status lc_gin_test(const lc_dataset* d, const int* z, size_t nz, const int* y, size_t ny, double alpha,
                             uint64_t seed, double* p_value, int* decision);

/* ---- structure learning; options and results are JSON documents ---- */
/* options: alpha, mode (gaussian|nonparam), permutations, seed, max_vertices, tv_l, truth (SEM JSON, optional) */
LC_API lc_status lc_vcsgs(const lc_dataset* d, const char* options_json, char** result_json);
LC_API lc_status lc_vcsgs_oracle(const lc_graph* truth, const char* options_json, char** result_json);

/* options: pipeline (cgin|blocks), alpha, rank_alpha, seed, max_cluster_size, max_vars, max_blocks,
   latent_rule (halve_down|halve_up) */
LC_API lc_status lc_discover(const lc_dataset* d, const char* options_json, char** result_json);
LC_API lc_status lc_discover_oracle(const lc_graph* g, const char* options_json, char** result_json);
LC_API lc_status lc_true_structure(const lc_graph* g, char** result_json);
LC_API lc_status lc_evaluate_discovery(const char* found_json, const lc_graph* truth, char** metrics_json);

/* config: study (sweep|maxk|profile) plus the study's fields; output is CSV without a header comment */
LC_API lc_status lc_faithsim(const char* config_json, char** csv);

/* sets_json: [["X5","X6"],["X3","X4"],...] or named sets; report includes every axis ordering */
LC_API lc_status lc_tensor_check(const lc_sem* s, const char* sets_json, int len_cap, char** report_json);

#ifdef __cplusplus
}
#endif

#endif
