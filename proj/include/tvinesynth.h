/* C interface to the tvinesynth core: truncated C-vine synthetic data
 * generation with privacy and utility evaluation.
 *
 * All functions return TVS_OK on success or an error code; the message
 * for the calling thread's last failure is available through
 * tvs_last_error(). Objects returned through out-parameters are owned by
 * the caller and released with the matching _free function; strings are
 * released with tvs_string_free. Configs and reports travel as JSON.
 */
#ifndef TVINESYNTH_H
#define TVINESYNTH_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#define TVS_OK 0
#define TVS_ERR_USAGE 2
#define TVS_ERR_DATA 3
#define TVS_ERR_NUMERIC 4

typedef struct tvs_dataset tvs_dataset;
typedef struct tvs_model tvs_model;

const char* tvs_version(void);
const char* tvs_last_error(void);
void tvs_string_free(char* s);

/* Worker budget for parallel sections; 0 restores the hardware default. */
void tvs_set_jobs(int jobs);

/* -- datasets ----------------------------------------------------------- */

int tvs_dataset_read_csv(const char* path, const char* response, tvs_dataset** out);
int tvs_dataset_write_csv(const tvs_dataset* ds, const char* path);

/* Block-Gaussian simulated data (20 covariates, binary response "y"). */
int tvs_dataset_simulate(int n, unsigned long long seed, tvs_dataset** out);

/* Stratified split; both outputs must be freed. */
int tvs_dataset_split(const tvs_dataset* ds, double test_fraction, unsigned long long seed,
                      tvs_dataset** train, tvs_dataset** test);

int tvs_dataset_n_rows(const tvs_dataset* ds);
int tvs_dataset_n_cols(const tvs_dataset* ds);
void tvs_dataset_free(tvs_dataset* ds);

/* -- covariate ordering --------------------------------------------------
 * spec_json: {"sensitive": ["X6", ...], "threshold": 0.3,
 *             "measure": "kendall"|"pearson"}
 * Result JSON carries the order, the K set, the association matrix and
 * the safe truncation bound d + 1 - |K| - |S|.
 */
int tvs_find_order(const tvs_dataset* ds, const char* spec_json, char** out_json);

/* -- models ---------------------------------------------------------------
 * order_json is either the tvs_find_order result or {"order": [names]}.
 */
int tvs_model_fit(const tvs_dataset* ds, const char* order_json, int t_max, unsigned long long seed,
                  tvs_model** out);
int tvs_model_truncate(const tvs_model* m, int level, tvs_model** out);
int tvs_model_save(const tvs_model* m, const char* path);
int tvs_model_load(const char* path, tvs_model** out);
int tvs_model_to_json(const tvs_model* m, char** out_json);
int tvs_model_dim(const tvs_model* m);
int tvs_model_truncation_level(const tvs_model* m);
int tvs_model_sample(const tvs_model* m, int n, unsigned long long seed, tvs_dataset** out);
void tvs_model_free(tvs_model* m);

/* -- evaluation ----------------------------------------------------------
 * forest_json (optional fields): {"n_trees":100,"max_depth":12,
 * "min_leaf":2,"features_per_split":0,"seed":0}
 */
int tvs_utility_auc(const tvs_dataset* train, const tvs_dataset* test, const char* forest_json,
                    double* out_auc);

/* Alpha-precision / beta-recall / authenticity of synthetic against real
 * covariates. */
int tvs_fidelity(const tvs_dataset* real, const tvs_dataset* synthetic, char** out_json);

/* -- privacy attacks -------------------------------------------------------
 * generator_json: {"order": [names], "truncation": t}
 * AIA config: {"sensitive":"X6","n_iter":10,"size_raw_t":500,
 *   "size_syn_t":500,"n_synth":50,"bootstrap_size":500,
 *   "outlier_targets":4,"random_targets":5}
 * MIA config: {"sensitive":"X6","n_iter":10,"size_raw_a":500,
 *   "n_shadows":10,"n_syn_a":10,"size_raw_t":400,"size_syn_t":400,
 *   "n_syn_t":50,"outlier_targets":4,"random_targets":5}
 */
int tvs_run_aia(const tvs_dataset* real, const char* generator_json, const char* config_json,
                unsigned long long seed, char** out_json);
int tvs_run_mia(const tvs_dataset* real, const char* generator_json, const char* config_json,
                unsigned long long seed, char** out_json);

/* -- truncation sweep -------------------------------------------------------
 * config_json: {"order":[names],"truncations":[1,5,...],"privacy":"mab"|"pg",
 *   "sensitive":"X6","utility_reps":50,"synth_rows":0,
 *   "aia":{...},"mia":{...},"outlier_targets":2,"random_targets":2,
 *   "forest":{...}}
 * The result carries one record per truncation level plus the same table
 * rendered as CSV.
 */
int tvs_sweep(const tvs_dataset* train, const tvs_dataset* test, const char* config_json,
              unsigned long long seed, char** out_json);

#ifdef __cplusplus
}
#endif

#endif /* TVINESYNTH_H */
