#ifndef CASEBASE_CASEBASE_H
#define CASEBASE_CASEBASE_H

#include <stddef.h>
#include <stdint.h>

#if defined(CB_BUILDING_LIBRARY)
#define CB_API __attribute__((visibility("default")))
#else
#define CB_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Every fallible call returns a status; on failure cb_last_error() holds a
 * one-line message for the calling thread and output handles are set to NULL. */
typedef enum cb_status {
  CB_OK = 0,
  CB_ERR_INVALID_ARGUMENT = 1,
  CB_ERR_DATA = 2,
  CB_ERR_NUMERICAL = 3,
  CB_ERR_IO = 4,
  CB_ERR_VERSION = 5,
  CB_ERR_INTERNAL = 6
} cb_status;

typedef struct cb_schema cb_schema;
typedef struct cb_dataset cb_dataset;
typedef struct cb_moments cb_moments;
typedef struct cb_model cb_model;
typedef struct cb_penalized cb_penalized;
typedef struct cb_curve cb_curve;
typedef struct cb_layout cb_layout;

CB_API const char* cb_version(void);
CB_API const char* cb_last_error(void);
CB_API const char* cb_status_name(cb_status status);
/* Frees strings returned through char** out-parameters. */
CB_API void cb_string_free(char* text);
/* Worker threads for cross-validation folds and risk profiles. */
CB_API void cb_set_threads(int threads);
CB_API int cb_get_threads(void);
CB_API cb_status cb_file_fingerprint(const char* path, uint64_t* out);

/* ---- column schema ---- */
CB_API cb_status cb_schema_new(cb_schema** out);
/* Keys: time, event, id, categorical (comma list), ref (column:level),
 * tau, causes, delimiter. */
CB_API cb_status cb_schema_set(cb_schema* schema, const char* key, const char* value);
CB_API void cb_schema_free(cb_schema* schema);

/* ---- survival datasets ---- */
CB_API cb_status cb_dataset_load(const char* path, const cb_schema* schema, cb_dataset** out);
CB_API cb_status cb_dataset_save(const cb_dataset* data, const char* path);
CB_API size_t cb_dataset_size(const cb_dataset* data);
CB_API size_t cb_dataset_events(const cb_dataset* data);
CB_API int cb_dataset_causes(const cb_dataset* data);
CB_API void cb_dataset_free(cb_dataset* data);

/* Simulates from a JSON truth specification. When normalized_json is
 * non-NULL it receives the fully populated specification. */
CB_API cb_status cb_simulate(const char* truth_json, cb_dataset** out, char** normalized_json);

/* ---- person-moment tables ---- */
CB_API cb_status cb_sample(const cb_dataset* data, double ratio, uint64_t seed, cb_moments** out);
CB_API cb_status cb_moments_load(const char* path, cb_moments** out);
CB_API cb_status cb_moments_save(const cb_moments* moments, const char* path);
/* 1 if the file carries the person-moment column set, 0 if not, -1 on error. */
CB_API int cb_is_moment_table(const char* path);
CB_API size_t cb_moments_size(const cb_moments* moments);
CB_API size_t cb_moments_count(const cb_moments* moments, int indicator);
CB_API double cb_moments_offset(const cb_moments* moments);
/* Row accessors; index must be < cb_moments_size. */
CB_API double cb_moments_time(const cb_moments* moments, size_t row);
CB_API int cb_moments_indicator(const cb_moments* moments, size_t row);

/* Rule callback for annotation; return nonzero to abort. */
typedef int (*cb_moment_rule)(void* user, const char* subject_id, double moment_time, int event_indicator,
                              double* value);
CB_API cb_status cb_moments_annotate(const cb_moments* moments, const char* name, cb_moment_rule rule, void* user,
                                     cb_moments** out);
/* name = 1{column <op> moment_time}, op one of <, <=, >, >=. */
CB_API cb_status cb_moments_annotate_threshold(const cb_moments* moments, const char* name, const char* column,
                                               const char* op, cb_moments** out);
CB_API void cb_moments_free(cb_moments* moments);

/* ---- unpenalized hazard models ---- */
CB_API cb_status cb_fit(const cb_moments* moments, const char* model_spec, cb_model** out);
CB_API cb_status cb_model_save(const cb_model* model, const char* path);
CB_API cb_status cb_model_load(const char* path, cb_model** out);
CB_API cb_status cb_model_summary(const cb_model* model, char** text);
CB_API int cb_model_causes(const cb_model* model);
CB_API size_t cb_model_n_columns(const cb_model* model);
CB_API const char* cb_model_column_name(const cb_model* model, size_t column);
/* Cause is 1-based. */
CB_API double cb_model_coefficient(const cb_model* model, int cause, size_t column);
CB_API double cb_model_std_error(const cb_model* model, int cause, size_t column);
CB_API double cb_model_deviance(const cb_model* model);
CB_API double cb_model_aic(const cb_model* model);
/* Coefficient table with Wald intervals at the given level. */
CB_API cb_status cb_model_write_coefficients(const cb_model* model, double level, const char* path);
CB_API cb_status cb_compare(const cb_model* nested, const cb_model* full, double* statistic, int* df,
                            double* p_value);
/* Time-varying hazard ratio of the first profile row versus the second. */
CB_API cb_status cb_hazard_ratio(const cb_model* model, const char* profiles_path, const char* grid, int cause,
                                 double level, const char* out_path);
CB_API void cb_model_free(cb_model* model);

/* ---- elastic-net penalized models ---- */
typedef struct cb_penalty_options {
  double alpha;
  int n_lambda;
  double min_ratio;
  int cv_folds; /* < 2 disables cross-validation */
  uint64_t seed;
  int penalize_time;
  int standardize;
  const char* penalty_factors; /* "column=value,..." or NULL */
  const char* lambdas;         /* comma list or NULL */
} cb_penalty_options;

CB_API void cb_penalty_options_init(cb_penalty_options* options);
CB_API cb_status cb_fit_penalized(const cb_moments* moments, const char* model_spec,
                                  const cb_penalty_options* options, cb_penalized** out);
CB_API cb_status cb_penalized_save_path(const cb_penalized* fit, const char* path);
CB_API size_t cb_penalized_n_lambda(const cb_penalized* fit);
CB_API double cb_penalized_lambda(const cb_penalized* fit, size_t index);
CB_API size_t cb_penalized_selected(const cb_penalized* fit);
CB_API double cb_penalized_kkt(const cb_penalized* fit, size_t index);
/* Copy of the model at the selected lambda. */
CB_API cb_status cb_penalized_model(const cb_penalized* fit, cb_model** out);
CB_API void cb_penalized_free(cb_penalized* fit);

/* ---- absolute risk ---- */
typedef enum cb_integration { CB_TRAPEZOID = 0, CB_MONTE_CARLO = 1 } cb_integration;

typedef struct cb_risk_options {
  cb_integration method;
  int refinement;
  size_t n_samples;
  uint64_t seed;
} cb_risk_options;

CB_API void cb_risk_options_init(cb_risk_options* options);
/* grid is "start:stop:count"; profiles_path holds one profile per row. */
CB_API cb_status cb_risk(const cb_model* model, const char* profiles_path, const char* grid,
                         const cb_risk_options* options, cb_curve** out);
CB_API cb_status cb_curve_save(const cb_curve* curve, const char* path);
CB_API size_t cb_curve_n_times(const cb_curve* curve);
CB_API size_t cb_curve_n_profiles(const cb_curve* curve);
CB_API double cb_curve_time(const cb_curve* curve, size_t index);
CB_API double cb_curve_cif(const cb_curve* curve, size_t time_index, size_t profile, int cause);
CB_API double cb_curve_survival(const cb_curve* curve, size_t time_index, size_t profile);
CB_API void cb_curve_free(cb_curve* curve);

/* ---- population-time plots ---- */
CB_API cb_status cb_poptime(const cb_dataset* data, const char* exposure, const cb_moments* base, uint64_t seed,
                            cb_layout** out);
CB_API cb_status cb_layout_save_svg(const cb_layout* layout, const char* path);
CB_API cb_status cb_layout_save_csv(const cb_layout* layout, const char* path);
CB_API void cb_layout_free(cb_layout* layout);

#ifdef __cplusplus
}
#endif

#endif
