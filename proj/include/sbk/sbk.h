/*
 * sbk.h - C interface to the spline-backfitted kernel (SBK) estimator for
 * functional-coefficient autoregressive models.
 *
 * All objects are opaque handles created by a sbk_*_create / _run / _read
 * call and released with the matching sbk_*_free. Every fallible call
 * returns an sbk_status; on failure, sbk_last_error() describes the problem
 * for the calling thread.
 */
#ifndef SBK_SBK_H
#define SBK_SBK_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(SBK_BUILDING_LIBRARY)
#    define SBK_API __declspec(dllexport)
#  else
#    define SBK_API __declspec(dllimport)
#  endif
#else
#  define SBK_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sbk_status {
  SBK_OK = 0,
  SBK_INVALID_ARGUMENT = 1,
  SBK_SERIES_TOO_SHORT = 2,
  SBK_NON_FINITE_VALUE = 3,
  SBK_NON_POSITIVE_VALUE = 4,
  SBK_EMPTY_WINDOW = 5,
  SBK_OUT_OF_RANGE = 6,
  SBK_SINGULAR_DESIGN = 7,
  SBK_DEGENERATE_PILOT = 8,
  SBK_COMPONENT_OUT_OF_RANGE = 9,
  SBK_INSUFFICIENT_LOCAL_DATA = 10,
  SBK_SINGULAR_LOCAL_FIT = 11,
  SBK_ZERO_DENOMINATOR = 12,
  SBK_EXPLOSIVE_SERIES = 13,
  SBK_STUDY_ABORTED = 14,
  SBK_ALL_CELLS_FAILED = 15,
  SBK_DEGENERATE_REGRESSOR = 16,
  SBK_IO_ERROR = 17,
  SBK_PARSE_ERROR = 18,
  SBK_INTERNAL_ERROR = 99
} sbk_status;

typedef enum sbk_rank_policy {
  SBK_RANK_STRICT = 0,
  SBK_RANK_MIN_NORM = 1
} sbk_rank_policy;

typedef enum sbk_generator_mode {
  SBK_GEN_EXOGENOUS = 0,
  SBK_GEN_RECURSIVE = 1
} sbk_generator_mode;

SBK_API const char* sbk_version(void);
SBK_API const char* sbk_status_name(sbk_status status);
/* Message of the most recent failure on this thread ("" if none). */
SBK_API const char* sbk_last_error(void);
/* Pipeline stage of the most recent failure ("" when not stage-tagged). */
SBK_API const char* sbk_last_error_stage(void);

/* ---- primitives -------------------------------------------------------- */

SBK_API double sbk_quartic_kernel(double u, double h);
/* Returns -1 on invalid input. */
SBK_API int sbk_choose_knot_count(int n, int d, double c1, double c2);

/* ---- time series ------------------------------------------------------- */

typedef struct sbk_series sbk_series;

/* start_label may be NULL; frequency <= 0 means 1. */
SBK_API sbk_status sbk_series_create(const double* values, size_t n, const char* start_label,
                                     int frequency, sbk_series** out);
SBK_API sbk_status sbk_series_read_csv(const char* path, sbk_series** out);
SBK_API sbk_status sbk_series_write_csv(const sbk_series* series, const char* path);
SBK_API size_t sbk_series_length(const sbk_series* series);
SBK_API int sbk_series_frequency(const sbk_series* series);
SBK_API sbk_status sbk_series_copy_values(const sbk_series* series, double* out, size_t capacity);
SBK_API void sbk_series_free(sbk_series* series);

/* ---- simulation -------------------------------------------------------- */

typedef struct sbk_sim_params {
  int p;
  int d;
  const double* amplitudes; /* p entries */
  double omega;
  int n;
  int burn_in;
  sbk_generator_mode mode;
  uint64_t seed;
  double noise_scale;
} sbk_sim_params;

/* Sinusoidal reference designs for p = 4 or p = 10. */
SBK_API sbk_status sbk_sim_params_paper(int p, sbk_sim_params* out);

typedef struct sbk_simulation sbk_simulation;

SBK_API sbk_status sbk_simulate(const sbk_sim_params* params, sbk_simulation** out);
/* Borrowed; valid until the simulation is freed. */
SBK_API const sbk_series* sbk_simulation_series(const sbk_simulation* sim);
/* One slot per time index; NaN before the first usable index. */
SBK_API sbk_status sbk_simulation_copy_response(const sbk_simulation* sim, double* out,
                                                size_t capacity);
SBK_API int sbk_simulation_redraws(const sbk_simulation* sim);
/* response_path may be NULL. */
SBK_API sbk_status sbk_simulation_write_csv(const sbk_simulation* sim, const char* series_path,
                                            const char* response_path);
SBK_API void sbk_simulation_free(sbk_simulation* sim);

/* ---- estimation -------------------------------------------------------- */

typedef struct sbk_fit_params {
  int p;
  int d;
  double c1;
  double c2;
  sbk_rank_policy rank_policy;
  double bandwidth; /* <= 0: rule of thumb per component */
  int curve_points;
} sbk_fit_params;

SBK_API void sbk_fit_params_default(sbk_fit_params* out);

typedef struct sbk_fit sbk_fit;

/* response may be NULL (fit X_t); otherwise one slot per time index. */
SBK_API sbk_status sbk_fit_series(const sbk_series* series, const double* response,
                                  const sbk_fit_params* params, sbk_fit** out);
SBK_API double sbk_fit_mse(const sbk_fit* fit);
SBK_API int sbk_fit_order(const sbk_fit* fit);
SBK_API double sbk_fit_bandwidth(const sbk_fit* fit, int component);
SBK_API size_t sbk_fit_curve_length(const sbk_fit* fit);
/* component 0 copies the evaluation grid, 1..p the curve m_alpha(u). */
SBK_API sbk_status sbk_fit_copy_curve(const sbk_fit* fit, int component, double* out,
                                      size_t capacity);
/* Writes coefficients.csv and fitted.csv into output_dir. */
SBK_API sbk_status sbk_fit_write(const sbk_fit* fit, const char* output_dir);
SBK_API void sbk_fit_free(sbk_fit* fit);

/* ---- Monte-Carlo efficiency study -------------------------------------- */

typedef struct sbk_study_params {
  sbk_sim_params model; /* n and seed are ignored */
  const int* n_values;
  size_t n_count;
  int reps;
  const int* components;
  size_t component_count;
  uint64_t seed;
  int threads; /* <= 0: all cores */
  double c1;
  double c2;
  sbk_rank_policy rank_policy;
  int grid_points;
  double central_fraction;
  int bandwidth_per_replication;
} sbk_study_params;

SBK_API sbk_status sbk_study_params_default(int p, sbk_study_params* out);

typedef struct sbk_cell_summary {
  int p;
  int n;
  int component;
  double mode;
  double median;
  double variance;
  int n_failed;
  size_t samples;
} sbk_cell_summary;

typedef struct sbk_study sbk_study;

SBK_API sbk_status sbk_study_run(const sbk_study_params* params, sbk_study** out);
SBK_API size_t sbk_study_cell_count(const sbk_study* study);
SBK_API sbk_status sbk_study_cell(const sbk_study* study, size_t index, sbk_cell_summary* out);
SBK_API sbk_status sbk_study_copy_samples(const sbk_study* study, size_t index, double* out,
                                          size_t capacity);
/* Writes samples.csv, summary.csv and one density_*.csv per cell. */
SBK_API sbk_status sbk_study_write(const sbk_study* study, const char* output_dir);
SBK_API void sbk_study_free(sbk_study* study);

/* ---- application pipeline ---------------------------------------------- */

typedef struct sbk_pipeline_params {
  double detrend_bandwidth;
  int seasonal_lag;
  const int* d_values;
  size_t d_count;
  const int* p_values;
  size_t p_count;
  int skip_log;
  int threads; /* <= 0: all cores */
  double c1;
  double c2;
  sbk_rank_policy rank_policy;
  int curve_points;
} sbk_pipeline_params;

/* Bandwidth 30, lag 4, d = 1..10, p = 2..10. */
SBK_API void sbk_pipeline_params_default(sbk_pipeline_params* out);

typedef struct sbk_pipeline sbk_pipeline;

SBK_API sbk_status sbk_pipeline_run(const sbk_series* raw, const sbk_pipeline_params* params,
                                    sbk_pipeline** out);
SBK_API int sbk_pipeline_best_d(const sbk_pipeline* pipeline);
SBK_API int sbk_pipeline_best_p(const sbk_pipeline* pipeline);
SBK_API double sbk_pipeline_best_mse(const sbk_pipeline* pipeline);
/* NaN when the cell failed or is not in the grid. */
SBK_API double sbk_pipeline_mse(const sbk_pipeline* pipeline, int d, int p);
SBK_API size_t sbk_pipeline_failed_cells(const sbk_pipeline* pipeline);
SBK_API sbk_status sbk_pipeline_ar1(const sbk_pipeline* pipeline, double* c, double* psi,
                                    double* mse);
/* mse_table.csv, mse_cells.csv, fitted.csv, coefficients.csv, stages.csv, pipeline.json */
SBK_API sbk_status sbk_pipeline_write(const sbk_pipeline* pipeline, const char* output_dir);
SBK_API void sbk_pipeline_free(sbk_pipeline* pipeline);

#ifdef __cplusplus
}
#endif

#endif /* SBK_SBK_H */
