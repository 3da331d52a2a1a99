#ifndef SBK_VERSION_STRING
#define SBK_VERSION_STRING "0.1.0"
#endif

#include "sbk/sbk.h"

#include "error.hpp"
#include "model_select.hpp"
#include "parallel.hpp"
#include "report_io.hpp"
#include "simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <new>
#include <optional>
#include <string>

using namespace sbk;

struct sbk_series {
  TimeSeries series;
};

struct sbk_simulation {
  SimulatedSeries sim;
  sbk_series view;
};

struct sbk_fit {
  SbkModelFit fit;
  CoefficientCurves curves;
  std::size_t series_length;
};

struct sbk_study {
  std::vector<EfficiencyReport> reports;
};

struct sbk_pipeline {
  PipelineReport report;
};

namespace {

thread_local std::string last_error;
thread_local std::string last_stage;

sbk_status status_of(ErrorCode code) {
  switch (code) {
  case ErrorCode::InvalidArgument: return SBK_INVALID_ARGUMENT;
  case ErrorCode::SeriesTooShort: return SBK_SERIES_TOO_SHORT;
  case ErrorCode::NonFiniteValue: return SBK_NON_FINITE_VALUE;
  case ErrorCode::NonPositiveValue: return SBK_NON_POSITIVE_VALUE;
  case ErrorCode::EmptyWindow: return SBK_EMPTY_WINDOW;
  case ErrorCode::OutOfRange: return SBK_OUT_OF_RANGE;
  case ErrorCode::SingularDesign: return SBK_SINGULAR_DESIGN;
  case ErrorCode::DegeneratePilot: return SBK_DEGENERATE_PILOT;
  case ErrorCode::ComponentOutOfRange: return SBK_COMPONENT_OUT_OF_RANGE;
  case ErrorCode::InsufficientLocalData: return SBK_INSUFFICIENT_LOCAL_DATA;
  case ErrorCode::SingularLocalFit: return SBK_SINGULAR_LOCAL_FIT;
  case ErrorCode::ZeroDenominator: return SBK_ZERO_DENOMINATOR;
  case ErrorCode::ExplosiveSeries: return SBK_EXPLOSIVE_SERIES;
  case ErrorCode::StudyAborted: return SBK_STUDY_ABORTED;
  case ErrorCode::AllCellsFailed: return SBK_ALL_CELLS_FAILED;
  case ErrorCode::DegenerateRegressor: return SBK_DEGENERATE_REGRESSOR;
  case ErrorCode::Io: return SBK_IO_ERROR;
  case ErrorCode::Parse: return SBK_PARSE_ERROR;
  }
  return SBK_INTERNAL_ERROR;
}

sbk_status fail(sbk_status status, std::string message, std::string stage = {}) {
  last_error = std::move(message);
  last_stage = std::move(stage);
  return status;
}

template <class Fn>
sbk_status guarded(Fn&& fn) {
  try {
    last_error.clear();
    last_stage.clear();
    fn();
    return SBK_OK;
  } catch (const Error& e) {
    return fail(status_of(e.code()), e.what(), e.stage());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(SBK_IO_ERROR, e.what());
  } catch (const std::bad_alloc&) {
    return fail(SBK_INTERNAL_ERROR, "out of memory");
  } catch (const std::exception& e) {
    return fail(SBK_INTERNAL_ERROR, e.what());
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::InvalidArgument, what);
}

RankPolicy rank_policy_of(sbk_rank_policy p) {
  return p == SBK_RANK_STRICT ? RankPolicy::Strict : RankPolicy::MinimumNorm;
}

int resolve_threads(int threads) { return threads > 0 ? threads : default_thread_count(); }

SimulationConfig sim_config_of(const sbk_sim_params& p) {
  require(p.p >= 1, "p must be >= 1");
  require(p.amplitudes != nullptr, "amplitudes must not be NULL");
  SimulationConfig c;
  c.p = p.p;
  c.d = p.d;
  c.amplitudes.assign(p.amplitudes, p.amplitudes + p.p);
  c.omega = p.omega;
  c.n = p.n;
  c.burn_in = p.burn_in;
  c.mode = p.mode == SBK_GEN_RECURSIVE ? GeneratorMode::Recursive : GeneratorMode::Exogenous;
  c.seed = p.seed;
  c.noise_scale = p.noise_scale;
  return c;
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <class T>
sbk_status copy_out(const std::vector<T>& src, T* out, std::size_t capacity) {
  if (out == nullptr || capacity < src.size()) {
    return fail(SBK_INVALID_ARGUMENT, "output buffer needs " + std::to_string(src.size()) + " slots");
  }
  std::copy(src.begin(), src.end(), out);
  return SBK_OK;
}

const double paper_amplitudes[10] = {0.5, -0.5, 0.5, -0.5, 0.5, -0.5, 0.5, -0.5, 0.5, -0.5};
const int default_d_values[10] = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
const int default_p_values[9] = {2, 3, 4, 5, 6, 7, 8, 9, 10};
const int paper_n_values[4] = {100, 500, 1000, 1500};
const int paper_components[2] = {1, 4};

} // namespace

extern "C" {

const char* sbk_version(void) { return SBK_VERSION_STRING; }

const char* sbk_status_name(sbk_status status) {
  switch (status) {
  case SBK_OK: return "OK";
  case SBK_INVALID_ARGUMENT: return "InvalidArgument";
  case SBK_SERIES_TOO_SHORT: return "SeriesTooShort";
  case SBK_NON_FINITE_VALUE: return "NonFiniteValue";
  case SBK_NON_POSITIVE_VALUE: return "NonPositiveValue";
  case SBK_EMPTY_WINDOW: return "EmptyWindow";
  case SBK_OUT_OF_RANGE: return "OutOfRange";
  case SBK_SINGULAR_DESIGN: return "SingularDesign";
  case SBK_DEGENERATE_PILOT: return "DegeneratePilot";
  case SBK_COMPONENT_OUT_OF_RANGE: return "ComponentOutOfRange";
  case SBK_INSUFFICIENT_LOCAL_DATA: return "InsufficientLocalData";
  case SBK_SINGULAR_LOCAL_FIT: return "SingularLocalFit";
  case SBK_ZERO_DENOMINATOR: return "ZeroDenominator";
  case SBK_EXPLOSIVE_SERIES: return "ExplosiveSeries";
  case SBK_STUDY_ABORTED: return "StudyAborted";
  case SBK_ALL_CELLS_FAILED: return "AllCellsFailed";
  case SBK_DEGENERATE_REGRESSOR: return "DegenerateRegressor";
  case SBK_IO_ERROR: return "IoError";
  case SBK_PARSE_ERROR: return "ParseError";
  case SBK_INTERNAL_ERROR: return "InternalError";
  }
  return "Unknown";
}

const char* sbk_last_error(void) { return last_error.c_str(); }
const char* sbk_last_error_stage(void) { return last_stage.c_str(); }

double sbk_quartic_kernel(double u, double h) {
  if (!(h > 0.0)) return kNaN;
  return quartic_kernel(u, h);
}

int sbk_choose_knot_count(int n, int d, double c1, double c2) {
  try {
    return choose_knot_count(n, d, c1, c2);
  } catch (const Error& e) {
    fail(SBK_INVALID_ARGUMENT, e.what());
    return -1;
  }
}

/* series */

sbk_status sbk_series_create(const double* values, size_t n, const char* start_label,
                             int frequency, sbk_series** out) {
  return guarded([&] {
    require(out != nullptr, "out must not be NULL");
    require(values != nullptr || n == 0, "values must not be NULL");
    std::optional<std::string> label;
    if (start_label) label = start_label;
    *out = new sbk_series{
        TimeSeries(std::vector<double>(values, values + n), label, frequency > 0 ? frequency : 1)};
  });
}

sbk_status sbk_series_read_csv(const char* path, sbk_series** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "path and out must not be NULL");
    *out = new sbk_series{read_series_csv(path)};
  });
}

sbk_status sbk_series_write_csv(const sbk_series* series, const char* path) {
  return guarded([&] {
    require(series != nullptr && path != nullptr, "series and path must not be NULL");
    io::write_text(path, io::series_csv(series->series));
  });
}

size_t sbk_series_length(const sbk_series* series) { return series ? series->series.size() : 0; }

int sbk_series_frequency(const sbk_series* series) {
  return series ? series->series.frequency() : 0;
}

sbk_status sbk_series_copy_values(const sbk_series* series, double* out, size_t capacity) {
  if (!series) return fail(SBK_INVALID_ARGUMENT, "series must not be NULL");
  const auto v = series->series.values();
  return copy_out(std::vector<double>(v.begin(), v.end()), out, capacity);
}

void sbk_series_free(sbk_series* series) { delete series; }

/* simulation */

sbk_status sbk_sim_params_paper(int p, sbk_sim_params* out) {
  return guarded([&] {
    require(out != nullptr, "out must not be NULL");
    const SimulationConfig c = paper_config(p);
    *out = sbk_sim_params{c.p,       c.d,
                          paper_amplitudes, c.omega,
                          c.n,       c.burn_in,
                          SBK_GEN_EXOGENOUS, c.seed,
                          c.noise_scale};
  });
}

sbk_status sbk_simulate(const sbk_sim_params* params, sbk_simulation** out) {
  return guarded([&] {
    require(params != nullptr && out != nullptr, "params and out must not be NULL");
    SimulatedSeries sim = generate_fcar(sim_config_of(*params));
    auto* handle = new sbk_simulation{sim, sbk_series{sim.series}};
    *out = handle;
  });
}

const sbk_series* sbk_simulation_series(const sbk_simulation* sim) {
  return sim ? &sim->view : nullptr;
}

sbk_status sbk_simulation_copy_response(const sbk_simulation* sim, double* out, size_t capacity) {
  if (!sim) return fail(SBK_INVALID_ARGUMENT, "simulation must not be NULL");
  return copy_out(sim->sim.response, out, capacity);
}

int sbk_simulation_redraws(const sbk_simulation* sim) { return sim ? sim->sim.redraws : -1; }

sbk_status sbk_simulation_write_csv(const sbk_simulation* sim, const char* series_path,
                                    const char* response_path) {
  return guarded([&] {
    require(sim != nullptr && series_path != nullptr, "simulation and path must not be NULL");
    io::write_text(series_path, io::series_csv(sim->sim.series));
    if (response_path) io::write_text(response_path, io::response_csv(sim->sim.response));
  });
}

void sbk_simulation_free(sbk_simulation* sim) { delete sim; }

/* estimation */

void sbk_fit_params_default(sbk_fit_params* out) {
  if (!out) return;
  *out = sbk_fit_params{1, 1, 1.0, 1.0, SBK_RANK_MIN_NORM, 0.0, 101};
}

namespace {

ModelOptions model_options_of(double c1, double c2, sbk_rank_policy policy, double bandwidth) {
  ModelOptions o;
  o.c1 = c1;
  o.c2 = c2;
  o.prefit.rank_policy = rank_policy_of(policy);
  if (bandwidth > 0.0) o.bandwidth = bandwidth;
  return o;
}

} // namespace

sbk_status sbk_fit_series(const sbk_series* series, const double* response,
                          const sbk_fit_params* params, sbk_fit** out) {
  return guarded([&] {
    require(series != nullptr && params != nullptr && out != nullptr,
            "series, params and out must not be NULL");
    require(params->curve_points >= 2, "curve_points must be >= 2");
    const ModelOptions options =
        model_options_of(params->c1, params->c2, params->rank_policy, params->bandwidth);
    LaggedDesign design = build_lagged_design(series->series, FcarSpec(params->p, params->d));
    if (response) override_response(design, {response, series->series.size()});
    SbkModelFit fit = fit_sbk_model(design, options);
    CoefficientCurves curves = coefficient_curves(fit, params->curve_points, options);
    *out = new sbk_fit{std::move(fit), std::move(curves), series->series.size()};
  });
}

double sbk_fit_mse(const sbk_fit* fit) { return fit ? fit->fit.mse : kNaN; }
int sbk_fit_order(const sbk_fit* fit) { return fit ? fit->fit.design.p : 0; }

double sbk_fit_bandwidth(const sbk_fit* fit, int component) {
  if (!fit || component < 1 || component > fit->fit.design.p) return kNaN;
  return fit->fit.components[static_cast<std::size_t>(component - 1)].bandwidth;
}

size_t sbk_fit_curve_length(const sbk_fit* fit) { return fit ? fit->curves.u.size() : 0; }

sbk_status sbk_fit_copy_curve(const sbk_fit* fit, int component, double* out, size_t capacity) {
  if (!fit) return fail(SBK_INVALID_ARGUMENT, "fit must not be NULL");
  if (component == 0) return copy_out(fit->curves.u, out, capacity);
  if (component < 1 || component > fit->fit.design.p) {
    return fail(SBK_COMPONENT_OUT_OF_RANGE, "component outside 0..p");
  }
  return copy_out(fit->curves.values[static_cast<std::size_t>(component - 1)], out, capacity);
}

sbk_status sbk_fit_write(const sbk_fit* fit, const char* output_dir) {
  return guarded([&] {
    require(fit != nullptr && output_dir != nullptr, "fit and output_dir must not be NULL");
    const std::filesystem::path dir(output_dir);
    std::filesystem::create_directories(dir);
    io::write_text(dir / "coefficients.csv", io::coefficients_csv(fit->curves));
    io::write_text(dir / "fitted.csv", io::estimate_fitted_csv(fit->fit, fit->series_length));
  });
}

void sbk_fit_free(sbk_fit* fit) { delete fit; }

/* study */

sbk_status sbk_study_params_default(int p, sbk_study_params* out) {
  return guarded([&] {
    require(out != nullptr, "out must not be NULL");
    sbk_sim_params model{};
    if (sbk_sim_params_paper(p, &model) != SBK_OK) throw Error(ErrorCode::InvalidArgument, last_error);
    *out = sbk_study_params{model, paper_n_values, 4, 500, paper_components, 2, 1, 0,
                            1.0,   1.0,            SBK_RANK_MIN_NORM, 101, 0.9, 1};
  });
}

sbk_status sbk_study_run(const sbk_study_params* params, sbk_study** out) {
  return guarded([&] {
    require(params != nullptr && out != nullptr, "params and out must not be NULL");
    require(params->n_values != nullptr && params->n_count > 0, "n_values must be non-empty");
    require(params->components != nullptr && params->component_count > 0,
            "components must be non-empty");
    StudyConfig c;
    sbk_sim_params model = params->model;
    // Placeholder n; the study validates each requested n separately.
    model.n = *std::max_element(params->n_values, params->n_values + params->n_count);
    c.model = sim_config_of(model);
    c.n_values.assign(params->n_values, params->n_values + params->n_count);
    c.reps = params->reps;
    c.components.assign(params->components, params->components + params->component_count);
    c.seed = params->seed;
    c.threads = resolve_threads(params->threads);
    c.c1 = params->c1;
    c.c2 = params->c2;
    c.prefit.rank_policy = rank_policy_of(params->rank_policy);
    c.grid_points = params->grid_points;
    c.central_fraction = params->central_fraction;
    c.bandwidth_per_replication = params->bandwidth_per_replication != 0;
    *out = new sbk_study{run_study(c)};
  });
}

size_t sbk_study_cell_count(const sbk_study* study) { return study ? study->reports.size() : 0; }

sbk_status sbk_study_cell(const sbk_study* study, size_t index, sbk_cell_summary* out) {
  if (!study || !out || index >= study->reports.size()) {
    return fail(SBK_INVALID_ARGUMENT, "invalid study cell request");
  }
  const auto& r = study->reports[index];
  *out = sbk_cell_summary{r.p, r.n, r.component, r.mode, r.median, r.variance, r.n_failed,
                          r.samples.size()};
  return SBK_OK;
}

sbk_status sbk_study_copy_samples(const sbk_study* study, size_t index, double* out,
                                  size_t capacity) {
  if (!study || index >= study->reports.size()) {
    return fail(SBK_INVALID_ARGUMENT, "invalid study cell request");
  }
  return copy_out(study->reports[index].samples, out, capacity);
}

sbk_status sbk_study_write(const sbk_study* study, const char* output_dir) {
  return guarded([&] {
    require(study != nullptr && output_dir != nullptr, "study and output_dir must not be NULL");
    io::write_study(study->reports, output_dir);
  });
}

void sbk_study_free(sbk_study* study) { delete study; }

/* pipeline */

void sbk_pipeline_params_default(sbk_pipeline_params* out) {
  if (!out) return;
  *out = sbk_pipeline_params{30.0, 4, default_d_values, 10, default_p_values, 9, 0, 0,
                             1.0,  1.0, SBK_RANK_MIN_NORM, 101};
}

sbk_status sbk_pipeline_run(const sbk_series* raw, const sbk_pipeline_params* params,
                            sbk_pipeline** out) {
  return guarded([&] {
    require(raw != nullptr && params != nullptr && out != nullptr,
            "raw, params and out must not be NULL");
    require(params->d_values != nullptr && params->d_count > 0, "d_values must be non-empty");
    require(params->p_values != nullptr && params->p_count > 0, "p_values must be non-empty");
    PipelineOptions o;
    o.detrend_bandwidth = params->detrend_bandwidth;
    o.seasonal_lag = params->seasonal_lag;
    o.d_values.assign(params->d_values, params->d_values + params->d_count);
    o.p_values.assign(params->p_values, params->p_values + params->p_count);
    o.skip_log = params->skip_log != 0;
    o.threads = resolve_threads(params->threads);
    o.curve_points = params->curve_points;
    o.model = model_options_of(params->c1, params->c2, params->rank_policy, 0.0);
    *out = new sbk_pipeline{run_pipeline(raw->series, o)};
  });
}

int sbk_pipeline_best_d(const sbk_pipeline* pipeline) {
  return pipeline ? pipeline->report.grid.best_d : 0;
}

int sbk_pipeline_best_p(const sbk_pipeline* pipeline) {
  return pipeline ? pipeline->report.grid.best_p : 0;
}

double sbk_pipeline_best_mse(const sbk_pipeline* pipeline) {
  return pipeline ? pipeline->report.grid.best_mse : kNaN;
}

double sbk_pipeline_mse(const sbk_pipeline* pipeline, int d, int p) {
  if (!pipeline) return kNaN;
  try {
    return pipeline->report.grid.at(d, p);
  } catch (const Error&) {
    return kNaN;
  }
}

size_t sbk_pipeline_failed_cells(const sbk_pipeline* pipeline) {
  return pipeline ? pipeline->report.grid.failures.size() : 0;
}

sbk_status sbk_pipeline_ar1(const sbk_pipeline* pipeline, double* c, double* psi, double* mse) {
  if (!pipeline) return fail(SBK_INVALID_ARGUMENT, "pipeline must not be NULL");
  if (c) *c = pipeline->report.ar1.c;
  if (psi) *psi = pipeline->report.ar1.psi;
  if (mse) *mse = pipeline->report.ar1.mse;
  return SBK_OK;
}

sbk_status sbk_pipeline_write(const sbk_pipeline* pipeline, const char* output_dir) {
  return guarded([&] {
    require(pipeline != nullptr && output_dir != nullptr, "pipeline and output_dir must not be NULL");
    io::write_pipeline(pipeline->report, output_dir);
  });
}

void sbk_pipeline_free(sbk_pipeline* pipeline) { delete pipeline; }

} // extern "C"
