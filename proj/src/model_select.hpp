#pragma once

#include "kernel.hpp"
#include "spline.hpp"
#include "timeseries.hpp"

#include <optional>
#include <string>
#include <vector>

namespace sbk {

struct ModelOptions {
  double c1 = 1.0;
  double c2 = 1.0;
  PrefitOptions prefit{RankPolicy::MinimumNorm};
  SmoothingOptions smoothing;
  std::optional<double> bandwidth; // rule of thumb per component when empty
};

/// SBK fit of every component, evaluated at the sample delay values.
struct SbkModelFit {
  LaggedDesign design;
  SplinePrefit prefit;
  std::vector<SbkEstimate> components;
  std::vector<double> fitted; // per design row; NaN where any component is missing
  double mse = 0.0;
  std::size_t scored_rows = 0;
};

SbkModelFit fit_sbk_model(const LaggedDesign& design, const ModelOptions& options = {});

double fit_and_score(const LaggedDesign& design, const ModelOptions& options = {});
double fit_and_score(const TimeSeries& series, int d, int p, const ModelOptions& options = {});

struct CellFailure {
  int d = 0;
  int p = 0;
  std::string message;
};

struct GridSearchResult {
  std::vector<int> d_values;
  std::vector<int> p_values;
  std::vector<std::vector<double>> mse; // [d index][p index], NaN when the cell failed
  std::vector<CellFailure> failures;
  int best_d = 0;
  int best_p = 0;
  double best_mse = 0.0;

  double at(int d, int p) const;
};

/// Sets best_* to the smallest non-NaN cell; ties go to smaller p, then smaller d.
void select_best_cell(GridSearchResult& result);

/// Minimum in-sample MSE over (d, p); ties go to smaller p, then smaller d.
GridSearchResult grid_search(const TimeSeries& series, const std::vector<int>& d_values,
                             const std::vector<int>& p_values, const ModelOptions& options = {},
                             int threads = 1);

struct Ar1Fit {
  double c = 0.0;
  double psi = 0.0;
  double mse = 0.0;
  std::vector<double> fitted; // slot t-1 holds the fit for X_t; NaN at t = 1
};

/// Conditional least squares of X_t on (1, X_{t-1}) over t = 2..n.
Ar1Fit fit_ar1(const TimeSeries& series);

struct CoefficientCurves {
  std::vector<double> u;
  std::vector<std::vector<double>> values; // one per component
};

CoefficientCurves coefficient_curves(const SbkModelFit& fit, int points,
                                     const ModelOptions& options = {});

struct PipelineOptions {
  double detrend_bandwidth = 30.0;
  int seasonal_lag = 4;
  std::vector<int> d_values{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<int> p_values{2, 3, 4, 5, 6, 7, 8, 9, 10};
  bool skip_log = false;
  int threads = 1;
  int curve_points = 101;
  ModelOptions model;
};

struct PipelineReport {
  PipelineOptions options;
  TimeSeries raw;
  TimeSeries logged;
  TimeSeries trend;
  TimeSeries detrended;
  TimeSeries transformed; // after the seasonal difference
  GridSearchResult grid;
  Ar1Fit ar1;
  SbkModelFit best_fit;
  CoefficientCurves curves;
};

/// log -> kernel detrend -> seasonal difference -> (d, p) grid search + AR(1).
/// Errors carry the failing stage.
PipelineReport run_pipeline(const TimeSeries& raw, const PipelineOptions& options = {});

} // namespace sbk
