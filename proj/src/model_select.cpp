#include "model_select.hpp"

#include "error.hpp"
#include "parallel.hpp"

#include <cmath>
#include <limits>

namespace sbk {

namespace {
constexpr double nan = std::numeric_limits<double>::quiet_NaN();
}

SbkModelFit fit_sbk_model(const LaggedDesign& design, const ModelOptions& options) {
  SbkModelFit fit{design, {}, {}, {}, 0.0, 0};
  const KnotGrid knots = default_knot_grid(design, options.c1, options.c2);
  fit.prefit = fit_prestep(design, knots, options.prefit);

  const std::span<const double> at_sample(design.delay.data(),
                                          static_cast<std::size_t>(design.rows()));
  for (int alpha = 1; alpha <= design.p; ++alpha) {
    fit.components.push_back(
        sbk_estimate(design, fit.prefit, alpha, at_sample, options.bandwidth, options.smoothing));
  }

  fit.fitted.assign(static_cast<std::size_t>(design.rows()), nan);
  double sse = 0.0;
  for (Eigen::Index i = 0; i < design.rows(); ++i) {
    const auto row = static_cast<std::size_t>(i);
    double xhat = 0.0;
    bool complete = true;
    for (int alpha = 1; alpha <= design.p; ++alpha) {
      const auto& c = fit.components[static_cast<std::size_t>(alpha - 1)];
      if (c.status[row] == PointStatus::Missing) {
        complete = false;
        break;
      }
      xhat += c.values[row] * design.lags(i, alpha - 1);
    }
    if (!complete) continue;
    fit.fitted[row] = xhat;
    const double r = design.response(i) - xhat;
    sse += r * r;
    ++fit.scored_rows;
  }
  if (fit.scored_rows == 0) {
    throw Error(ErrorCode::InsufficientLocalData, "no design row could be fitted");
  }
  fit.mse = sse / static_cast<double>(fit.scored_rows);
  return fit;
}

double fit_and_score(const LaggedDesign& design, const ModelOptions& options) {
  return fit_sbk_model(design, options).mse;
}

double fit_and_score(const TimeSeries& series, int d, int p, const ModelOptions& options) {
  return fit_and_score(build_lagged_design(series, FcarSpec(p, d)), options);
}

double GridSearchResult::at(int d, int p) const {
  for (std::size_t i = 0; i < d_values.size(); ++i) {
    for (std::size_t j = 0; j < p_values.size(); ++j) {
      if (d_values[i] == d && p_values[j] == p) return mse[i][j];
    }
  }
  throw Error(ErrorCode::InvalidArgument, "cell not in the grid");
}

void select_best_cell(GridSearchResult& result) {
  bool found = false;
  for (std::size_t i = 0; i < result.d_values.size(); ++i) {
    for (std::size_t j = 0; j < result.p_values.size(); ++j) {
      const double m = result.mse[i][j];
      if (std::isnan(m)) continue;
      const int d = result.d_values[i], p = result.p_values[j];
      const bool better = !found || m < result.best_mse ||
                          (m == result.best_mse &&
                           (p < result.best_p || (p == result.best_p && d < result.best_d)));
      if (better) {
        found = true;
        result.best_mse = m;
        result.best_d = d;
        result.best_p = p;
      }
    }
  }
  if (!found) throw Error(ErrorCode::AllCellsFailed, "every (d, p) cell failed to fit");
}

GridSearchResult grid_search(const TimeSeries& series, const std::vector<int>& d_values,
                             const std::vector<int>& p_values, const ModelOptions& options,
                             int threads) {
  if (d_values.empty() || p_values.empty()) {
    throw Error(ErrorCode::InvalidArgument, "grid search needs non-empty d and p sets");
  }
  GridSearchResult result;
  result.d_values = d_values;
  result.p_values = p_values;
  const std::size_t nd = d_values.size(), np = p_values.size();
  result.mse.assign(nd, std::vector<double>(np, nan));
  std::vector<std::string> messages(nd * np);

  parallel_for(nd * np, threads, [&](std::size_t cell) {
    const std::size_t i = cell / np, j = cell % np;
    try {
      const double m = fit_and_score(series, d_values[i], p_values[j], options);
      if (!std::isfinite(m)) throw Error(ErrorCode::NonFiniteValue, "non-finite MSE");
      result.mse[i][j] = m;
    } catch (const Error& e) {
      messages[cell] = std::string(to_string(e.code())) + ": " + e.what();
    }
  });

  for (std::size_t i = 0; i < nd; ++i) {
    for (std::size_t j = 0; j < np; ++j) {
      if (std::isnan(result.mse[i][j])) {
        result.failures.push_back({d_values[i], p_values[j], messages[i * np + j]});
      }
    }
  }
  select_best_cell(result);
  return result;
}

Ar1Fit fit_ar1(const TimeSeries& series) {
  const auto x = series.values();
  const auto n = x.size();
  if (n < 3) throw Error(ErrorCode::SeriesTooShort, "AR(1) needs at least 3 observations");
  const double m = static_cast<double>(n - 1);
  double mx = 0.0, my = 0.0;
  for (std::size_t t = 1; t < n; ++t) {
    mx += x[t - 1];
    my += x[t];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0, scale = 0.0;
  for (std::size_t t = 1; t < n; ++t) {
    sxx += (x[t - 1] - mx) * (x[t - 1] - mx);
    sxy += (x[t - 1] - mx) * (x[t] - my);
    scale += x[t - 1] * x[t - 1];
  }
  if (!(sxx > 1e-14 * scale) || !(sxx > 0.0)) {
    throw Error(ErrorCode::DegenerateRegressor, "lagged series is constant");
  }
  Ar1Fit fit;
  fit.psi = sxy / sxx;
  fit.c = my - fit.psi * mx;
  fit.fitted.assign(n, nan);
  double sse = 0.0;
  for (std::size_t t = 1; t < n; ++t) {
    fit.fitted[t] = fit.c + fit.psi * x[t - 1];
    const double r = x[t] - fit.fitted[t];
    sse += r * r;
  }
  fit.mse = sse / m;
  return fit;
}

CoefficientCurves coefficient_curves(const SbkModelFit& fit, int points,
                                     const ModelOptions& options) {
  CoefficientCurves curves;
  curves.u = central_grid(fit.design.a, fit.design.b, points, 1.0);
  for (const auto& c : fit.components) {
    curves.values.push_back(sbk_estimate(fit.design, fit.prefit, c.component, curves.u,
                                         c.bandwidth, options.smoothing)
                                .values);
  }
  return curves;
}

namespace {

template <class Fn>
auto staged(const char* stage, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw e.with_stage(stage);
  }
}

} // namespace

PipelineReport run_pipeline(const TimeSeries& raw, const PipelineOptions& options) {
  const TimeSeries logged =
      options.skip_log ? raw : staged("log", [&] { return log_transform(raw); });
  const Decomposition parts =
      staged("detrend", [&] { return kernel_detrend(logged, options.detrend_bandwidth); });
  const TimeSeries transformed =
      staged("difference", [&] { return seasonal_difference(parts.residual, options.seasonal_lag); });
  GridSearchResult grid = staged("grid_search", [&] {
    return grid_search(transformed, options.d_values, options.p_values, options.model, options.threads);
  });
  Ar1Fit ar1 = staged("ar1", [&] { return fit_ar1(transformed); });
  SbkModelFit best = staged("best_fit", [&] {
    return fit_sbk_model(build_lagged_design(transformed, FcarSpec(grid.best_p, grid.best_d)),
                         options.model);
  });
  CoefficientCurves curves =
      staged("best_fit", [&] { return coefficient_curves(best, options.curve_points, options.model); });
  return PipelineReport{options,         raw,           logged,          parts.trend,
                        parts.residual,  transformed,   std::move(grid), std::move(ar1),
                        std::move(best), std::move(curves)};
}

} // namespace sbk
