#pragma once

#include "spline.hpp"
#include "timeseries.hpp"

#include <Eigen/Core>

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace sbk {

/// K_h(u) = h^{-1} (15/16) (1 - (u/h)^2)^2 on |u/h| <= 1.
double quartic_kernel(double u, double h);

struct BandwidthOptions {
  double constant = 2.0362; // local-linear rule-of-thumb constant for the quartic kernel
  int grid_min = 20;        // h is clamped to [(b-a)/grid_min, b-a]
};

/// Plug-in bandwidth from a global quartic varying-coefficient pilot
/// y ~ (b0 + b1 u + ... + b4 u^4) x:
///   h = C [ s2 (b - a) / sum_t (m''(u_t) x_t)^2 ]^{1/5}
/// with s2 the pilot residual mean square.
double rule_of_thumb_bandwidth(std::span<const double> u, std::span<const double> x,
                               std::span<const double> y, const BandwidthOptions& options = {});

/// Y^_{gamma,t} = X_t - sum_{alpha != gamma} m_alpha(U_t) X_{t-alpha}, where
/// column alpha-1 of `coefficient_values` holds m_alpha(U_t) for each row.
std::vector<double> pseudo_responses(const LaggedDesign& design,
                                     const Eigen::MatrixXd& coefficient_values, int gamma);
std::vector<double> pseudo_responses(const LaggedDesign& design, const SplinePrefit& prefit,
                                     int gamma);

/// First coordinate of the kernel-weighted least-squares fit of y on
/// (x, x (u - u_query)).
double local_linear_vc(double u_query, std::span<const double> u, std::span<const double> x,
                       std::span<const double> y, double h);

enum class PointStatus { Ok, Widened, Missing };

struct LocalFitPolicy {
  double widen_factor = 1.5;
  int max_widenings = 3;
};

struct SbkEstimate {
  int component = 1;
  std::vector<double> grid;
  std::vector<double> values; // NaN where status is Missing
  std::vector<PointStatus> status;
  double bandwidth = 0.0;
  std::vector<double> pseudo_responses;

  std::size_t missing_count() const;
};

struct SmoothingOptions {
  BandwidthOptions bandwidth;
  LocalFitPolicy local;
};

SbkEstimate sbk_estimate(const LaggedDesign& design, const SplinePrefit& prefit, int gamma,
                         std::span<const double> grid, std::optional<double> h = std::nullopt,
                         const SmoothingOptions& options = {});

/// Same as sbk_estimate with an arbitrary coefficient matrix standing in for
/// the spline pre-estimates.
SbkEstimate sbk_estimate(const LaggedDesign& design, const Eigen::MatrixXd& coefficient_values,
                         int gamma, std::span<const double> grid,
                         std::optional<double> h = std::nullopt,
                         const SmoothingOptions& options = {});

/// Coefficient functions m_alpha(u), alpha is 1-based.
using CoefficientFamily = std::function<double(int alpha, double u)>;

Eigen::MatrixXd evaluate_family(const LaggedDesign& design, const CoefficientFamily& family);

/// Infeasible smoother built from the true nuisance functions.
SbkEstimate oracle_estimate(const LaggedDesign& design, const CoefficientFamily& truth, int gamma,
                            std::span<const double> grid, double h,
                            const SmoothingOptions& options = {});

/// `count` equally spaced points over the central `fraction` of [a, b].
std::vector<double> central_grid(double a, double b, int count, double fraction = 1.0);

} // namespace sbk
