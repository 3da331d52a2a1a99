#include "kernel.hpp"

#include "error.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>

namespace sbk {

double quartic_kernel(double u, double h) {
  const double z = u / h;
  if (std::abs(z) > 1.0) return 0.0;
  const double s = 1.0 - z * z;
  return (15.0 / 16.0) * s * s / h;
}

double rule_of_thumb_bandwidth(std::span<const double> u, std::span<const double> x,
                               std::span<const double> y, const BandwidthOptions& options) {
  const auto n = u.size();
  if (x.size() != n || y.size() != n) {
    throw Error(ErrorCode::InvalidArgument, "bandwidth inputs must have equal length");
  }
  if (n < 10) throw Error(ErrorCode::InvalidArgument, "bandwidth selection needs >= 10 points");
  const auto [lo, hi] = std::minmax_element(u.begin(), u.end());
  const double a = *lo, b = *hi;
  if (!(a < b)) throw Error(ErrorCode::DegeneratePilot, "delay variable is constant");

  // Polynomial in the rescaled variable z = (u - c) / s keeps the pilot well conditioned.
  const double c = 0.5 * (a + b);
  const double s = 0.5 * (b - a);
  const auto rows = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd pilot(rows, 5);
  Eigen::VectorXd target(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double z = (u[static_cast<std::size_t>(i)] - c) / s;
    double zk = x[static_cast<std::size_t>(i)];
    for (int k = 0; k < 5; ++k) {
      pilot(i, k) = zk;
      zk *= z;
    }
    target(i) = y[static_cast<std::size_t>(i)];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(pilot);
  if (qr.rank() < 5) {
    throw Error(ErrorCode::DegeneratePilot, "quartic pilot regression is singular");
  }
  const Eigen::VectorXd beta = qr.solve(target);
  const double rss = (target - pilot * beta).squaredNorm();
  const double sigma2 = rss / static_cast<double>(n - 5);

  double curvature = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = (u[i] - c) / s;
    const double m2 = (2.0 * beta(2) + 6.0 * beta(3) * z + 12.0 * beta(4) * z * z) / (s * s);
    const double term = m2 * x[i];
    curvature += term * term;
  }

  const double lower = (b - a) / static_cast<double>(options.grid_min);
  const double upper = b - a;
  if (!(curvature > 0.0) || !std::isfinite(curvature)) return upper;
  const double h = options.constant * std::pow(sigma2 * (b - a) / curvature, 0.2);
  if (!std::isfinite(h)) return upper;
  return std::clamp(h, lower, upper);
}

std::vector<double> pseudo_responses(const LaggedDesign& design,
                                     const Eigen::MatrixXd& coefficient_values, int gamma) {
  if (gamma < 1 || gamma > design.p) {
    throw Error(ErrorCode::ComponentOutOfRange,
                "component " + std::to_string(gamma) + " outside 1.." + std::to_string(design.p));
  }
  if (coefficient_values.rows() != design.rows() || coefficient_values.cols() != design.p) {
    throw Error(ErrorCode::InvalidArgument, "coefficient matrix does not match the design");
  }
  std::vector<double> out(static_cast<std::size_t>(design.rows()));
  for (Eigen::Index i = 0; i < design.rows(); ++i) {
    double y = design.response(i);
    for (int alpha = 1; alpha <= design.p; ++alpha) {
      if (alpha == gamma) continue;
      y -= coefficient_values(i, alpha - 1) * design.lags(i, alpha - 1);
    }
    out[static_cast<std::size_t>(i)] = y;
  }
  return out;
}

std::vector<double> pseudo_responses(const LaggedDesign& design, const SplinePrefit& prefit,
                                     int gamma) {
  return pseudo_responses(design, prefit.pre_estimates, gamma);
}

double local_linear_vc(double u_query, std::span<const double> u, std::span<const double> x,
                       std::span<const double> y, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw Error(ErrorCode::InvalidArgument, "bandwidth must be positive and finite");
  }
  // Second regressor is x (u - u_query) / h; the rescaling leaves the intercept unchanged.
  Eigen::Matrix2d m = Eigen::Matrix2d::Zero();
  Eigen::Vector2d rhs = Eigen::Vector2d::Zero();
  int in_window = 0;
  for (std::size_t t = 0; t < u.size(); ++t) {
    const double w = quartic_kernel(u[t] - u_query, h);
    if (w <= 0.0) continue;
    ++in_window;
    const double v1 = x[t];
    const double v2 = x[t] * (u[t] - u_query) / h;
    m(0, 0) += w * v1 * v1;
    m(0, 1) += w * v1 * v2;
    m(1, 1) += w * v2 * v2;
    rhs(0) += w * v1 * y[t];
    rhs(1) += w * v2 * y[t];
  }
  if (in_window < 2) {
    throw Error(ErrorCode::InsufficientLocalData,
                std::to_string(in_window) + " observation(s) inside the kernel window");
  }
  m(1, 0) = m(0, 1);
  const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(0, 1);
  if (!(m(0, 0) > 0.0) || !(m(1, 1) > 0.0) || !(det > 1e-12 * m(0, 0) * m(1, 1))) {
    throw Error(ErrorCode::SingularLocalFit, "weighted local-linear system is singular");
  }
  const Eigen::Vector2d coef = m.ldlt().solve(rhs);
  return coef(0);
}

std::size_t SbkEstimate::missing_count() const {
  return static_cast<std::size_t>(std::count(status.begin(), status.end(), PointStatus::Missing));
}

namespace {

std::span<const double> as_span(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

SbkEstimate smooth_on_grid(const LaggedDesign& design, int gamma, std::vector<double> responses,
                           std::span<const double> grid, std::optional<double> h,
                           const SmoothingOptions& options) {
  const Eigen::VectorXd xg = design.lags.col(gamma - 1);
  const auto u = as_span(design.delay);
  const auto x = as_span(xg);

  SbkEstimate est;
  est.component = gamma;
  est.bandwidth = h ? *h : rule_of_thumb_bandwidth(u, x, responses, options.bandwidth);
  if (!(est.bandwidth > 0.0) || !std::isfinite(est.bandwidth)) {
    throw Error(ErrorCode::InvalidArgument, "bandwidth must be positive and finite");
  }
  est.grid.assign(grid.begin(), grid.end());
  est.values.resize(grid.size());
  est.status.resize(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (!(grid[g] >= design.a && grid[g] <= design.b)) {
      throw Error(ErrorCode::OutOfRange, "evaluation point outside [a, b]");
    }
    double width = est.bandwidth;
    est.status[g] = PointStatus::Missing;
    est.values[g] = std::numeric_limits<double>::quiet_NaN();
    for (int attempt = 0; attempt <= options.local.max_widenings; ++attempt) {
      try {
        est.values[g] = local_linear_vc(grid[g], u, x, responses, width);
        est.status[g] = attempt == 0 ? PointStatus::Ok : PointStatus::Widened;
        break;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::InsufficientLocalData &&
            e.code() != ErrorCode::SingularLocalFit) {
          throw;
        }
        width *= options.local.widen_factor;
      }
    }
  }
  est.pseudo_responses = std::move(responses);
  return est;
}

} // namespace

SbkEstimate sbk_estimate(const LaggedDesign& design, const Eigen::MatrixXd& coefficient_values,
                         int gamma, std::span<const double> grid, std::optional<double> h,
                         const SmoothingOptions& options) {
  return smooth_on_grid(design, gamma, pseudo_responses(design, coefficient_values, gamma), grid,
                        h, options);
}

SbkEstimate sbk_estimate(const LaggedDesign& design, const SplinePrefit& prefit, int gamma,
                         std::span<const double> grid, std::optional<double> h,
                         const SmoothingOptions& options) {
  return sbk_estimate(design, prefit.pre_estimates, gamma, grid, h, options);
}

Eigen::MatrixXd evaluate_family(const LaggedDesign& design, const CoefficientFamily& family) {
  Eigen::MatrixXd values(design.rows(), design.p);
  for (Eigen::Index i = 0; i < design.rows(); ++i) {
    for (int alpha = 1; alpha <= design.p; ++alpha) {
      values(i, alpha - 1) = family(alpha, design.delay(i));
    }
  }
  return values;
}

SbkEstimate oracle_estimate(const LaggedDesign& design, const CoefficientFamily& truth, int gamma,
                            std::span<const double> grid, double h,
                            const SmoothingOptions& options) {
  return sbk_estimate(design, evaluate_family(design, truth), gamma, grid, h, options);
}

std::vector<double> central_grid(double a, double b, int count, double fraction) {
  if (count < 1) throw Error(ErrorCode::InvalidArgument, "grid needs at least one point");
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "grid fraction must lie in (0, 1]");
  }
  const double margin = 0.5 * (1.0 - fraction) * (b - a);
  const double lo = a + margin;
  const double hi = b - margin;
  std::vector<double> grid(static_cast<std::size_t>(count));
  if (count == 1) {
    grid[0] = 0.5 * (lo + hi);
    return grid;
  }
  const double step = (hi - lo) / static_cast<double>(count - 1);
  for (int i = 0; i < count; ++i) grid[static_cast<std::size_t>(i)] = lo + step * i;
  grid.back() = hi;
  return grid;
}

} // namespace sbk
