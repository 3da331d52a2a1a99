#include "spline.hpp"

#include "error.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace sbk {

KnotGrid make_knot_grid(double a, double b, int interior_knots) {
  if (!(std::isfinite(a) && std::isfinite(b)) || !(a < b)) {
    throw Error(ErrorCode::InvalidArgument, "knot grid needs finite a < b");
  }
  if (interior_knots < 0) {
    throw Error(ErrorCode::InvalidArgument, "interior knot count must be non-negative");
  }
  KnotGrid grid;
  grid.a = a;
  grid.b = b;
  grid.interior = interior_knots;
  grid.knots.resize(static_cast<std::size_t>(interior_knots) + 2);
  const double step = grid.width();
  for (int j = 0; j <= interior_knots; ++j) {
    grid.knots[static_cast<std::size_t>(j)] = a + step * static_cast<double>(j);
  }
  grid.knots.back() = b;
  return grid;
}

int choose_knot_count(int n, int d, double c1, double c2) {
  if (n < 2 || d < 1 || !(c1 > 0.0) || !(c2 >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "choose_knot_count needs n >= 2, d >= 1, c1 > 0, c2 >= 0");
  }
  const double nn = static_cast<double>(n);
  const double rate = std::floor(c1 * std::pow(nn, 0.25) * std::log(nn)) + c2;
  const int by_rate = static_cast<int>(std::floor(rate));
  const int cap = n / (2 * d);
  return std::min(by_rate, cap);
}

int basis_index(const KnotGrid& grid, double u) {
  if (!(u >= grid.a && u <= grid.b)) {
    std::ostringstream msg;
    msg << "u = " << u << " lies outside [" << grid.a << ", " << grid.b << "]";
    throw Error(ErrorCode::OutOfRange, msg.str());
  }
  const int last = grid.interior;
  if (u == grid.b) return last;
  int j = static_cast<int>(std::floor((u - grid.a) / grid.width()));
  j = std::clamp(j, 0, last);
  // Division can land one bin off near a knot; settle against the stored knots.
  while (j > 0 && u < grid.knots[static_cast<std::size_t>(j)]) --j;
  while (j < last && u >= grid.knots[static_cast<std::size_t>(j) + 1]) ++j;
  return j;
}

Eigen::MatrixXd build_design(const LaggedDesign& design, const KnotGrid& grid) {
  const Eigen::Index nb = grid.basis_count();
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(design.rows(), nb * design.p);
  for (Eigen::Index i = 0; i < design.rows(); ++i) {
    const Eigen::Index j = basis_index(grid, design.delay(i));
    for (Eigen::Index alpha = 0; alpha < design.p; ++alpha) {
      z(i, nb * alpha + j) = design.lags(i, alpha);
    }
  }
  return z;
}

KnotGrid default_knot_grid(const LaggedDesign& design, double c1, double c2) {
  const int count = choose_knot_count(static_cast<int>(design.rows()), design.d, c1, c2);
  if (!(design.a < design.b)) {
    throw Error(ErrorCode::SingularDesign, "delay variable is constant; no spline basis can be built");
  }
  return make_knot_grid(design.a, design.b, count);
}

SplinePrefit fit_prestep(const LaggedDesign& design, const KnotGrid& grid,
                         const PrefitOptions& options) {
  const int p = design.p;
  const int nb = grid.basis_count();
  const Eigen::Index rows = design.rows();
  if (options.rank_policy == RankPolicy::Strict && rows < static_cast<Eigen::Index>(p) * nb) {
    throw Error(ErrorCode::SingularDesign,
                "design has " + std::to_string(rows) + " rows but " + std::to_string(p * nb) +
                    " spline coefficients");
  }

  SplinePrefit fit;
  fit.grid = grid;
  fit.lambda = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p) * nb);
  fit.row_bins.resize(static_cast<std::size_t>(rows));

  std::vector<std::vector<Eigen::Index>> members(static_cast<std::size_t>(nb));
  for (Eigen::Index i = 0; i < rows; ++i) {
    const int j = basis_index(grid, design.delay(i));
    fit.row_bins[static_cast<std::size_t>(i)] = j;
    members[static_cast<std::size_t>(j)].push_back(i);
  }

  std::ostringstream problems;
  double sv_min = std::numeric_limits<double>::infinity();
  double sv_max = 0.0;
  for (int j = 0; j < nb; ++j) {
    const auto& idx = members[static_cast<std::size_t>(j)];
    const auto k = static_cast<Eigen::Index>(idx.size());
    if (k == 0) {
      fit.deficient_bins.push_back(j);
      problems << " bin " << j << " is empty;";
      sv_min = 0.0;
      continue;
    }
    Eigen::MatrixXd local(k, p);
    Eigen::VectorXd y(k);
    for (Eigen::Index r = 0; r < k; ++r) {
      local.row(r) = design.lags.row(idx[static_cast<std::size_t>(r)]);
      y(r) = design.response(idx[static_cast<std::size_t>(r)]);
    }

    Eigen::VectorXd coef;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(local);
    if (qr.rank() == p) {
      coef = qr.solve(y);
    } else {
      fit.deficient_bins.push_back(j);
      problems << " bin " << j << " has rank " << qr.rank() << " < " << p << " (" << k
               << " rows";
      for (int alpha = 0; alpha < p; ++alpha) {
        if (local.col(alpha).isZero(0.0)) problems << ", lag " << alpha + 1 << " all zero";
      }
      problems << ");";
      if (options.rank_policy == RankPolicy::Strict) continue;
      coef = Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(local).solve(y);
    }
    for (int alpha = 0; alpha < p; ++alpha) {
      fit.lambda(static_cast<Eigen::Index>(nb) * alpha + j) = coef(alpha);
    }

    const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(local).singularValues();
    sv_max = std::max(sv_max, sv.maxCoeff());
    sv_min = std::min(sv_min, k < p ? 0.0 : sv.minCoeff());
  }

  if (options.rank_policy == RankPolicy::Strict && !fit.deficient_bins.empty()) {
    throw Error(ErrorCode::SingularDesign, "spline design is rank deficient:" + problems.str());
  }

  fit.condition_estimate = sv_max > 0.0 ? (sv_min / sv_max) * (sv_min / sv_max) : 0.0;
  fit.pre_estimates.resize(rows, p);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const int j = fit.row_bins[static_cast<std::size_t>(i)];
    for (int alpha = 0; alpha < p; ++alpha) {
      fit.pre_estimates(i, alpha) = fit.lambda(static_cast<Eigen::Index>(nb) * alpha + j);
    }
  }
  return fit;
}

} // namespace sbk
