#pragma once

#include "timeseries.hpp"

#include <Eigen/Core>

#include <vector>

namespace sbk {

/// Equally spaced knots a = k_0 < ... < k_{N+1} = b carrying N+1 degree-0 bases.
struct KnotGrid {
  double a = 0.0;
  double b = 1.0;
  int interior = 0; // N
  std::vector<double> knots;

  int basis_count() const noexcept { return interior + 1; }
  double width() const noexcept { return (b - a) / static_cast<double>(interior + 1); }
};

KnotGrid make_knot_grid(double a, double b, int interior_knots);

/// N_n = min(floor(c1 * n^(1/4) * ln n) + c2, floor(n / (2d))).
int choose_knot_count(int n, int d, double c1 = 1.0, double c2 = 1.0);

/// Index J of the basis function that is 1 at u. The last interval is closed at b.
int basis_index(const KnotGrid& grid, double u);

/// Dense Hadamard-product design Z; column (N+1)(alpha-1)+J holds B_J(U_t) X_{t-alpha}.
Eigen::MatrixXd build_design(const LaggedDesign& design, const KnotGrid& grid);

enum class RankPolicy {
  Strict,      // rank deficiency is a SingularDesign error
  MinimumNorm, // rank-deficient bins get the minimum-norm least-squares solution
};

struct PrefitOptions {
  RankPolicy rank_policy = RankPolicy::Strict;
};

struct SplinePrefit {
  KnotGrid grid;
  Eigen::VectorXd lambda;         // p(N+1) coefficients, grouped by component
  Eigen::MatrixXd pre_estimates;  // column alpha-1 holds m^_alpha(U_t) at design rows
  std::vector<int> row_bins;      // basis index of each design row
  std::vector<int> deficient_bins;
  double condition_estimate = 0.0; // reciprocal condition number of Z'Z

  double coefficient(int alpha, int bin) const {
    return lambda(static_cast<Eigen::Index>(grid.basis_count()) * (alpha - 1) + bin);
  }
  /// m^_alpha(u) for an arbitrary u in [a, b].
  double evaluate(int alpha, double u) const { return coefficient(alpha, basis_index(grid, u)); }
};

/// Least-squares spline pre-estimation of every coefficient function.
///
/// Because the basis is one-hot, Z'Z is block diagonal with one p x p block per
/// bin, so the problem splits into N+1 independent regressions of the response
/// on the p lags restricted to the rows whose delay falls in that bin. Each is
/// solved by a column-pivoted Householder QR (complete orthogonal
/// decomposition under RankPolicy::MinimumNorm).
SplinePrefit fit_prestep(const LaggedDesign& design, const KnotGrid& grid,
                         const PrefitOptions& options = {});

/// Grid over the design's observed [a, b] with choose_knot_count(rows, d, c1, c2).
KnotGrid default_knot_grid(const LaggedDesign& design, double c1 = 1.0, double c2 = 1.0);

} // namespace sbk
