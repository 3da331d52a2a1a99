#pragma once

#include "kernel.hpp"
#include "spline.hpp"
#include "timeseries.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace sbk {

enum class GeneratorMode {
  Exogenous, // regressors iid N(0,1), responses built from the FCAR equation
  Recursive, // genuine autoregression with burn-in
};

struct SimulationConfig {
  int p = 4;
  int d = 5;
  std::vector<double> amplitudes{0.5, -0.5, 0.5, -0.5};
  double omega = 4.5;
  int n = 1000;
  int burn_in = 200;
  GeneratorMode mode = GeneratorMode::Exogenous;
  std::uint64_t seed = 1;
  double noise_scale = 1.0;

  void validate() const;
  FcarSpec spec() const { return FcarSpec(p, d); }
};

/// Sinusoidal test designs: p = 4 (d = 5, omega = 4.5) and p = 10 (d = 11, omega = 1.5).
SimulationConfig paper_config(int p);

/// 0.1 (sqrt(p)/2) u (5 - e^s) / (5 + e^s) with s the mean absolute recent lag.
double sigma_fn(double u, std::span<const double> recent_lags);

struct SimulatedSeries {
  TimeSeries series;              // the regressor series X_1..X_n
  std::vector<double> response;   // response at time t in slot t-1; NaN before t0
  int redraws = 0;
};

SimulatedSeries generate_fcar(const SimulationConfig& config);

/// Lagged design with the simulated responses in place of X_t.
LaggedDesign simulated_design(const SimulatedSeries& sim, const FcarSpec& spec);

/// m_alpha(u) = A_alpha sin(omega pi u).
CoefficientFamily true_coefficients(const SimulationConfig& config);

/// Per-replication stream seed derived from (seed, cell, replication, attempt).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t cell, std::uint64_t replication,
                          std::uint64_t attempt);

/// Ratio of SBK to oracle mean squared error against `truth` over the shared
/// grid, skipping points missing in either estimate.
double relative_efficiency(const SbkEstimate& sbk, const SbkEstimate& oracle,
                           std::span<const double> truth);

struct ModeOptions {
  int grid_points = 512;
};

struct EfficiencySummary {
  double mode = 0.0;
  double median = 0.0;
  double variance = 0.0;
};

struct DensityCurve {
  std::vector<double> x;
  std::vector<double> density;
};

double median_of(std::vector<double> samples);
double sample_variance(std::span<const double> samples);
double silverman_bandwidth(std::span<const double> samples);
/// Gaussian KDE with Silverman bandwidth on an equally spaced grid over [min, max].
DensityCurve kde_density(std::span<const double> samples, const ModeOptions& options = {});
EfficiencySummary summarize_efficiencies(std::span<const double> samples,
                                         const ModeOptions& options = {});

struct EfficiencyReport {
  int p = 0;
  int n = 0;
  int component = 0;
  std::vector<double> samples; // indexed by replication
  double mode = 0.0;
  double median = 0.0;
  double variance = 0.0;
  int n_failed = 0;
  DensityCurve density;
};

struct StudyConfig {
  SimulationConfig model = paper_config(4); // n and seed are set per replication
  std::vector<int> n_values{100, 500, 1000, 1500};
  int reps = 500;
  std::vector<int> components{1, 4};
  std::uint64_t seed = 1;
  int threads = 1;
  double c1 = 1.0;
  double c2 = 1.0;
  PrefitOptions prefit{RankPolicy::MinimumNorm};
  SmoothingOptions smoothing;
  ModeOptions mode;
  int grid_points = 101;
  double central_fraction = 0.9;
  bool bandwidth_per_replication = true;
  double max_failure_fraction = 0.2;
  bool truth_as_prefit = false; // test hook: SBK uses the true functions
};

/// Reports ordered by n (as given) then component (as given).
std::vector<EfficiencyReport> run_study(const StudyConfig& config);

} // namespace sbk
