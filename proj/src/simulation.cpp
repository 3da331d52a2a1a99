#include "simulation.hpp"

#include "error.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

namespace sbk {

int default_thread_count() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void SimulationConfig::validate() const {
  if (p < 1 || d < 1) throw Error(ErrorCode::InvalidArgument, "p and d must be >= 1");
  if (static_cast<int>(amplitudes.size()) != p) {
    throw Error(ErrorCode::InvalidArgument, "need exactly p = " + std::to_string(p) +
                                                " amplitudes, got " +
                                                std::to_string(amplitudes.size()));
  }
  if (!(omega > 0.0)) throw Error(ErrorCode::InvalidArgument, "omega must be positive");
  if (n < 2 * (std::max(p, d) + 1)) {
    throw Error(ErrorCode::InvalidArgument,
                "n must be at least 2 (max(p, d) + 1) = " + std::to_string(2 * (std::max(p, d) + 1)));
  }
  if (burn_in < 0) throw Error(ErrorCode::InvalidArgument, "burn_in must be non-negative");
  if (mode == GeneratorMode::Recursive && burn_in < 100) {
    throw Error(ErrorCode::InvalidArgument, "recursive generation needs burn_in >= 100");
  }
  if (!(noise_scale > 0.0)) throw Error(ErrorCode::InvalidArgument, "noise_scale must be positive");
}

SimulationConfig paper_config(int p) {
  SimulationConfig c;
  if (p == 4) {
    c.omega = 4.5;
  } else if (p == 10) {
    c.omega = 1.5;
  } else {
    throw Error(ErrorCode::InvalidArgument, "paper designs exist for p = 4 and p = 10 only");
  }
  c.p = p;
  c.d = p + 1;
  c.amplitudes.resize(static_cast<std::size_t>(p));
  for (int i = 0; i < p; ++i) c.amplitudes[static_cast<std::size_t>(i)] = i % 2 == 0 ? 0.5 : -0.5;
  return c;
}

double sigma_fn(double u, std::span<const double> recent_lags) {
  const double p = static_cast<double>(recent_lags.size());
  double s = 0.0;
  for (double x : recent_lags) s += std::abs(x);
  const double e = std::exp(s / p);
  return 0.1 * (std::sqrt(p) / 2.0) * u * (5.0 - e) / (5.0 + e);
}

CoefficientFamily true_coefficients(const SimulationConfig& config) {
  return [amps = config.amplitudes, omega = config.omega](int alpha, double u) {
    return amps[static_cast<std::size_t>(alpha - 1)] * std::sin(omega * std::numbers::pi * u);
  };
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double fcar_mean(const SimulationConfig& c, double u, std::span<const double> lags) {
  double m = 0.0;
  const double s = std::sin(c.omega * std::numbers::pi * u);
  for (int alpha = 0; alpha < c.p; ++alpha) {
    m += c.amplitudes[static_cast<std::size_t>(alpha)] * s * lags[static_cast<std::size_t>(alpha)];
  }
  return m;
}

constexpr double explosion_limit = 1e6;
constexpr int max_redraws = 20;

} // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t cell, std::uint64_t replication,
                          std::uint64_t attempt) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ cell);
  h = splitmix64(h ^ replication);
  return splitmix64(h ^ attempt);
}

SimulatedSeries generate_fcar(const SimulationConfig& config) {
  config.validate();
  const int p = config.p;
  const int t0 = std::max(p, config.d) + 1;
  const auto n = static_cast<std::size_t>(config.n);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> lags(static_cast<std::size_t>(p));

  if (config.mode == GeneratorMode::Exogenous) {
    std::mt19937_64 rng(config.seed);
    std::vector<double> x(n);
    for (auto& v : x) v = normal(rng);
    std::vector<double> response(n, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t t = static_cast<std::size_t>(t0); t <= n; ++t) {
      for (int alpha = 1; alpha <= p; ++alpha) lags[static_cast<std::size_t>(alpha - 1)] = x[t - 1 - static_cast<std::size_t>(alpha)];
      const double u = x[t - 1 - static_cast<std::size_t>(config.d)];
      const double eps = config.noise_scale * normal(rng);
      response[t - 1] = fcar_mean(config, u, lags) + sigma_fn(u, lags) * eps;
    }
    return {TimeSeries(std::move(x)), std::move(response), 0};
  }

  const auto warm = static_cast<std::size_t>(t0 - 1);
  const std::size_t total = warm + static_cast<std::size_t>(config.burn_in) + n;
  for (int attempt = 0; attempt <= max_redraws; ++attempt) {
    std::mt19937_64 rng(attempt == 0 ? config.seed : derive_seed(config.seed, 0xE5, 0, attempt));
    std::vector<double> x(total);
    for (std::size_t i = 0; i < warm; ++i) x[i] = normal(rng);
    bool exploded = false;
    for (std::size_t i = warm; i < total; ++i) {
      for (int alpha = 1; alpha <= p; ++alpha) lags[static_cast<std::size_t>(alpha - 1)] = x[i - static_cast<std::size_t>(alpha)];
      const double u = x[i - static_cast<std::size_t>(config.d)];
      const double eps = config.noise_scale * normal(rng);
      x[i] = fcar_mean(config, u, lags) + sigma_fn(u, lags) * eps;
      if (!std::isfinite(x[i]) || std::abs(x[i]) > explosion_limit) {
        exploded = true;
        break;
      }
    }
    if (exploded) continue;
    std::vector<double> kept(x.end() - static_cast<std::ptrdiff_t>(n), x.end());
    std::vector<double> response = kept;
    return {TimeSeries(std::move(kept)), std::move(response), attempt};
  }
  throw Error(ErrorCode::ExplosiveSeries,
              "recursive series exceeded |X_t| > 1e6 after " + std::to_string(max_redraws) +
                  " redraws");
}

LaggedDesign simulated_design(const SimulatedSeries& sim, const FcarSpec& spec) {
  LaggedDesign design = build_lagged_design(sim.series, spec);
  override_response(design, sim.response);
  return design;
}

double relative_efficiency(const SbkEstimate& sbk, const SbkEstimate& oracle,
                           std::span<const double> truth) {
  const auto m = truth.size();
  if (sbk.values.size() != m || oracle.values.size() != m || sbk.grid != oracle.grid) {
    throw Error(ErrorCode::InvalidArgument, "estimates and truth must share one grid");
  }
  // Accumulate in ascending grid order so the result ignores grid orientation.
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return sbk.grid[i] < sbk.grid[j]; });
  double num = 0.0, den = 0.0;
  std::size_t used = 0;
  for (std::size_t i : order) {
    if (sbk.status[i] == PointStatus::Missing || oracle.status[i] == PointStatus::Missing) continue;
    const double es = sbk.values[i] - truth[i];
    const double eo = oracle.values[i] - truth[i];
    num += es * es;
    den += eo * eo;
    ++used;
  }
  if (used == 0) throw Error(ErrorCode::ZeroDenominator, "no grid point is valid in both estimates");
  if (!(den > 0.0)) throw Error(ErrorCode::ZeroDenominator, "oracle reproduces the truth exactly");
  const double mean_n = num / static_cast<double>(used);
  const double mean_d = den / static_cast<double>(used);
  return mean_n / mean_d;
}

double median_of(std::vector<double> samples) {
  if (samples.empty()) throw Error(ErrorCode::InvalidArgument, "median of an empty sample");
  std::sort(samples.begin(), samples.end());
  const auto k = samples.size();
  return k % 2 == 1 ? samples[k / 2] : 0.5 * (samples[k / 2 - 1] + samples[k / 2]);
}

double sample_variance(std::span<const double> samples) {
  const auto k = samples.size();
  if (k < 2) throw Error(ErrorCode::InvalidArgument, "variance needs at least two samples");
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(k);
  double ss = 0.0;
  for (double v : samples) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(k - 1);
}

namespace {

double quantile7(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

} // namespace

double silverman_bandwidth(std::span<const double> samples) {
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double sd = std::sqrt(sample_variance(samples));
  const double iqr = quantile7(sorted, 0.75) - quantile7(sorted, 0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) spread = sd;
  return 0.9 * spread * std::pow(static_cast<double>(samples.size()), -0.2);
}

DensityCurve kde_density(std::span<const double> samples, const ModeOptions& options) {
  if (samples.size() < 2) throw Error(ErrorCode::InvalidArgument, "density needs >= 2 samples");
  if (options.grid_points < 2) throw Error(ErrorCode::InvalidArgument, "density grid needs >= 2 points");
  const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
  DensityCurve curve;
  const auto g = static_cast<std::size_t>(options.grid_points);
  curve.x.resize(g);
  curve.density.assign(g, 0.0);
  const double bw = silverman_bandwidth(samples);
  const double step = (*hi - *lo) / static_cast<double>(g - 1);
  for (std::size_t i = 0; i < g; ++i) curve.x[i] = *lo + step * static_cast<double>(i);
  curve.x.back() = *hi;
  if (!(bw > 0.0)) {
    // Every sample is identical: a point mass.
    curve.density.assign(g, std::numeric_limits<double>::infinity());
    return curve;
  }
  const double norm = 1.0 / (static_cast<double>(samples.size()) * bw * std::sqrt(2.0 * std::numbers::pi));
  for (std::size_t i = 0; i < g; ++i) {
    double acc = 0.0;
    for (double s : samples) {
      const double z = (curve.x[i] - s) / bw;
      acc += std::exp(-0.5 * z * z);
    }
    curve.density[i] = acc * norm;
  }
  return curve;
}

EfficiencySummary summarize_efficiencies(std::span<const double> samples,
                                         const ModeOptions& options) {
  if (samples.size() < 2) throw Error(ErrorCode::InvalidArgument, "summary needs >= 2 samples");
  EfficiencySummary s;
  s.median = median_of(std::vector<double>(samples.begin(), samples.end()));
  s.variance = sample_variance(samples);
  if (!(silverman_bandwidth(samples) > 0.0)) {
    s.mode = samples.front();
    return s;
  }
  const DensityCurve curve = kde_density(samples, options);
  const auto best = std::max_element(curve.density.begin(), curve.density.end());
  s.mode = curve.x[static_cast<std::size_t>(best - curve.density.begin())];
  return s;
}

namespace {

struct ReplicationOutcome {
  std::vector<double> eff;       // one per requested component
  std::vector<double> bandwidth; // one per requested component
  int failures = 0;
  bool ok = false;
};

ReplicationOutcome run_replication(const StudyConfig& config, int n, std::size_t rep,
                                   int failure_budget, const std::vector<double>* fixed_h) {
  ReplicationOutcome out;
  const CoefficientFamily truth = true_coefficients(config.model);
  const FcarSpec spec = config.model.spec();
  for (int attempt = 0; out.failures <= failure_budget; ++attempt) {
    try {
      SimulationConfig sim_cfg = config.model;
      sim_cfg.n = n;
      sim_cfg.seed = derive_seed(config.seed, static_cast<std::uint64_t>(n), rep,
                                 static_cast<std::uint64_t>(attempt));
      const SimulatedSeries sim = generate_fcar(sim_cfg);
      const LaggedDesign design = simulated_design(sim, spec);
      const KnotGrid knots = default_knot_grid(design, config.c1, config.c2);
      const SplinePrefit prefit = fit_prestep(design, knots, config.prefit);
      const Eigen::MatrixXd nuisance =
          config.truth_as_prefit ? evaluate_family(design, truth) : prefit.pre_estimates;
      const auto grid = central_grid(design.a, design.b, config.grid_points, config.central_fraction);

      out.eff.clear();
      out.bandwidth.clear();
      for (std::size_t k = 0; k < config.components.size(); ++k) {
        const int gamma = config.components[k];
        std::optional<double> h;
        if (fixed_h) h = (*fixed_h)[k];
        const SbkEstimate sbk_fit = sbk_estimate(design, nuisance, gamma, grid, h, config.smoothing);
        const SbkEstimate oracle =
            oracle_estimate(design, truth, gamma, grid, sbk_fit.bandwidth, config.smoothing);
        std::vector<double> target(grid.size());
        for (std::size_t g = 0; g < grid.size(); ++g) target[g] = truth(gamma, grid[g]);
        const double e = relative_efficiency(sbk_fit, oracle, target);
        if (!std::isfinite(e)) throw Error(ErrorCode::ZeroDenominator, "non-finite efficiency");
        out.eff.push_back(e);
        out.bandwidth.push_back(sbk_fit.bandwidth);
      }
      out.ok = true;
      return out;
    } catch (const Error&) {
      ++out.failures;
    }
  }
  return out;
}

} // namespace

std::vector<EfficiencyReport> run_study(const StudyConfig& config) {
  config.model.validate();
  if (config.reps < 2) throw Error(ErrorCode::InvalidArgument, "a study needs reps >= 2");
  if (config.components.empty() || config.n_values.empty()) {
    throw Error(ErrorCode::InvalidArgument, "a study needs components and sample sizes");
  }
  for (int c : config.components) {
    if (c < 1 || c > config.model.p) {
      throw Error(ErrorCode::ComponentOutOfRange,
                  "component " + std::to_string(c) + " outside 1.." + std::to_string(config.model.p));
    }
  }
  const int budget = static_cast<int>(std::floor(config.max_failure_fraction * config.reps));

  std::vector<EfficiencyReport> reports;
  for (int n : config.n_values) {
    SimulationConfig check = config.model;
    check.n = n;
    check.validate();

    const auto reps = static_cast<std::size_t>(config.reps);
    std::vector<ReplicationOutcome> outcomes(reps);
    std::vector<double> fixed_h;
    std::size_t start = 0;
    if (!config.bandwidth_per_replication) {
      outcomes[0] = run_replication(config, n, 0, budget, nullptr);
      if (outcomes[0].ok) fixed_h = outcomes[0].bandwidth;
      start = 1;
    }
    const bool use_fixed = !config.bandwidth_per_replication && outcomes[0].ok;
    parallel_for(reps - start, config.threads, [&](std::size_t i) {
      outcomes[start + i] = run_replication(config, n, start + i, budget, use_fixed ? &fixed_h : nullptr);
    });

    int failed = 0;
    bool incomplete = false;
    for (const auto& o : outcomes) {
      failed += o.failures;
      incomplete = incomplete || !o.ok;
    }
    if (incomplete || failed > budget) {
      throw Error(ErrorCode::StudyAborted,
                  "cell n=" + std::to_string(n) + ": " + std::to_string(failed) + " failed draws exceed " +
                      std::to_string(budget) + " (" + std::to_string(config.max_failure_fraction * 100) +
                      "% of reps)");
    }

    for (std::size_t k = 0; k < config.components.size(); ++k) {
      EfficiencyReport r;
      r.p = config.model.p;
      r.n = n;
      r.component = config.components[k];
      r.n_failed = failed;
      r.samples.reserve(reps);
      for (const auto& o : outcomes) r.samples.push_back(o.eff[k]);
      const EfficiencySummary s = summarize_efficiencies(r.samples, config.mode);
      r.mode = s.mode;
      r.median = s.median;
      r.variance = s.variance;
      if (silverman_bandwidth(r.samples) > 0.0) r.density = kde_density(r.samples, config.mode);
      reports.push_back(std::move(r));
    }
  }
  return reports;
}

} // namespace sbk
