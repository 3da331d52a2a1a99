#pragma once

#include <Eigen/Core>

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace sbk {

/// Ordered, finite, non-empty observations X_1..X_n.
class TimeSeries {
public:
  explicit TimeSeries(std::vector<double> values,
                      std::optional<std::string> start_label = std::nullopt,
                      int frequency = 1);

  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  /// 1-based access, matching the X_t convention.
  double at(std::size_t t) const { return values_.at(t - 1); }
  const std::optional<std::string>& start_label() const noexcept { return start_label_; }
  int frequency() const noexcept { return frequency_; }

  /// Same metadata, new values.
  TimeSeries with_values(std::vector<double> values) const;

private:
  std::vector<double> values_;
  std::optional<std::string> start_label_;
  int frequency_;
};

struct FcarSpec {
  int p = 1;
  int d = 1;

  FcarSpec(int order, int delay);
  /// First usable (1-based) time index.
  int t0() const noexcept { return (p > d ? p : d) + 1; }
};

struct DelayTrim {
  double lower_quantile = 0.0;
  double upper_quantile = 1.0;
};

/// Rows t = t0..n of the FCAR regression. Row i corresponds to time t0 + i.
struct LaggedDesign {
  int p = 0;
  int d = 0;
  int t0 = 0;
  Eigen::VectorXd response;
  Eigen::MatrixXd lags;  // column alpha-1 holds X_{t-alpha}
  Eigen::VectorXd delay; // U_t = X_{t-d}
  std::vector<int> times;
  double a = 0.0;
  double b = 0.0;

  Eigen::Index rows() const noexcept { return response.size(); }
};

LaggedDesign build_lagged_design(const TimeSeries& series, const FcarSpec& spec,
                                 std::optional<DelayTrim> trim = std::nullopt);

/// Replaces the design response with `response[t-1]` for each row time t.
/// Entries outside the design rows are ignored (and may be NaN).
void override_response(LaggedDesign& design, std::span<const double> response);

TimeSeries log_transform(const TimeSeries& series);

struct Decomposition {
  TimeSeries trend;
  TimeSeries residual;
};

/// Nadaraya-Watson trend over the time index 1..n with the quartic kernel.
/// trend + residual reproduces each value exactly whenever a double pair with
/// that sum exists; otherwise (larger term in a higher binade than the value)
/// to within one ulp of the larger term.
Decomposition kernel_detrend(const TimeSeries& series, double bandwidth);

/// Entry t is X_{t+lag} - X_t; the result carries the input metadata.
TimeSeries seasonal_difference(const TimeSeries& series, int lag);

/// Inverse of seasonal_difference given the first `head.size()` originals.
std::vector<double> undo_seasonal_difference(std::span<const double> head,
                                             std::span<const double> differences);

/// One value per line, either `value` or `period,value`; header optional.
TimeSeries parse_series_csv(const std::string& text);
TimeSeries read_series_csv(const std::string& path);

} // namespace sbk
