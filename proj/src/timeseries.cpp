#include "timeseries.hpp"

#include "error.hpp"
#include "kernel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace sbk {

TimeSeries::TimeSeries(std::vector<double> values, std::optional<std::string> start_label,
                       int frequency)
    : values_(std::move(values)), start_label_(std::move(start_label)), frequency_(frequency) {
  if (values_.empty()) {
    throw Error(ErrorCode::SeriesTooShort, "time series must be non-empty");
  }
  if (frequency_ < 1) {
    throw Error(ErrorCode::InvalidArgument, "frequency must be a positive integer");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw Error(ErrorCode::NonFiniteValue,
                  "non-finite value at index " + std::to_string(i + 1));
    }
  }
}

TimeSeries TimeSeries::with_values(std::vector<double> values) const {
  return TimeSeries(std::move(values), start_label_, frequency_);
}

FcarSpec::FcarSpec(int order, int delay) : p(order), d(delay) {
  if (p < 1 || d < 1) {
    throw Error(ErrorCode::InvalidArgument, "FCAR order p and delay d must be >= 1");
  }
}

namespace {

double empirical_quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

} // namespace

LaggedDesign build_lagged_design(const TimeSeries& series, const FcarSpec& spec,
                                 std::optional<DelayTrim> trim) {
  const int n = static_cast<int>(series.size());
  const int t0 = spec.t0();
  // At least 2(p+1) design rows.
  const int need = t0 - 1 + 2 * (spec.p + 1);
  if (n < need) {
    throw Error(ErrorCode::SeriesTooShort,
                "series of length " + std::to_string(n) + " is too short for p=" +
                    std::to_string(spec.p) + ", d=" + std::to_string(spec.d) + " (need " +
                    std::to_string(need) + ")");
  }

  std::vector<int> times;
  times.reserve(static_cast<std::size_t>(n - t0 + 1));
  for (int t = t0; t <= n; ++t) times.push_back(t);

  if (trim) {
    if (!(trim->lower_quantile >= 0.0 && trim->lower_quantile < trim->upper_quantile &&
          trim->upper_quantile <= 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "trim quantiles must satisfy 0 <= lo < hi <= 1");
    }
    std::vector<double> u;
    for (int t : times) u.push_back(series.at(static_cast<std::size_t>(t - spec.d)));
    const double lo = empirical_quantile(u, trim->lower_quantile);
    const double hi = empirical_quantile(u, trim->upper_quantile);
    std::erase_if(times, [&](int t) {
      const double v = series.at(static_cast<std::size_t>(t - spec.d));
      return v < lo || v > hi;
    });
    if (static_cast<int>(times.size()) < 2 * (spec.p + 1)) {
      throw Error(ErrorCode::SeriesTooShort, "trimming left too few design rows");
    }
  }

  const auto rows = static_cast<Eigen::Index>(times.size());
  LaggedDesign design;
  design.p = spec.p;
  design.d = spec.d;
  design.t0 = t0;
  design.response.resize(rows);
  design.lags.resize(rows, spec.p);
  design.delay.resize(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto t = static_cast<std::size_t>(times[static_cast<std::size_t>(i)]);
    design.response(i) = series.at(t);
    for (int alpha = 1; alpha <= spec.p; ++alpha) {
      design.lags(i, alpha - 1) = series.at(t - static_cast<std::size_t>(alpha));
    }
    design.delay(i) = series.at(t - static_cast<std::size_t>(spec.d));
  }
  design.times = std::move(times);
  design.a = design.delay.minCoeff();
  design.b = design.delay.maxCoeff();
  return design;
}

void override_response(LaggedDesign& design, std::span<const double> response) {
  for (Eigen::Index i = 0; i < design.rows(); ++i) {
    const auto t = static_cast<std::size_t>(design.times[static_cast<std::size_t>(i)]);
    if (t > response.size()) {
      throw Error(ErrorCode::SeriesTooShort,
                  "response vector has no entry for time " + std::to_string(t));
    }
    const double y = response[t - 1];
    if (!std::isfinite(y)) {
      throw Error(ErrorCode::NonFiniteValue,
                  "non-finite response at time " + std::to_string(t));
    }
    design.response(i) = y;
  }
}

TimeSeries log_transform(const TimeSeries& series) {
  std::vector<double> out;
  out.reserve(series.size());
  const auto v = series.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] > 0.0)) {
      throw Error(ErrorCode::NonPositiveValue,
                  "non-positive value at index " + std::to_string(i + 1));
    }
    out.push_back(std::log(v[i]));
  }
  return series.with_values(std::move(out));
}

Decomposition kernel_detrend(const TimeSeries& series, double bandwidth) {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
    throw Error(ErrorCode::InvalidArgument, "detrend bandwidth must be positive");
  }
  const auto v = series.values();
  const auto n = v.size();
  if (n < 2) throw Error(ErrorCode::SeriesTooShort, "detrend needs at least 2 values");

  std::vector<double> trend(n), residual(n);
  for (std::size_t i = 0; i < n; ++i) {
    // Weighted mean of v[i] - v[j]: exact zero on constant stretches.
    double wsum = 0.0, wdev = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double w = quartic_kernel(static_cast<double>(j) - static_cast<double>(i), bandwidth);
      wsum += w;
      wdev += w * (v[i] - v[j]);
    }
    if (!(wsum > 0.0)) {
      throw Error(ErrorCode::EmptyWindow, "no kernel weight at index " + std::to_string(i + 1));
    }
    double r = wdev / wsum;
    double t = v[i] - r;
    if (t + r != v[i]) r = v[i] - t;
    residual[i] = r;
    trend[i] = t;
  }
  return {series.with_values(std::move(trend)), series.with_values(std::move(residual))};
}

TimeSeries seasonal_difference(const TimeSeries& series, int lag) {
  if (lag < 1) throw Error(ErrorCode::InvalidArgument, "difference lag must be >= 1");
  const auto v = series.values();
  const auto l = static_cast<std::size_t>(lag);
  if (v.size() <= l) {
    throw Error(ErrorCode::SeriesTooShort, "series length " + std::to_string(v.size()) +
                                               " must exceed the difference lag " +
                                               std::to_string(lag));
  }
  std::vector<double> out(v.size() - l);
  for (std::size_t t = 0; t < out.size(); ++t) out[t] = v[t + l] - v[t];
  return series.with_values(std::move(out));
}

std::vector<double> undo_seasonal_difference(std::span<const double> head,
                                             std::span<const double> differences) {
  std::vector<double> out(head.begin(), head.end());
  const auto l = head.size();
  if (l == 0) throw Error(ErrorCode::InvalidArgument, "need at least one seed value");
  out.reserve(l + differences.size());
  for (std::size_t t = 0; t < differences.size(); ++t) out.push_back(out[t] + differences[t]);
  return out;
}

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\"");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\"");
  return std::string(s.substr(first, last - first + 1));
}

std::optional<double> parse_number(const std::string& s) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  if (begin != end && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return v;
}

int frequency_from_label(const std::string& label) {
  // 1960-Q1 / 1960Q1 -> quarterly; 1960-01 -> monthly.
  const auto q = label.find_first_of("Qq");
  if (q != std::string::npos && q + 1 < label.size() && label[q + 1] >= '1' &&
      label[q + 1] <= '4') {
    return 4;
  }
  const auto dash = label.find('-');
  if (dash == 4 && label.size() == 7) return 12;
  return 1;
}

} // namespace

TimeSeries parse_series_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<double> values;
  std::optional<std::string> start_label;
  int columns = 0;
  int line_no = 0;
  bool first_row = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(trim(field));
    if (fields.empty() || fields.size() > 2) {
      throw Error(ErrorCode::Parse, "line " + std::to_string(line_no) +
                                        ": expected `value` or `period,value`");
    }
    const auto value = parse_number(fields.back());
    if (first_row) {
      first_row = false;
      columns = static_cast<int>(fields.size());
      if (!value) continue; // header row
    }
    if (static_cast<int>(fields.size()) != columns) {
      throw Error(ErrorCode::Parse, "line " + std::to_string(line_no) + ": inconsistent column count");
    }
    if (!value) {
      throw Error(ErrorCode::Parse, "line " + std::to_string(line_no) + ": cannot parse value '" +
                                        fields.back() + "'");
    }
    if (!std::isfinite(*value)) {
      throw Error(ErrorCode::NonFiniteValue, "line " + std::to_string(line_no) + ": non-finite value");
    }
    if (columns == 2 && !start_label) start_label = fields.front();
    values.push_back(*value);
  }
  if (values.empty()) throw Error(ErrorCode::Parse, "no observations found");
  const int freq = start_label ? frequency_from_label(*start_label) : 1;
  return TimeSeries(std::move(values), start_label, freq);
}

TimeSeries read_series_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_series_csv(ss.str());
}

} // namespace sbk
