#include "report_io.hpp"

#include "error.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace sbk::io {

std::string format_double(double v) {
  if (std::isnan(v)) return "NA";
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

std::string format_fixed(double v, int decimals) {
  if (std::isnan(v)) return "NA";
  std::array<char, 64> buf{};
  std::snprintf(buf.data(), buf.size(), "%.*f", decimals, v);
  return buf.data();
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw Error(ErrorCode::Io, "write failed for '" + path.string() + "'");
}

std::string series_csv(const TimeSeries& series) {
  std::string out = "t,value\n";
  const auto v = series.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    out += std::to_string(i + 1) + "," + format_double(v[i]) + "\n";
  }
  return out;
}

std::string response_csv(const std::vector<double>& response) {
  std::string out = "t,response\n";
  for (std::size_t i = 0; i < response.size(); ++i) {
    if (std::isfinite(response[i])) out += std::to_string(i + 1) + "," + format_double(response[i]) + "\n";
  }
  return out;
}

std::vector<double> read_response_csv(const std::string& path, std::size_t n) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  std::vector<double> out(n, std::nan(""));
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || (line_no == 1 && line.rfind("t,", 0) == 0)) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw Error(ErrorCode::Parse, "response line " + std::to_string(line_no) + ": expected t,response");
    }
    long t = 0;
    double v = 0.0;
    const auto r1 = std::from_chars(line.data(), line.data() + comma, t);
    const auto r2 = std::from_chars(line.data() + comma + 1, line.data() + line.size(), v);
    if (r1.ec != std::errc() || r2.ec != std::errc() || t < 1) {
      throw Error(ErrorCode::Parse, "response line " + std::to_string(line_no) + ": cannot parse");
    }
    if (static_cast<std::size_t>(t) <= n) out[static_cast<std::size_t>(t) - 1] = v;
  }
  return out;
}

std::string study_samples_csv(const std::vector<EfficiencyReport>& reports) {
  std::string out = "p,n,component,replication,eff\n";
  for (const auto& r : reports) {
    for (std::size_t i = 0; i < r.samples.size(); ++i) {
      out += std::to_string(r.p) + "," + std::to_string(r.n) + "," + std::to_string(r.component) +
             "," + std::to_string(i + 1) + "," + format_double(r.samples[i]) + "\n";
    }
  }
  return out;
}

std::string study_summary_csv(const std::vector<EfficiencyReport>& reports) {
  std::string out = "p,n,component,mode,median,variance,n_failed\n";
  for (const auto& r : reports) {
    out += std::to_string(r.p) + "," + std::to_string(r.n) + "," + std::to_string(r.component) +
           "," + format_double(r.mode) + "," + format_double(r.median) + "," +
           format_double(r.variance) + "," + std::to_string(r.n_failed) + "\n";
  }
  return out;
}

std::string density_csv(const DensityCurve& curve) {
  std::string out = "x,density\n";
  for (std::size_t i = 0; i < curve.x.size(); ++i) {
    out += format_double(curve.x[i]) + "," + format_double(curve.density[i]) + "\n";
  }
  return out;
}

std::string density_file_name(const EfficiencyReport& r) {
  return "density_p" + std::to_string(r.p) + "_n" + std::to_string(r.n) + "_alpha" +
         std::to_string(r.component) + ".csv";
}

std::vector<std::string> write_study(const std::vector<EfficiencyReport>& reports,
                                     const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> files{"samples.csv", "summary.csv"};
  write_text(dir / "samples.csv", study_samples_csv(reports));
  write_text(dir / "summary.csv", study_summary_csv(reports));
  for (const auto& r : reports) {
    if (r.density.x.empty()) continue;
    files.push_back(density_file_name(r));
    write_text(dir / files.back(), density_csv(r.density));
  }
  return files;
}

std::string mse_table_csv(const GridSearchResult& grid) {
  std::string out = "d";
  for (int p : grid.p_values) out += "," + std::to_string(p);
  out += "\n";
  for (std::size_t i = 0; i < grid.d_values.size(); ++i) {
    out += std::to_string(grid.d_values[i]);
    for (double m : grid.mse[i]) out += "," + format_fixed(m, 6);
    out += "\n";
  }
  return out;
}

std::string mse_cells_csv(const GridSearchResult& grid) {
  std::vector<double> ok;
  for (const auto& row : grid.mse) {
    for (double m : row) {
      if (!std::isnan(m)) ok.push_back(m);
    }
  }
  double median = std::nan("");
  if (!ok.empty()) median = median_of(ok);
  std::string out = "d,p,mse,status,extreme\n";
  for (std::size_t i = 0; i < grid.d_values.size(); ++i) {
    for (std::size_t j = 0; j < grid.p_values.size(); ++j) {
      const double m = grid.mse[i][j];
      const bool failed = std::isnan(m);
      const bool extreme = !failed && m > 3.0 * median;
      out += std::to_string(grid.d_values[i]) + "," + std::to_string(grid.p_values[j]) + "," +
             format_double(m) + "," + (failed ? "failed" : "ok") + "," + (extreme ? "1" : "0") + "\n";
    }
  }
  return out;
}

std::string pipeline_fitted_csv(const PipelineReport& report) {
  const auto x = report.transformed.values();
  std::vector<double> sbk(x.size(), std::nan(""));
  const auto& design = report.best_fit.design;
  for (std::size_t i = 0; i < design.times.size(); ++i) {
    sbk[static_cast<std::size_t>(design.times[i]) - 1] = report.best_fit.fitted[i];
  }
  std::string out = "t,actual,sbk_fitted,ar1_fitted\n";
  for (std::size_t t = 0; t < x.size(); ++t) {
    out += std::to_string(t + 1) + "," + format_double(x[t]) + "," + format_double(sbk[t]) + "," +
           format_double(report.ar1.fitted[t]) + "\n";
  }
  return out;
}

std::string stages_csv(const PipelineReport& report) {
  const auto raw = report.raw.values();
  const auto lg = report.logged.values();
  const auto tr = report.trend.values();
  const auto dt = report.detrended.values();
  const auto df = report.transformed.values();
  const auto lag = static_cast<std::size_t>(report.options.seasonal_lag);
  std::string out = "t,raw,log,trend,detrended,differenced\n";
  for (std::size_t t = 0; t < raw.size(); ++t) {
    const double diff = t >= lag ? df[t - lag] : std::nan("");
    out += std::to_string(t + 1) + "," + format_double(raw[t]) + "," + format_double(lg[t]) + "," +
           format_double(tr[t]) + "," + format_double(dt[t]) + "," + format_double(diff) + "\n";
  }
  return out;
}

std::string pipeline_json(const PipelineReport& report) {
  using nlohmann::json;
  const auto& o = report.options;
  json j;
  j["stages"] = {{"log", !o.skip_log},
                 {"detrend_bandwidth", o.detrend_bandwidth},
                 {"seasonal_lag", o.seasonal_lag},
                 {"d_values", o.d_values},
                 {"p_values", o.p_values}};
  j["observations"] = {{"raw", report.raw.size()}, {"transformed", report.transformed.size()}};
  j["best"] = {{"d", report.grid.best_d}, {"p", report.grid.best_p}, {"mse", report.grid.best_mse}};
  j["sbk_mse"] = report.best_fit.mse;
  j["ar1"] = {{"c", report.ar1.c}, {"psi", report.ar1.psi}, {"mse", report.ar1.mse}};
  json failures = json::array();
  for (const auto& f : report.grid.failures) {
    failures.push_back({{"d", f.d}, {"p", f.p}, {"error", f.message}});
  }
  j["failed_cells"] = failures;
  return j.dump(2) + "\n";
}

std::string coefficients_csv(const CoefficientCurves& curves) {
  std::string out = "u";
  for (std::size_t k = 0; k < curves.values.size(); ++k) out += ",m" + std::to_string(k + 1);
  out += "\n";
  for (std::size_t i = 0; i < curves.u.size(); ++i) {
    out += format_double(curves.u[i]);
    for (const auto& v : curves.values) out += "," + format_double(v[i]);
    out += "\n";
  }
  return out;
}

std::vector<std::string> write_pipeline(const PipelineReport& report,
                                        const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::vector<std::pair<std::string, std::string>> files{
      {"mse_table.csv", mse_table_csv(report.grid)},
      {"mse_cells.csv", mse_cells_csv(report.grid)},
      {"fitted.csv", pipeline_fitted_csv(report)},
      {"coefficients.csv", coefficients_csv(report.curves)},
      {"stages.csv", stages_csv(report)},
      {"pipeline.json", pipeline_json(report)},
  };
  std::vector<std::string> names;
  for (const auto& [name, content] : files) {
    write_text(dir / name, content);
    names.push_back(name);
  }
  return names;
}

std::string estimate_fitted_csv(const SbkModelFit& fit, std::size_t series_length) {
  std::vector<double> actual(series_length, std::nan(""));
  std::vector<double> fitted(series_length, std::nan(""));
  for (std::size_t i = 0; i < fit.design.times.size(); ++i) {
    const auto slot = static_cast<std::size_t>(fit.design.times[i]) - 1;
    actual[slot] = fit.design.response(static_cast<Eigen::Index>(i));
    fitted[slot] = fit.fitted[i];
  }
  std::string out = "t,actual,sbk_fitted\n";
  for (std::size_t t = 0; t < series_length; ++t) {
    out += std::to_string(t + 1) + "," + format_double(actual[t]) + "," + format_double(fitted[t]) + "\n";
  }
  return out;
}

} // namespace sbk::io
