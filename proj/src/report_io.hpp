#pragma once

#include "model_select.hpp"
#include "simulation.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace sbk::io {

/// Shortest round-trip representation; "NA" for NaN.
std::string format_double(double v);
std::string format_fixed(double v, int decimals);

void write_text(const std::filesystem::path& path, const std::string& content);

std::string series_csv(const TimeSeries& series);
/// `t,response` for every finite entry (slot t-1 holds time t).
std::string response_csv(const std::vector<double>& response);
/// Reads a `t,response` file back into a slot-per-time vector of length n.
std::vector<double> read_response_csv(const std::string& path, std::size_t n);

std::string study_samples_csv(const std::vector<EfficiencyReport>& reports);
std::string study_summary_csv(const std::vector<EfficiencyReport>& reports);
std::string density_csv(const DensityCurve& curve);
std::string density_file_name(const EfficiencyReport& report);
std::vector<std::string> write_study(const std::vector<EfficiencyReport>& reports,
                                     const std::filesystem::path& dir);

std::string mse_table_csv(const GridSearchResult& grid);
std::string mse_cells_csv(const GridSearchResult& grid);
std::string pipeline_fitted_csv(const PipelineReport& report);
std::string stages_csv(const PipelineReport& report);
std::string pipeline_json(const PipelineReport& report);
std::string coefficients_csv(const CoefficientCurves& curves);
std::vector<std::string> write_pipeline(const PipelineReport& report,
                                        const std::filesystem::path& dir);

/// `t,actual,sbk_fitted` over the whole input series.
std::string estimate_fitted_csv(const SbkModelFit& fit, std::size_t series_length);

} // namespace sbk::io
