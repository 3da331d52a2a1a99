#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sbk/sbk.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("sbk_capi_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<double> gdp_like(std::size_t n) {
  std::vector<double> v(n);
  std::uint64_t state = 12345;
  double walk = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    state = state * 6364136223846793005ULL + 1442695040888963407ULL;
    walk += 0.006 * (static_cast<double>(state >> 11) / 9007199254740992.0 - 0.5);
    v[t] = std::exp(3.5 + 0.008 * t + 0.01 * std::sin(std::numbers::pi * t / 2.0) + walk);
  }
  return v;
}

} // namespace

TEST_CASE("status names and version") {
  CHECK(std::string(sbk_status_name(SBK_OK)) == "OK");
  CHECK(std::string(sbk_status_name(SBK_SERIES_TOO_SHORT)) == "SeriesTooShort");
  CHECK(std::string(sbk_status_name(SBK_NON_POSITIVE_VALUE)) == "NonPositiveValue");
  CHECK(std::string(sbk_status_name(SBK_INTERNAL_ERROR)) == "InternalError");
  CHECK(std::string(sbk_version()).size() > 0);
}

TEST_CASE("primitives") {
  CHECK(sbk_quartic_kernel(0.0, 1.0) == 0.9375);
  CHECK(sbk_quartic_kernel(1.0, 1.0) == 0.0);
  CHECK(sbk_choose_knot_count(100, 5, 1.0, 1.0) == 10);
  CHECK(sbk_choose_knot_count(0, 5, 1.0, 1.0) == -1);
}

TEST_CASE("series round trip") {
  const std::vector<double> v{1.0, 2.5, 3.25, 4.0};
  sbk_series* s = nullptr;
  REQUIRE(sbk_series_create(v.data(), v.size(), "2000-Q1", 4, &s) == SBK_OK);
  CHECK(sbk_series_length(s) == 4);
  CHECK(sbk_series_frequency(s) == 4);
  std::vector<double> out(4);
  CHECK(sbk_series_copy_values(s, out.data(), out.size()) == SBK_OK);
  CHECK(out == v);
  CHECK(sbk_series_copy_values(s, out.data(), 2) == SBK_INVALID_ARGUMENT);

  const auto dir = scratch("series");
  const std::string path = (dir / "s.csv").string();
  REQUIRE(sbk_series_write_csv(s, path.c_str()) == SBK_OK);
  sbk_series* back = nullptr;
  REQUIRE(sbk_series_read_csv(path.c_str(), &back) == SBK_OK);
  std::vector<double> again(4);
  CHECK(sbk_series_copy_values(back, again.data(), again.size()) == SBK_OK);
  CHECK(again == v);
  sbk_series_free(back);
  sbk_series_free(s);
}

TEST_CASE("errors set the thread's last error") {
  sbk_series* s = nullptr;
  CHECK(sbk_series_create(nullptr, 3, nullptr, 1, &s) == SBK_INVALID_ARGUMENT);
  CHECK(s == nullptr);
  const double bad[] = {1.0, NAN};
  CHECK(sbk_series_create(bad, 2, nullptr, 1, &s) == SBK_NON_FINITE_VALUE);
  CHECK(std::string(sbk_last_error()).size() > 0);
  CHECK(sbk_series_read_csv("/nonexistent/sbk.csv", &s) == SBK_IO_ERROR);
  CHECK(sbk_series_create(bad, 1, nullptr, 1, nullptr) == SBK_INVALID_ARGUMENT);
  // Free functions accept null.
  sbk_series_free(nullptr);
  sbk_simulation_free(nullptr);
  sbk_fit_free(nullptr);
  sbk_study_free(nullptr);
  sbk_pipeline_free(nullptr);
}

TEST_CASE("simulate and fit") {
  sbk_sim_params sim{};
  REQUIRE(sbk_sim_params_paper(4, &sim) == SBK_OK);
  CHECK(sim.d == 5);
  CHECK(sim.omega == 4.5);
  sim.n = 500;
  sim.seed = 3;
  sbk_simulation* run = nullptr;
  REQUIRE(sbk_simulate(&sim, &run) == SBK_OK);
  const sbk_series* series = sbk_simulation_series(run);
  CHECK(sbk_series_length(series) == 500);
  std::vector<double> response(500);
  REQUIRE(sbk_simulation_copy_response(run, response.data(), response.size()) == SBK_OK);
  CHECK(std::isnan(response[0]));
  CHECK(std::isfinite(response[499]));

  sbk_fit_params fp;
  sbk_fit_params_default(&fp);
  fp.p = 4;
  fp.d = 5;
  sbk_fit* fit = nullptr;
  REQUIRE(sbk_fit_series(series, response.data(), &fp, &fit) == SBK_OK);
  CHECK(sbk_fit_order(fit) == 4);
  CHECK(std::isfinite(sbk_fit_mse(fit)));
  CHECK(sbk_fit_bandwidth(fit, 1) > 0.0);
  CHECK(std::isnan(sbk_fit_bandwidth(fit, 5)));
  const std::size_t len = sbk_fit_curve_length(fit);
  CHECK(len == static_cast<std::size_t>(fp.curve_points));
  std::vector<double> grid(len), curve(len);
  REQUIRE(sbk_fit_copy_curve(fit, 0, grid.data(), len) == SBK_OK);
  REQUIRE(sbk_fit_copy_curve(fit, 1, curve.data(), len) == SBK_OK);
  for (std::size_t i = 1; i < len; ++i) CHECK(grid[i] > grid[i - 1]);
  CHECK(sbk_fit_copy_curve(fit, 5, curve.data(), len) == SBK_COMPONENT_OUT_OF_RANGE);

  const auto dir = scratch("fit");
  CHECK(sbk_fit_write(fit, dir.string().c_str()) == SBK_OK);
  CHECK(fs::exists(dir / "coefficients.csv"));
  CHECK(fs::exists(dir / "fitted.csv"));
  sbk_fit_free(fit);
  sbk_simulation_free(run);
}

TEST_CASE("fit errors") {
  const std::vector<double> v{1, 2, 3, 4, 5};
  sbk_series* s = nullptr;
  REQUIRE(sbk_series_create(v.data(), v.size(), nullptr, 1, &s) == SBK_OK);
  sbk_fit_params fp;
  sbk_fit_params_default(&fp);
  fp.p = 2;
  fp.d = 3;
  sbk_fit* fit = nullptr;
  CHECK(sbk_fit_series(s, nullptr, &fp, &fit) == SBK_SERIES_TOO_SHORT);
  CHECK(fit == nullptr);
  fp.p = 0;
  CHECK(sbk_fit_series(s, nullptr, &fp, &fit) == SBK_INVALID_ARGUMENT);
  sbk_series_free(s);
}

TEST_CASE("explosive recursive draws") {
  sbk_sim_params sim{};
  REQUIRE(sbk_sim_params_paper(4, &sim) == SBK_OK);
  const double big[] = {5.0, 5.0, 5.0, 5.0};
  sim.amplitudes = big;
  sim.mode = SBK_GEN_RECURSIVE;
  sim.n = 200;
  sbk_simulation* run = nullptr;
  CHECK(sbk_simulate(&sim, &run) == SBK_EXPLOSIVE_SERIES);
}

TEST_CASE("study through the C surface") {
  sbk_study_params sp{};
  REQUIRE(sbk_study_params_default(4, &sp) == SBK_OK);
  const int ns[] = {100, 200};
  const int comps[] = {1, 4};
  sp.n_values = ns;
  sp.n_count = 2;
  sp.components = comps;
  sp.component_count = 2;
  sp.reps = 12;
  sp.threads = 2;
  sbk_study* st = nullptr;
  REQUIRE(sbk_study_run(&sp, &st) == SBK_OK);
  REQUIRE(sbk_study_cell_count(st) == 4);
  sbk_cell_summary cell{};
  REQUIRE(sbk_study_cell(st, 3, &cell) == SBK_OK);
  CHECK(cell.n == 200);
  CHECK(cell.component == 4);
  CHECK(cell.samples == 12);
  std::vector<double> samples(12);
  CHECK(sbk_study_copy_samples(st, 3, samples.data(), samples.size()) == SBK_OK);
  CHECK(sbk_study_cell(st, 4, &cell) == SBK_INVALID_ARGUMENT);

  const auto dir = scratch("study");
  CHECK(sbk_study_write(st, dir.string().c_str()) == SBK_OK);
  CHECK(fs::exists(dir / "summary.csv"));
  CHECK(fs::exists(dir / "samples.csv"));
  sbk_study_free(st);

  const int bad[] = {11};
  sbk_study_params p10{};
  REQUIRE(sbk_study_params_default(10, &p10) == SBK_OK);
  p10.components = bad;
  p10.component_count = 1;
  CHECK(sbk_study_run(&p10, &st) == SBK_COMPONENT_OUT_OF_RANGE);
}

TEST_CASE("pipeline through the C surface") {
  const auto v = gdp_like(217);
  sbk_series* raw = nullptr;
  REQUIRE(sbk_series_create(v.data(), v.size(), "1960-Q1", 4, &raw) == SBK_OK);
  sbk_pipeline_params pp;
  sbk_pipeline_params_default(&pp);
  CHECK(pp.detrend_bandwidth == 30.0);
  CHECK(pp.seasonal_lag == 4);
  CHECK(pp.d_count == 10);
  CHECK(pp.p_count == 9);
  sbk_pipeline* pl = nullptr;
  REQUIRE(sbk_pipeline_run(raw, &pp, &pl) == SBK_OK);
  const int d = sbk_pipeline_best_d(pl), p = sbk_pipeline_best_p(pl);
  CHECK(sbk_pipeline_mse(pl, d, p) == sbk_pipeline_best_mse(pl));
  CHECK(std::isnan(sbk_pipeline_mse(pl, 11, 2)));
  double c = 0, psi = 0, mse = 0;
  CHECK(sbk_pipeline_ar1(pl, &c, &psi, &mse) == SBK_OK);
  CHECK(mse > 0.0);
  const auto dir = scratch("pipeline");
  CHECK(sbk_pipeline_write(pl, dir.string().c_str()) == SBK_OK);
  for (const char* f : {"mse_table.csv", "mse_cells.csv", "fitted.csv", "coefficients.csv", "stages.csv",
                        "pipeline.json"}) {
    CHECK(fs::exists(dir / f));
  }
  sbk_pipeline_free(pl);
  sbk_series_free(raw);

  std::vector<double> neg = v;
  neg[41] = -1.0;
  REQUIRE(sbk_series_create(neg.data(), neg.size(), nullptr, 4, &raw) == SBK_OK);
  CHECK(sbk_pipeline_run(raw, &pp, &pl) == SBK_NON_POSITIVE_VALUE);
  CHECK(std::string(sbk_last_error_stage()) == "log");
  CHECK(std::string(sbk_last_error()).find("index 42") != std::string::npos);
  sbk_series_free(raw);
}
