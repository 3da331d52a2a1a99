// sbkfit: command-line front end over the C interface in sbk/sbk.h.

#include "sbk/sbk.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kInternal = 1, kUsage = 2, kData = 3, kNumerical = 4 };

struct CommandError {
  int exit_code;
  std::string message;
};

int exit_code_for(sbk_status s) {
  switch (s) {
  case SBK_OK: return kOk;
  case SBK_INVALID_ARGUMENT:
  case SBK_COMPONENT_OUT_OF_RANGE: return kUsage;
  case SBK_SERIES_TOO_SHORT:
  case SBK_NON_FINITE_VALUE:
  case SBK_NON_POSITIVE_VALUE:
  case SBK_OUT_OF_RANGE:
  case SBK_IO_ERROR:
  case SBK_PARSE_ERROR: return kData;
  case SBK_INTERNAL_ERROR: return kInternal;
  default: return kNumerical;
  }
}

void check(sbk_status s) {
  if (s == SBK_OK) return;
  std::string msg = sbk_status_name(s);
  const std::string stage = sbk_last_error_stage();
  if (!stage.empty()) msg = "[" + stage + "] " + msg;
  msg += ": ";
  msg += sbk_last_error();
  throw CommandError{exit_code_for(s), msg};
}

[[noreturn]] void usage_error(const std::string& msg) { throw CommandError{kUsage, msg}; }

template <class T, void (*Free)(T*)>
struct Handle {
  T* ptr = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(ptr); }
};

using Series = Handle<sbk_series, sbk_series_free>;
using Simulation = Handle<sbk_simulation, sbk_simulation_free>;
using Fit = Handle<sbk_fit, sbk_fit_free>;
using Study = Handle<sbk_study, sbk_study_free>;
using Pipeline = Handle<sbk_pipeline, sbk_pipeline_free>;

sbk_rank_policy rank_policy(const json& p) {
  const auto s = p.at("rank_policy").get<std::string>();
  if (s == "strict") return SBK_RANK_STRICT;
  if (s == "min-norm") return SBK_RANK_MIN_NORM;
  usage_error("--rank-policy must be strict or min-norm");
}

sbk_generator_mode generator_mode(const json& p) {
  const auto s = p.at("mode").get<std::string>();
  if (s == "exogenous") return SBK_GEN_EXOGENOUS;
  if (s == "recursive") return SBK_GEN_RECURSIVE;
  usage_error("--mode must be exogenous or recursive");
}

fs::path output_dir(const json& p) {
  fs::path dir = p.at("output_dir").get<std::string>();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw CommandError{kData, "cannot create output directory '" + dir.string() + "'"};
  return dir;
}

void run_simulate(const json& p) {
  const auto amps = p.at("A").get<std::vector<double>>();
  if (static_cast<int>(amps.size()) != p.at("p").get<int>()) {
    usage_error("--A needs exactly p values");
  }
  sbk_sim_params params{p.at("p"),     p.at("d"),       amps.data(),
                        p.at("omega"), p.at("n"),       p.at("burn_in"),
                        generator_mode(p), p.at("seed").get<std::uint64_t>(), p.at("noise_scale")};
  Simulation sim;
  check(sbk_simulate(&params, &sim.ptr));
  const fs::path dir = output_dir(p);
  const std::string series = (dir / "series.csv").string();
  const std::string response = (dir / "response.csv").string();
  check(sbk_simulation_write_csv(sim.ptr, series.c_str(),
                                 params.mode == SBK_GEN_EXOGENOUS ? response.c_str() : nullptr));
}

std::vector<double> read_response(const std::string& path, std::size_t n) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CommandError{kData, "IoError: cannot open '" + path + "'"};
  std::vector<double> out(n, std::nan(""));
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || (line_no == 1 && line.rfind("t,", 0) == 0)) continue;
    const auto comma = line.find(',');
    try {
      if (comma == std::string::npos) throw std::invalid_argument("missing comma");
      const long t = std::stol(line.substr(0, comma));
      const double v = std::stod(line.substr(comma + 1));
      if (t >= 1 && static_cast<std::size_t>(t) <= n) out[static_cast<std::size_t>(t) - 1] = v;
    } catch (const std::exception&) {
      throw CommandError{kData, "ParseError: " + path + " line " + std::to_string(line_no)};
    }
  }
  return out;
}

void run_estimate(const json& p) {
  const auto input = p.at("input").get<std::string>();
  Series series;
  check(sbk_series_read_csv(input.c_str(), &series.ptr));
  std::vector<double> response;
  const auto response_path = p.at("response").get<std::string>();
  if (!response_path.empty()) response = read_response(response_path, sbk_series_length(series.ptr));

  sbk_fit_params params;
  sbk_fit_params_default(&params);
  params.p = p.at("p");
  params.d = p.at("d");
  params.c1 = p.at("c1");
  params.c2 = p.at("c2");
  params.rank_policy = rank_policy(p);
  params.bandwidth = p.at("bandwidth");
  params.curve_points = p.at("grid");
  Fit fit;
  check(sbk_fit_series(series.ptr, response.empty() ? nullptr : response.data(), &params, &fit.ptr));
  const std::string dir = output_dir(p).string();
  check(sbk_fit_write(fit.ptr, dir.c_str()));
  std::cout << "mse " << sbk_fit_mse(fit.ptr) << "\n";
}

void run_study(const json& p) {
  const int order = p.at("p");
  const auto components = p.at("components").get<std::vector<int>>();
  for (int c : components) {
    if (c < 1 || c > order) usage_error("component " + std::to_string(c) + " is outside 1..p");
  }
  const auto amps = p.at("A").get<std::vector<double>>();
  if (static_cast<int>(amps.size()) != order) usage_error("--A needs exactly p values");
  const auto n_values = p.at("n").get<std::vector<int>>();

  sbk_study_params params{};
  params.model = sbk_sim_params{order,     p.at("d"),       amps.data(),
                                p.at("omega"), n_values.front(), p.at("burn_in"),
                                generator_mode(p), 0,      p.at("noise_scale")};
  params.n_values = n_values.data();
  params.n_count = n_values.size();
  params.reps = p.at("reps");
  params.components = components.data();
  params.component_count = components.size();
  params.seed = p.at("seed").get<std::uint64_t>();
  params.threads = p.at("threads");
  params.c1 = p.at("c1");
  params.c2 = p.at("c2");
  params.rank_policy = rank_policy(p);
  params.grid_points = p.at("grid");
  params.central_fraction = p.at("central_fraction");
  params.bandwidth_per_replication = p.at("fixed_bandwidth").get<bool>() ? 0 : 1;
  Study study;
  check(sbk_study_run(&params, &study.ptr));
  const std::string dir = output_dir(p).string();
  check(sbk_study_write(study.ptr, dir.c_str()));
  std::cout << "p,n,component,mode,median,variance,n_failed\n";
  for (std::size_t i = 0; i < sbk_study_cell_count(study.ptr); ++i) {
    sbk_cell_summary s{};
    check(sbk_study_cell(study.ptr, i, &s));
    std::cout << s.p << "," << s.n << "," << s.component << "," << s.mode << "," << s.median << ","
              << s.variance << "," << s.n_failed << "\n";
  }
}

void run_pipeline(const json& p) {
  const auto input = p.at("input").get<std::string>();
  Series series;
  check(sbk_series_read_csv(input.c_str(), &series.ptr));
  const auto d_values = p.at("d_set").get<std::vector<int>>();
  const auto p_values = p.at("p_set").get<std::vector<int>>();
  sbk_pipeline_params params;
  sbk_pipeline_params_default(&params);
  params.detrend_bandwidth = p.at("bandwidth");
  params.seasonal_lag = p.at("lag");
  params.d_values = d_values.data();
  params.d_count = d_values.size();
  params.p_values = p_values.data();
  params.p_count = p_values.size();
  params.skip_log = p.at("skip_log").get<bool>() ? 1 : 0;
  params.threads = p.at("threads");
  params.c1 = p.at("c1");
  params.c2 = p.at("c2");
  params.rank_policy = rank_policy(p);
  params.curve_points = p.at("grid");
  Pipeline pipeline;
  check(sbk_pipeline_run(series.ptr, &params, &pipeline.ptr));
  const std::string dir = output_dir(p).string();
  check(sbk_pipeline_write(pipeline.ptr, dir.c_str()));
  double c = 0, psi = 0, mse = 0;
  check(sbk_pipeline_ar1(pipeline.ptr, &c, &psi, &mse));
  std::cout << "best d=" << sbk_pipeline_best_d(pipeline.ptr) << " p=" << sbk_pipeline_best_p(pipeline.ptr)
            << " mse=" << sbk_pipeline_best_mse(pipeline.ptr) << "\n"
            << "ar1 c=" << c << " psi=" << psi << " mse=" << mse << "\n";
}

void execute(const std::string& command, const json& params) {
  const auto start = std::chrono::steady_clock::now();
  if (command == "simulate") run_simulate(params);
  else if (command == "estimate") run_estimate(params);
  else if (command == "study") run_study(params);
  else if (command == "pipeline") run_pipeline(params);
  else usage_error("unknown command '" + command + "'");
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  json manifest;
  manifest["command"] = command;
  manifest["parameters"] = params;
  manifest["seed"] = params.contains("seed") ? params.at("seed").get<std::uint64_t>() : 0;
  manifest["tool_version"] = sbk_version();
  manifest["elapsed_seconds"] = elapsed;
  std::ofstream out(output_dir(params) / "manifest.json", std::ios::binary | std::ios::trunc);
  out << manifest.dump(2) << "\n";
  if (!out) throw CommandError{kData, "cannot write manifest.json"};
}

int env_threads() {
  if (const char* v = std::getenv("SBK_THREADS")) {
    try {
      return std::stoi(v);
    } catch (const std::exception&) {
    }
  }
  return 0;
}

std::string absolute(const std::string& path) {
  return path.empty() ? path : fs::absolute(path).lexically_normal().string();
}

std::vector<double> paper_amplitudes(int p) {
  std::vector<double> a(static_cast<std::size_t>(std::max(p, 0)));
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = i % 2 == 0 ? 0.5 : -0.5;
  return a;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spline-backfitted kernel estimation of functional-coefficient autoregressions"};
  app.set_version_flag("--version", std::string(sbk_version()));
  app.require_subcommand(1);

  const int threads_default = env_threads();

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate an FCAR series with sinusoidal coefficients");
  int sim_p = 0, sim_d = 0, sim_n = 0, sim_burn = 200;
  std::vector<double> sim_a;
  double sim_omega = 0, sim_noise = 1.0;
  std::uint64_t sim_seed = 1;
  std::string sim_mode = "exogenous", sim_out = ".";
  sim->add_option("--p", sim_p, "Autoregressive order")->required();
  sim->add_option("--d", sim_d, "Delay (default p + 1)");
  sim->add_option("--A", sim_a, "Amplitudes A_1..A_p")->required()->delimiter(',');
  sim->add_option("--omega", sim_omega, "Frequency omega")->required();
  sim->add_option("--n", sim_n, "Sample size")->required();
  sim->add_option("--seed", sim_seed, "Random seed");
  sim->add_option("--burn-in", sim_burn, "Burn-in steps (recursive mode)");
  sim->add_option("--mode", sim_mode, "exogenous | recursive");
  sim->add_option("--noise-scale", sim_noise, "Standard deviation of the innovations");
  sim->add_option("--output-dir", sim_out, "Output directory");

  // estimate
  auto* est = app.add_subcommand("estimate", "Fit an FCAR model by SBK to a series CSV");
  std::string est_in, est_resp, est_out = ".", est_rank = "min-norm";
  int est_p = 0, est_d = 0, est_grid = 101;
  double est_bw = 0.0, est_c1 = 1.0, est_c2 = 1.0;
  est->add_option("--input", est_in, "Series CSV")->required();
  est->add_option("--response", est_resp, "Optional t,response CSV overriding X_t");
  est->add_option("--p", est_p, "Autoregressive order")->required();
  est->add_option("--d", est_d, "Delay")->required();
  est->add_option("--grid", est_grid, "Points in the coefficient-curve grid");
  est->add_option("--bandwidth", est_bw, "Fixed bandwidth (0 = rule of thumb)");
  est->add_option("--c1", est_c1, "Knot-count constant c1");
  est->add_option("--c2", est_c2, "Knot-count constant c2");
  est->add_option("--rank-policy", est_rank, "strict | min-norm");
  est->add_option("--output-dir", est_out, "Output directory");

  // study
  auto* stu = app.add_subcommand("study", "Monte-Carlo relative-efficiency study");
  int stu_p = 0, stu_d = 0, stu_reps = 500, stu_grid = 101, stu_burn = 200, stu_threads = threads_default;
  std::vector<int> stu_n{100, 500, 1000, 1500}, stu_comp{1, 4};
  std::vector<double> stu_a;
  double stu_omega = 0, stu_noise = 1.0, stu_c1 = 1.0, stu_c2 = 1.0, stu_frac = 0.9;
  std::uint64_t stu_seed = 1;
  std::string stu_mode = "exogenous", stu_rank = "min-norm", stu_out = ".";
  bool stu_fixed_bw = false;
  stu->add_option("--p", stu_p, "Autoregressive order")->required();
  stu->add_option("--d", stu_d, "Delay (default p + 1)");
  stu->add_option("--A", stu_a, "Amplitudes (default alternating +-0.5)")->delimiter(',');
  stu->add_option("--omega", stu_omega, "Frequency (default 4.5 for p=4, 1.5 for p=10)");
  stu->add_option("--n", stu_n, "Sample sizes")->delimiter(',');
  stu->add_option("--reps", stu_reps, "Replications per sample size");
  stu->add_option("--components", stu_comp, "Components to estimate")->delimiter(',');
  stu->add_option("--seed", stu_seed, "Random seed");
  stu->add_option("--threads", stu_threads, "Worker threads (0 = all cores; env SBK_THREADS)");
  stu->add_option("--mode", stu_mode, "exogenous | recursive");
  stu->add_option("--burn-in", stu_burn, "Burn-in steps (recursive mode)");
  stu->add_option("--noise-scale", stu_noise, "Standard deviation of the innovations");
  stu->add_option("--c1", stu_c1, "Knot-count constant c1");
  stu->add_option("--c2", stu_c2, "Knot-count constant c2");
  stu->add_option("--rank-policy", stu_rank, "strict | min-norm");
  stu->add_option("--grid", stu_grid, "Evaluation grid points");
  stu->add_option("--central-fraction", stu_frac, "Central fraction of [a,b] covered by the grid");
  stu->add_flag("--fixed-bandwidth", stu_fixed_bw, "Reuse replication 1's bandwidth for the whole cell");
  stu->add_option("--output-dir", stu_out, "Output directory");

  // pipeline
  auto* pip = app.add_subcommand("pipeline", "log / detrend / difference, then (d,p) selection");
  std::string pip_in, pip_out = ".", pip_rank = "min-norm";
  double pip_bw = 30.0, pip_c1 = 1.0, pip_c2 = 1.0;
  int pip_lag = 4, pip_threads = threads_default, pip_grid = 101;
  std::vector<int> pip_d{1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, pip_p{2, 3, 4, 5, 6, 7, 8, 9, 10};
  bool pip_skip_log = false;
  pip->add_option("--input", pip_in, "Series CSV")->required();
  pip->add_option("--bandwidth", pip_bw, "Detrending bandwidth (index units)");
  pip->add_option("--lag", pip_lag, "Seasonal difference lag");
  pip->add_option("--d-set", pip_d, "Candidate delays")->delimiter(',');
  pip->add_option("--p-set", pip_p, "Candidate orders")->delimiter(',');
  pip->add_flag("--skip-log", pip_skip_log, "Input is already on the log scale");
  pip->add_option("--threads", pip_threads, "Worker threads (0 = all cores; env SBK_THREADS)");
  pip->add_option("--c1", pip_c1, "Knot-count constant c1");
  pip->add_option("--c2", pip_c2, "Knot-count constant c2");
  pip->add_option("--rank-policy", pip_rank, "strict | min-norm");
  pip->add_option("--grid", pip_grid, "Points in the coefficient-curve grid");
  pip->add_option("--output-dir", pip_out, "Output directory");

  // rerun
  auto* rer = app.add_subcommand("rerun", "Repeat a run from its manifest.json");
  std::string rer_manifest, rer_out;
  int rer_threads = -1;
  rer->add_option("manifest", rer_manifest, "manifest.json")->required();
  rer->add_option("--output-dir", rer_out, "Override the output directory");
  rer->add_option("--threads", rer_threads, "Override the thread count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  try {
    std::string command;
    json params;
    if (*sim) {
      command = "simulate";
      params = {{"p", sim_p},          {"d", sim_d > 0 ? sim_d : sim_p + 1}, {"A", sim_a},
                {"omega", sim_omega},  {"n", sim_n},                         {"seed", sim_seed},
                {"burn_in", sim_burn}, {"mode", sim_mode},                   {"noise_scale", sim_noise},
                {"output_dir", absolute(sim_out)}};
    } else if (*est) {
      command = "estimate";
      params = {{"input", absolute(est_in)}, {"response", absolute(est_resp)}, {"p", est_p},
                {"d", est_d},                {"grid", est_grid},             {"bandwidth", est_bw},
                {"c1", est_c1},              {"c2", est_c2},                 {"rank_policy", est_rank},
                {"output_dir", absolute(est_out)}};
    } else if (*stu) {
      command = "study";
      if (stu_a.empty()) stu_a = paper_amplitudes(stu_p);
      if (stu_omega <= 0.0) {
        if (stu_p == 4) stu_omega = 4.5;
        else if (stu_p == 10) stu_omega = 1.5;
        else usage_error("--omega is required unless p is 4 or 10");
      }
      params = {{"p", stu_p},
                {"d", stu_d > 0 ? stu_d : stu_p + 1},
                {"A", stu_a},
                {"omega", stu_omega},
                {"n", stu_n},
                {"reps", stu_reps},
                {"components", stu_comp},
                {"seed", stu_seed},
                {"threads", stu_threads},
                {"mode", stu_mode},
                {"burn_in", stu_burn},
                {"noise_scale", stu_noise},
                {"c1", stu_c1},
                {"c2", stu_c2},
                {"rank_policy", stu_rank},
                {"grid", stu_grid},
                {"central_fraction", stu_frac},
                {"fixed_bandwidth", stu_fixed_bw},
                {"output_dir", absolute(stu_out)}};
    } else if (*pip) {
      command = "pipeline";
      params = {{"input", absolute(pip_in)}, {"bandwidth", pip_bw},     {"lag", pip_lag},
                {"d_set", pip_d},            {"p_set", pip_p},          {"skip_log", pip_skip_log},
                {"threads", pip_threads},    {"c1", pip_c1},            {"c2", pip_c2},
                {"rank_policy", pip_rank},   {"grid", pip_grid},        {"output_dir", absolute(pip_out)}};
    } else {
      std::ifstream in(rer_manifest, std::ios::binary);
      if (!in) throw CommandError{kData, "IoError: cannot open '" + rer_manifest + "'"};
      json manifest;
      try {
        manifest = json::parse(in);
        command = manifest.at("command").get<std::string>();
        params = manifest.at("parameters");
      } catch (const json::exception& e) {
        throw CommandError{kData, std::string("ParseError: invalid manifest: ") + e.what()};
      }
      if (!rer_out.empty()) params["output_dir"] = absolute(rer_out);
      if (rer_threads >= 0 && params.contains("threads")) params["threads"] = rer_threads;
    }
    execute(command, params);
    return kOk;
  } catch (const CommandError& e) {
    std::cerr << "sbkfit: " << e.message << "\n";
    return e.exit_code;
  } catch (const json::exception& e) {
    std::cerr << "sbkfit: invalid parameters: " << e.what() << "\n";
    return kUsage;
  }
}
