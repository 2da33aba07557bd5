#include <CLI11.hpp>
#include <iostream>

#include "adcbound/cli_io.hpp"

namespace {

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const adcbound::ConfigError*>(&e)) return 4;
  if (dynamic_cast<const adcbound::ModelError*>(&e)) return 4;
  if (dynamic_cast<const adcbound::NoConvergentPoint*>(&e)) return 2;
  if (dynamic_cast<const adcbound::RegionExpansionLimit*>(&e)) return 3;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Certified lower bounds on quantizer performance via robust value "
      "iteration over a tile grid"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  bool trace = false;

  auto* solve = app.add_subcommand(
      "solve", "Run the full pipeline and write the certificate artifacts");
  solve->add_option("config", config_path, "JSON config file")->required();
  solve->add_option("--out", out_dir, "output directory (default: config's)");
  solve->add_flag("--trace", trace, "print iteration progress");

  std::string value_csv;
  double gamma = 0.0;
  double eta_opt = -1.0;
  auto* verify = app.add_subcommand(
      "verify", "Re-check a stored value function against the certificate "
                "inequality");
  verify->add_option("config", config_path, "JSON config file")->required();
  verify->add_option("--value", value_csv, "value function CSV")->required();
  verify->add_option("--gamma", gamma, "claimed certified level")->required();
  verify->add_option("--eta", eta_opt, "slack override");

  std::string law_csv, trace_csv;
  double sim_gamma = -1.0;
  std::int64_t horizon = 0;
  std::int64_t trace_limit = 100000;
  auto* simulate = app.add_subcommand(
      "simulate", "Play a stored input law against the configured adversaries");
  simulate->add_option("config", config_path, "JSON config file")->required();
  simulate->add_option("--law", law_csv, "control law CSV")->required();
  simulate->add_option("--gamma", sim_gamma,
                       "certified level for dissipation accounting");
  simulate->add_option("--horizon", horizon, "simulation horizon override");
  simulate->add_option("--trace-csv", trace_csv, "per-step trace output file");
  simulate->add_option("--trace-limit", trace_limit, "trace row cap");

  CLI11_PARSE(app, argc, argv);

  try {
    adcbound::RunConfig config = adcbound::load_config(config_path);
    if (solve->parsed()) {
      std::string dir = out_dir.empty() ? config.output_dir : out_dir;
      adcbound::run_solve(config, dir, trace, std::cout);
      return 0;
    }
    if (verify->parsed()) {
      std::optional<double> eta;
      if (eta_opt >= 0.0) eta = eta_opt;
      return adcbound::run_verify(config, value_csv, gamma, eta, std::cout);
    }
    std::optional<double> g;
    if (sim_gamma >= 0.0) g = sim_gamma;
    std::optional<std::int64_t> h;
    if (horizon > 0) h = horizon;
    return adcbound::run_simulate(config, law_csv, g, h, trace_csv, trace_limit,
                                  std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
}
