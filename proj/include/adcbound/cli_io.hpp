#ifndef ADCBOUND_CLI_IO_HPP
#define ADCBOUND_CLI_IO_HPP

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "adcbound/closed_loop_sim.hpp"
#include "adcbound/gamma_search.hpp"

namespace adcbound {

struct ModelSpec {
  // Either transfer-function coefficients (descending powers of z) ...
  std::vector<double> num;
  std::vector<double> den;
  // ... or explicit matrices, row-major.
  std::vector<std::vector<double>> A;
  std::vector<double> B;
  std::vector<double> C;

  bool uses_transfer_function() const { return !den.empty(); }
  bool operator==(const ModelSpec&) const = default;
};

struct StripSpec {
  std::vector<double> normal;
  double halfwidth = 0.0;
  bool operator==(const StripSpec&) const = default;
};

struct BoxSpec {
  std::vector<double> lo;
  std::vector<double> hi;
  bool operator==(const BoxSpec&) const = default;
};

struct RegionSpec {
  double eps0 = 0.5;
  int growth = 8;
  std::optional<StripSpec> strip;
  std::optional<BoxSpec> box;  // explicit window override
  bool operator==(const RegionSpec&) const = default;
};

struct SearchSpec {
  double gamma_lo = 0.0;
  double gamma_hi = 1.0;
  double tol_gamma = 0.005;
  bool operator==(const SearchSpec&) const = default;
};

struct CapsSpec {
  int max_iters = 20000;
  double conv_tol = 1e-9;
  double divergence_threshold = 0.0;
  std::uint64_t tile_cap = 2'000'000;
  int max_expansions = 6;
  std::uint64_t memory_cap_mb = 4096;
  bool operator==(const CapsSpec&) const = default;
};

struct SimulationSpec {
  std::int64_t horizon = 100'000;
  std::vector<std::string> adversaries{"first_order_dsm", "constant:0"};
  bool operator==(const SimulationSpec&) const = default;
};

struct RunConfig {
  ModelSpec model;
  std::vector<double> alphabet;
  std::string penalty = "abs";
  std::int64_t D = 1;
  SearchSpec search;
  CapsSpec caps;
  RegionSpec region;
  SimulationSpec simulation;
  int workers = 0;
  std::string output_dir = "out";
  bool operator==(const RunConfig&) const = default;
};

RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& json_text);
std::string config_to_json(const RunConfig& config);

// Everything derived from a config up to the point where the line search can
// start.
struct BuiltSystem {
  SystemModel model;
  QuantizerAlphabet alphabet;
  PenaltyFunction penalty;
  Grid grid;
  TileCoverTest cover;
  std::optional<Vector> axis;
  AlignedBox seed_window;
};

BuiltSystem build_system(const RunConfig& config);

struct SimulationRow {
  std::string adversary;
  double awai = 0.0;
  double margin = 0.0;  // awai - gamma_cert
  std::int64_t excursions = 0;
  double min_running_sum = 0.0;
  std::int64_t horizon = 0;
};

struct RunResult {
  double gamma_cert = 0.0;
  double eta = 0.0;
  double probe_gamma = 0.0;
  std::size_t tile_count = 0;
  std::vector<ProbeRecord> history;
  std::vector<SimulationRow> simulation;
  double seconds = 0.0;
  bool one_sided_bracket = false;
  std::vector<std::string> artifact_paths;
};

// Full pipeline: model -> region -> line search -> certificate -> simulation
// cross-check -> artifact files under out_dir.
RunResult run_solve(const RunConfig& config, const std::string& out_dir,
                    bool trace_progress, std::ostream& log);

// Independent re-check of a stored value function at a claimed gamma.
// Rebuilds the region and transition table from scratch.  Returns 0 when the
// certificate holds.
int run_verify(const RunConfig& config, const std::string& value_csv,
               double gamma, std::optional<double> eta, std::ostream& log);

// Plays a stored control law against the configured adversaries.
int run_simulate(const RunConfig& config, const std::string& law_csv,
                 std::optional<double> gamma, std::optional<std::int64_t> horizon,
                 const std::string& trace_csv, std::int64_t trace_limit,
                 std::ostream& log);

// Artifact helpers (used by run_solve and the tests).
struct StoredValueFunction {
  std::vector<TileCoords> tiles;
  std::vector<double> values;
};
struct StoredControlLaw {
  std::vector<TileCoords> tiles;
  std::vector<std::int32_t> choice;
};

void write_value_function_csv(const std::string& path, const Region& region,
                              const PwcValueFunction& v);
StoredValueFunction read_value_function_csv(const std::string& path, int dim);
void write_control_law_csv(const std::string& path, const Region& region,
                           const PwcControlLaw& law);
StoredControlLaw read_control_law_csv(const std::string& path, int dim);
void write_zero_level_set_csv(const std::string& path, const Region& region,
                              const PwcValueFunction& v);
void write_cross_section_csvs(const std::string& value_path,
                              const std::string& control_path,
                              const Region& region, const PwcValueFunction& v,
                              const PwcControlLaw& law);

std::unique_ptr<AdcInterface> make_adversary(const std::string& name,
                                             const QuantizerAlphabet& alphabet);

}  // namespace adcbound

#endif
