#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "support.hpp"
#include "adcbound/cli_io.hpp"

using namespace adcbound;
using namespace adcbound::testing;

namespace {

std::string example_config_text(int D, const std::string& out_dir) {
  std::ostringstream oss;
  oss << R"({
  "model": {"num": [1, 1], "den": [1, -1, 0]},
  "alphabet": [-1.5, 0, 1.5],
  "penalty": "abs",
  "D": )"
      << D << R"(,
  "search": {"gamma_lo": 0.0, "gamma_hi": 1.1875, "tol_gamma": 0.005},
  "caps": {"max_iters": 20000, "conv_tol": 1e-9},
  "region": {"eps0": 0.5, "growth": 8,
             "strip": {"normal": [1, -1], "halfwidth": 2.5}},
  "simulation": {"horizon": 100000,
                 "adversaries": ["first_order_dsm", "constant:0"]},
  "workers": 2,
  "output_dir": ")"
      << out_dir << R"("
})";
  return oss.str();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config parsing and validation") {
  RunConfig cfg = parse_config(example_config_text(64, "out"));
  CHECK(cfg.D == 64);
  CHECK(cfg.model.num == std::vector<double>{1.0, 1.0});
  CHECK(cfg.search.gamma_hi == 1.1875);
  CHECK(cfg.region.strip.has_value());
  CHECK(cfg.simulation.adversaries.size() == 2);

  CHECK_THROWS_AS(parse_config("{"), ConfigError);
  CHECK_THROWS_AS(parse_config("{}"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"model": {"num": [1], "den": [1, 0]},
    "alphabet": [-1.5, 1.5]})"),
                  ConfigError);  // no D
  CHECK_THROWS_AS(
      parse_config(R"({"model": {"num": [1], "den": [1, 0], "A": [[0]],
        "B": [1], "C": [1]}, "alphabet": [-1.5, 1.5], "D": 4})"),
      ConfigError);  // both forms given
}

TEST_CASE("alphabet that fails to bracket the input range is rejected") {
  RunConfig cfg = parse_config(example_config_text(8, "out"));
  cfg.alphabet = {-0.5, 0.5};
  CHECK_THROWS_AS(build_system(cfg), ModelError);
}

TEST_CASE("non-invariant strips are rejected at build time") {
  RunConfig cfg = parse_config(example_config_text(8, "out"));
  cfg.region.strip->halfwidth = 2.0;
  CHECK_THROWS_AS(build_system(cfg), ConfigError);
}

TEST_CASE("config round-trips through its JSON form") {
  RunConfig cfg = parse_config(example_config_text(64, "somewhere"));
  RunConfig again = parse_config(config_to_json(cfg));
  CHECK(cfg == again);

  RunConfig mat = parse_config(R"({
    "model": {"A": [[0.5]], "B": [1], "C": [1]},
    "alphabet": [-2, 2], "D": 4,
    "search": {"gamma_lo": 0, "gamma_hi": 0.7, "tol_gamma": 0.01}
  })");
  CHECK(mat == parse_config(config_to_json(mat)));
}

TEST_CASE("value function files round-trip at full precision") {
  SystemModel m = example_model();
  Grid g(8, 2);
  AlignedBox window;
  window.lo = Vector::Constant(2, -1.0);
  window.hi = Vector::Constant(2, 1.0);
  auto region = std::make_shared<const Region>(
      g, window, cover_test_strip(example_strip()));

  PwcValueFunction v;
  v.values.resize(region->tile_count());
  std::mt19937 rng(7);
  for (auto& x : v.values)
    x = static_cast<double>(rng()) / static_cast<double>(rng.max()) / 3.0;

  auto dir = std::filesystem::temp_directory_path() / "adcbound_csv_test";
  std::filesystem::create_directories(dir);
  std::string path = (dir / "v.csv").string();
  write_value_function_csv(path, *region, v);
  StoredValueFunction stored = read_value_function_csv(path, 2);
  REQUIRE(stored.tiles.size() == region->tile_count());
  for (std::size_t i = 0; i < stored.tiles.size(); ++i) {
    CHECK(stored.tiles[i] == region->tiles()[i]);
    CHECK(stored.values[i] == v.values[i]);
  }
}

TEST_CASE("zero level set of the zero function is empty") {
  SystemModel m = example_model();
  Grid g(8, 2);
  AlignedBox window;
  window.lo = Vector::Constant(2, -1.0);
  window.hi = Vector::Constant(2, 1.0);
  auto region = std::make_shared<const Region>(
      g, window, cover_test_strip(example_strip()));
  PwcValueFunction v;
  v.values.assign(region->tile_count(), 0.0);

  auto dir = std::filesystem::temp_directory_path() / "adcbound_zls_test";
  std::filesystem::create_directories(dir);
  std::string path = (dir / "zls.csv").string();
  write_zero_level_set_csv(path, *region, v);
  std::string text = read_file(path);
  CHECK(std::count(text.begin(), text.end(), '\n') == 1);  // header only
}

TEST_CASE("one-dimensional cross sections degenerate to the full table") {
  SystemModel m = toy_model();
  Grid g(4, 1);
  auto region = box_region(g, 2.0);
  PwcValueFunction v;
  v.values.assign(region->tile_count(), 0.25);
  PwcControlLaw law;
  law.choice.assign(region->tile_count(), 0);

  auto dir = std::filesystem::temp_directory_path() / "adcbound_xs_test";
  std::filesystem::create_directories(dir);
  std::string vp = (dir / "xv.csv").string();
  std::string kp = (dir / "xk.csv").string();
  write_cross_section_csvs(vp, kp, *region, v, law);
  std::string text = read_file(vp);
  CHECK(std::count(text.begin(), text.end(), '\n') ==
        static_cast<long>(region->tile_count()) + 1);
}

TEST_CASE("tiny end-to-end solve at unit grid density") {
  auto dir = std::filesystem::temp_directory_path() / "adcbound_d1_test";
  std::filesystem::create_directories(dir);
  RunConfig cfg = parse_config(example_config_text(1, (dir / "out").string()));
  cfg.search.gamma_hi = 0.01;
  cfg.search.tol_gamma = 0.005;
  cfg.workers = 1;

  std::ostringstream log;
  auto t0 = std::chrono::steady_clock::now();
  RunResult res = run_solve(cfg, (dir / "out").string(), false, log);
  double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  CHECK(res.gamma_cert >= 0.0);
  CHECK(secs < 1.0);
  for (const auto& p : res.artifact_paths)
    CHECK(std::filesystem::exists(p));
}

TEST_CASE("solve, audit and tamper with a small certificate") {
  auto dir = std::filesystem::temp_directory_path() / "adcbound_verify_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  RunConfig cfg = parse_config(example_config_text(8, (dir / "out").string()));
  cfg.workers = 2;

  std::ostringstream log;
  RunResult res = run_solve(cfg, (dir / "out").string(), false, log);
  CHECK(res.gamma_cert > 0.3);

  std::string value_csv = (dir / "out" / "value_function.csv").string();
  CHECK(run_verify(cfg, value_csv, res.gamma_cert, std::nullopt, log) == 0);

  // A claim above the certified level must fail.
  CHECK(run_verify(cfg, value_csv, res.gamma_cert + 0.2, std::nullopt, log) == 1);

  // Lowering one positive tile beyond the slack must fail with a witness.
  StoredValueFunction stored = read_value_function_csv(value_csv, 2);
  std::size_t peak = 0;
  for (std::size_t i = 0; i < stored.values.size(); ++i)
    if (stored.values[i] > stored.values[peak]) peak = i;
  REQUIRE(stored.values[peak] > 0.0);
  stored.values[peak] -= res.eta + 1e-6;
  std::string tampered = (dir / "tampered.csv").string();
  {
    std::ofstream out(tampered);
    out << "c0,c1,x0,x1,value\n";
    for (std::size_t i = 0; i < stored.tiles.size(); ++i) {
      out << stored.tiles[i][0] << ',' << stored.tiles[i][1] << ",0,0,";
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.17g", stored.values[i]);
      out << buf << '\n';
    }
  }
  std::ostringstream log2;
  CHECK(run_verify(cfg, tampered, res.gamma_cert, std::nullopt, log2) == 1);
  CHECK(log2.str().find("inequality violated") != std::string::npos);
}

TEST_CASE("two solves of one config produce identical value files") {
  auto dir = std::filesystem::temp_directory_path() / "adcbound_det_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  RunConfig cfg = parse_config(example_config_text(8, "unused"));
  cfg.workers = 3;

  std::ostringstream log;
  run_solve(cfg, (dir / "a").string(), false, log);
  run_solve(cfg, (dir / "b").string(), false, log);
  CHECK(read_file((dir / "a" / "value_function.csv").string()) ==
        read_file((dir / "b" / "value_function.csv").string()));
  CHECK(read_file((dir / "a" / "control_law.csv").string()) ==
        read_file((dir / "b" / "control_law.csv").string()));
}

TEST_CASE("simulate subcommand plays a stored law") {
  auto dir = std::filesystem::temp_directory_path() / "adcbound_sim_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  RunConfig cfg = parse_config(example_config_text(8, (dir / "out").string()));
  cfg.workers = 2;
  cfg.simulation.horizon = 5000;

  std::ostringstream log;
  RunResult res = run_solve(cfg, (dir / "out").string(), false, log);
  std::string law_csv = (dir / "out" / "control_law.csv").string();
  std::ostringstream sim_log;
  int code = run_simulate(cfg, law_csv, res.gamma_cert, std::nullopt, "", 0,
                          sim_log);
  CHECK(code == 0);
  CHECK(sim_log.str().find("first_order_dsm") != std::string::npos);
}
