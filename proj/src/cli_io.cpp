#include "adcbound/cli_io.hpp"

#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

namespace adcbound {

using nlohmann::json;

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<double> as_doubles(const json& j, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + " must be an array");
  std::vector<double> out;
  for (const auto& e : j) {
    if (!e.is_number()) throw ConfigError(what + " must hold numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

const json* find(const json& j, const char* key) {
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");

  RunConfig cfg;
  const json* model = find(j, "model");
  if (!model || !model->is_object())
    throw ConfigError("config needs a model object");
  if (const json* num = find(*model, "num")) cfg.model.num = as_doubles(*num, "model.num");
  if (const json* den = find(*model, "den")) cfg.model.den = as_doubles(*den, "model.den");
  if (const json* a = find(*model, "A")) {
    if (!a->is_array()) throw ConfigError("model.A must be an array of rows");
    for (const auto& row : *a) cfg.model.A.push_back(as_doubles(row, "model.A row"));
  }
  if (const json* b = find(*model, "B")) cfg.model.B = as_doubles(*b, "model.B");
  if (const json* c = find(*model, "C")) cfg.model.C = as_doubles(*c, "model.C");
  bool tf = !cfg.model.den.empty();
  bool ss = !cfg.model.A.empty();
  if (tf == ss)
    throw ConfigError("model must give either num/den or A/B/C, not both");

  const json* alphabet = find(j, "alphabet");
  if (!alphabet) throw ConfigError("config needs an alphabet array");
  cfg.alphabet = as_doubles(*alphabet, "alphabet");

  if (const json* p = find(j, "penalty")) {
    if (!p->is_string()) throw ConfigError("penalty must be a string");
    cfg.penalty = p->get<std::string>();
  }
  (void)PenaltyFunction::from_string(cfg.penalty);  // validate

  const json* d = find(j, "D");
  if (!d || !d->is_number_integer())
    throw ConfigError("config needs an integer grid density D");
  cfg.D = d->get<std::int64_t>();
  if (cfg.D < 1) throw ConfigError("D must be >= 1");

  if (const json* s = find(j, "search")) {
    if (const json* v = find(*s, "gamma_lo")) cfg.search.gamma_lo = v->get<double>();
    if (const json* v = find(*s, "gamma_hi")) cfg.search.gamma_hi = v->get<double>();
    if (const json* v = find(*s, "tol_gamma")) cfg.search.tol_gamma = v->get<double>();
  }
  if (!(cfg.search.gamma_lo < cfg.search.gamma_hi))
    throw ConfigError("search bounds must satisfy gamma_lo < gamma_hi");
  if (!(cfg.search.tol_gamma > 0.0)) throw ConfigError("tol_gamma must be positive");
  if (cfg.search.gamma_lo < 0.0) throw ConfigError("gamma_lo must be >= 0");

  if (const json* c = find(j, "caps")) {
    if (const json* v = find(*c, "max_iters")) cfg.caps.max_iters = v->get<int>();
    if (const json* v = find(*c, "conv_tol")) cfg.caps.conv_tol = v->get<double>();
    if (const json* v = find(*c, "divergence_threshold"))
      cfg.caps.divergence_threshold = v->get<double>();
    if (const json* v = find(*c, "tile_cap")) cfg.caps.tile_cap = v->get<std::uint64_t>();
    if (const json* v = find(*c, "max_expansions"))
      cfg.caps.max_expansions = v->get<int>();
    if (const json* v = find(*c, "memory_cap_mb"))
      cfg.caps.memory_cap_mb = v->get<std::uint64_t>();
  }
  if (cfg.caps.max_iters < 1 || cfg.caps.conv_tol <= 0.0)
    throw ConfigError("caps must be positive");

  if (const json* r = find(j, "region")) {
    if (const json* v = find(*r, "eps0")) cfg.region.eps0 = v->get<double>();
    if (const json* v = find(*r, "growth")) cfg.region.growth = v->get<int>();
    if (const json* s = find(*r, "strip")) {
      StripSpec strip;
      const json* n = find(*s, "normal");
      const json* h = find(*s, "halfwidth");
      if (!n || !h) throw ConfigError("region.strip needs normal and halfwidth");
      strip.normal = as_doubles(*n, "region.strip.normal");
      strip.halfwidth = h->get<double>();
      cfg.region.strip = strip;
    }
    if (const json* b = find(*r, "box")) {
      BoxSpec box;
      const json* lo = find(*b, "lo");
      const json* hi = find(*b, "hi");
      if (!lo || !hi) throw ConfigError("region.box needs lo and hi");
      box.lo = as_doubles(*lo, "region.box.lo");
      box.hi = as_doubles(*hi, "region.box.hi");
      cfg.region.box = box;
    }
  }
  if (!(cfg.region.eps0 > 0.0)) throw ConfigError("eps0 must be positive");
  if (cfg.region.growth < 1) throw ConfigError("growth must be >= 1");

  if (const json* s = find(j, "simulation")) {
    if (const json* v = find(*s, "horizon")) cfg.simulation.horizon = v->get<std::int64_t>();
    if (const json* v = find(*s, "adversaries")) {
      cfg.simulation.adversaries.clear();
      for (const auto& a : *v) cfg.simulation.adversaries.push_back(a.get<std::string>());
    }
  }
  if (cfg.simulation.horizon < 1) throw ConfigError("simulation horizon must be >= 1");

  if (const json* w = find(j, "workers")) cfg.workers = w->get<int>();
  if (const json* o = find(j, "output_dir")) cfg.output_dir = o->get<std::string>();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

namespace {

json config_json(const RunConfig& c) {
  json j;
  json model;
  if (c.model.uses_transfer_function()) {
    model["num"] = c.model.num;
    model["den"] = c.model.den;
  } else {
    model["A"] = c.model.A;
    model["B"] = c.model.B;
    model["C"] = c.model.C;
  }
  j["model"] = model;
  j["alphabet"] = c.alphabet;
  j["penalty"] = c.penalty;
  j["D"] = c.D;
  j["search"] = {{"gamma_lo", c.search.gamma_lo},
                 {"gamma_hi", c.search.gamma_hi},
                 {"tol_gamma", c.search.tol_gamma}};
  j["caps"] = {{"max_iters", c.caps.max_iters},
               {"conv_tol", c.caps.conv_tol},
               {"divergence_threshold", c.caps.divergence_threshold},
               {"tile_cap", c.caps.tile_cap},
               {"max_expansions", c.caps.max_expansions},
               {"memory_cap_mb", c.caps.memory_cap_mb}};
  json region = {{"eps0", c.region.eps0}, {"growth", c.region.growth}};
  if (c.region.strip)
    region["strip"] = {{"normal", c.region.strip->normal},
                       {"halfwidth", c.region.strip->halfwidth}};
  if (c.region.box)
    region["box"] = {{"lo", c.region.box->lo}, {"hi", c.region.box->hi}};
  j["region"] = region;
  j["simulation"] = {{"horizon", c.simulation.horizon},
                     {"adversaries", c.simulation.adversaries}};
  j["workers"] = c.workers;
  j["output_dir"] = c.output_dir;
  return j;
}

}  // namespace

std::string config_to_json(const RunConfig& config) {
  return config_json(config).dump(2);
}

BuiltSystem build_system(const RunConfig& config) {
  SystemModel model = [&] {
    if (config.model.uses_transfer_function())
      return canonical_realization(config.model.num, config.model.den);
    int m = static_cast<int>(config.model.A.size());
    Matrix A(m, m);
    for (int i = 0; i < m; ++i) {
      if (static_cast<int>(config.model.A[i].size()) != m)
        throw ConfigError("model.A must be square");
      for (int k = 0; k < m; ++k) A(i, k) = config.model.A[i][k];
    }
    if (static_cast<int>(config.model.B.size()) != m ||
        static_cast<int>(config.model.C.size()) != m)
      throw ConfigError("model.B and model.C must match the state dimension");
    Vector B(m);
    RowVector C(m);
    for (int i = 0; i < m; ++i) {
      B[i] = config.model.B[i];
      C[i] = config.model.C[i];
    }
    return SystemModel(A, B, C);
  }();

  QuantizerAlphabet alphabet(config.alphabet);
  PenaltyFunction penalty = PenaltyFunction::from_string(config.penalty);
  Grid grid(config.D, model.m);

  std::vector<TileCoverTest> covers;
  std::optional<Vector> axis;
  AlignedBox window;

  if (config.region.strip) {
    if (static_cast<int>(config.region.strip->normal.size()) != model.m)
      throw ConfigError("strip normal dimension mismatch");
    InvariantStrip strip;
    strip.normal = Vector(model.m);
    for (int k = 0; k < model.m; ++k)
      strip.normal[k] = config.region.strip->normal[k];
    strip.halfwidth = config.region.strip->halfwidth;
    InvarianceCheck check = verify_strong_invariance(model, alphabet, strip);
    if (!check.holds)
      throw ConfigError("configured strip is not strongly invariant");
    covers.push_back(cover_test_strip(strip));
  }

  if (model.spectrum == SpectrumClass::SingleUnitRoot) {
    InvariantCylinder cyl = invariant_cylinder(model, alphabet);
    axis = cyl.axis;
    window = seed_region_box(model, penalty, cyl, config.search.gamma_hi,
                             config.region.eps0, grid.delta());
    covers.push_back(cover_test_cylinder(cyl));
  } else {
    InvariantEllipsoid ell = invariant_ellipsoid(model, alphabet);
    // Bounding box of the ellipsoid: max x_k = radius * sqrt((P^-1)_kk).
    Matrix pinv = ell.P.llt().solve(Matrix::Identity(model.m, model.m));
    window.lo = Vector(model.m);
    window.hi = Vector(model.m);
    for (int k = 0; k < model.m; ++k) {
      double e = std::sqrt(std::max(0.0, ell.radius_sq * pinv(k, k))) +
                 grid.delta();
      window.lo[k] = -e;
      window.hi[k] = e;
    }
    covers.push_back(cover_test_ellipsoid(ell));
  }

  if (config.region.box) {
    if (static_cast<int>(config.region.box->lo.size()) != model.m ||
        static_cast<int>(config.region.box->hi.size()) != model.m)
      throw ConfigError("region.box dimension mismatch");
    for (int k = 0; k < model.m; ++k) {
      window.lo[k] = config.region.box->lo[k];
      window.hi[k] = config.region.box->hi[k];
      if (!(window.lo[k] < window.hi[k]))
        throw ConfigError("region.box must have lo < hi");
    }
  }

  BuiltSystem built{std::move(model),          std::move(alphabet),
                    penalty,                   grid,
                    cover_test_intersection(std::move(covers)),
                    std::move(axis),           std::move(window)};
  return built;
}

void write_value_function_csv(const std::string& path, const Region& region,
                              const PwcValueFunction& v) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  const int m = region.grid().dim;
  for (int k = 0; k < m; ++k) out << 'c' << k << ',';
  for (int k = 0; k < m; ++k) out << 'x' << k << ',';
  out << "value\n";
  const auto& tiles = region.tiles();
  for (std::size_t i = 0; i < tiles.size(); ++i) {
    for (int k = 0; k < m; ++k) out << tiles[i][k] << ',';
    for (int k = 0; k < m; ++k)
      out << fmt17(region.grid().corner(tiles[i][k])) << ',';
    out << fmt17(v.values[i]) << '\n';
  }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

}  // namespace

StoredValueFunction read_value_function_csv(const std::string& path, int dim) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty value file: " + path);
  StoredValueFunction out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (static_cast<int>(fields.size()) != 2 * dim + 1)
      throw ConfigError("bad row in " + path);
    TileCoords c(dim);
    for (int k = 0; k < dim; ++k) c[k] = std::stoll(fields[k]);
    out.tiles.push_back(std::move(c));
    out.values.push_back(std::stod(fields.back()));
  }
  return out;
}

void write_control_law_csv(const std::string& path, const Region& region,
                           const PwcControlLaw& law) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  const int m = region.grid().dim;
  InputGrid inputs(region.grid());
  for (int k = 0; k < m; ++k) out << 'c' << k << ',';
  out << "r_index,r\n";
  const auto& tiles = region.tiles();
  for (std::size_t i = 0; i < tiles.size(); ++i) {
    for (int k = 0; k < m; ++k) out << tiles[i][k] << ',';
    std::int32_t j = law.choice[i];
    out << j << ',' << fmt17(inputs.values[static_cast<std::size_t>(j)]) << '\n';
  }
}

StoredControlLaw read_control_law_csv(const std::string& path, int dim) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty law file: " + path);
  StoredControlLaw out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (static_cast<int>(fields.size()) != dim + 2)
      throw ConfigError("bad row in " + path);
    TileCoords c(dim);
    for (int k = 0; k < dim; ++k) c[k] = std::stoll(fields[k]);
    out.tiles.push_back(std::move(c));
    out.choice.push_back(static_cast<std::int32_t>(std::stol(fields[dim])));
  }
  return out;
}

void write_zero_level_set_csv(const std::string& path, const Region& region,
                              const PwcValueFunction& v) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  const int m = region.grid().dim;
  for (int k = 0; k < m; ++k) out << 'c' << k << (k + 1 < m ? "," : "");
  out << (m > 0 ? "," : "") << "x_lo\n";
  const auto& tiles = region.tiles();
  TileCoords nb;
  for (std::size_t i = 0; i < tiles.size(); ++i) {
    if (!(v.values[i] > 0.0)) continue;
    bool edge = false;
    for (int k = 0; k < m && !edge; ++k)
      for (int s : {-1, +1}) {
        nb = tiles[i];
        nb[k] += s;
        std::int64_t idx = region.index_of(nb);
        if (idx < 0 || !(v.values[static_cast<std::size_t>(idx)] > 0.0)) {
          edge = true;
          break;
        }
      }
    if (!edge) continue;
    for (int k = 0; k < m; ++k) out << tiles[i][k] << ',';
    out << fmt17(region.grid().corner(tiles[i][0])) << '\n';
  }
}

void write_cross_section_csvs(const std::string& value_path,
                              const std::string& control_path,
                              const Region& region, const PwcValueFunction& v,
                              const PwcControlLaw& law) {
  const Grid& grid = region.grid();
  InputGrid inputs(grid);
  std::ofstream vout(value_path);
  std::ofstream kout(control_path);
  if (!vout || !kout)
    throw ConfigError("cannot write cross-section files");

  if (grid.dim != 2) {
    // Degenerate: the full per-tile data is the cross section.
    vout << "t,value\n";
    kout << "t,r\n";
    const auto& tiles = region.tiles();
    for (std::size_t i = 0; i < tiles.size(); ++i) {
      double t = grid.corner(tiles[i][0]);
      vout << fmt17(t) << ',' << fmt17(v.values[i]) << '\n';
      kout << fmt17(t) << ','
           << fmt17(inputs.values[static_cast<std::size_t>(law.choice[i])])
           << '\n';
    }
    return;
  }

  const IndexBox& bb = region.bounding_box();
  // Value along x0 = -x1, sampled at tile centers.
  vout << "t,c0,c1,value\n";
  for (std::int64_t c = bb.lo[0]; c <= bb.hi[0]; ++c) {
    double t = (static_cast<double>(c) + 0.5) * grid.delta();
    Vector p(2);
    p << t, -t;
    TileCoords tc = tile_of(grid, p);
    std::int64_t idx = region.index_of(tc);
    if (idx < 0) continue;
    vout << fmt17(t) << ',' << tc[0] << ',' << tc[1] << ','
         << fmt17(v.values[static_cast<std::size_t>(idx)]) << '\n';
  }
  // Control along x0 = x1.
  kout << "t,c0,c1,r\n";
  for (std::int64_t c = bb.lo[0]; c <= bb.hi[0]; ++c) {
    double t = (static_cast<double>(c) + 0.5) * grid.delta();
    Vector p(2);
    p << t, t;
    TileCoords tc = tile_of(grid, p);
    std::int64_t idx = region.index_of(tc);
    if (idx < 0) continue;
    kout << fmt17(t) << ',' << tc[0] << ',' << tc[1] << ','
         << fmt17(inputs.values[static_cast<std::size_t>(
                law.choice[static_cast<std::size_t>(idx)])])
         << '\n';
  }
}

std::unique_ptr<AdcInterface> make_adversary(const std::string& name,
                                             const QuantizerAlphabet& alphabet) {
  if (name == "first_order_dsm")
    return std::make_unique<FirstOrderDsm>(alphabet);
  if (name.rfind("constant:", 0) == 0) {
    double level = std::stod(name.substr(9));
    if (!alphabet.contains(level))
      throw ConfigError("constant adversary level must be an alphabet level");
    return std::make_unique<ConstantAdc>(level);
  }
  throw ConfigError("unknown adversary: " + name);
}

namespace {

const char* status_name(IterationStatus s) {
  switch (s) {
    case IterationStatus::Converged: return "converged";
    case IterationStatus::Diverged: return "diverged";
    default: return "max_iterations";
  }
}

const char* reason_name(StopReason r) {
  switch (r) {
    case StopReason::SupChangeBelowTol: return "sup_change_below_tol";
    case StopReason::ValueDivergence: return "value_divergence";
    case StopReason::ShellTouched: return "shell_touched";
    default: return "iteration_cap";
  }
}

json history_json(const std::vector<ProbeRecord>& history) {
  json arr = json::array();
  for (const auto& p : history) {
    arr.push_back({{"gamma", p.gamma},
                   {"status", status_name(p.status)},
                   {"reason", reason_name(p.reason)},
                   {"iterations", p.iterations},
                   {"seconds", p.seconds},
                   {"region_tiles", p.region_tiles},
                   {"certified", p.certified},
                   {"expansions", p.expansions}});
  }
  return arr;
}

}  // namespace

RunResult run_solve(const RunConfig& config, const std::string& out_dir,
                    bool trace_progress, std::ostream& log) {
  auto t0 = std::chrono::steady_clock::now();
  BuiltSystem sys = build_system(config);

  SearchConfig sc;
  sc.gamma_lo = config.search.gamma_lo;
  sc.gamma_hi = config.search.gamma_hi;
  sc.tol_gamma = config.search.tol_gamma;
  sc.caps.max_iters = config.caps.max_iters;
  sc.caps.conv_tol = config.caps.conv_tol;
  sc.caps.divergence_threshold = config.caps.divergence_threshold;
  sc.eps0 = config.region.eps0;
  sc.growth = config.region.growth;
  sc.max_expansions = config.caps.max_expansions;
  sc.tile_cap = config.caps.tile_cap;
  sc.memory_cap_bytes = config.caps.memory_cap_mb * (1ull << 20);
  sc.workers = config.workers;

  GammaSearch search(sys.model, sys.alphabet, sys.penalty, sys.grid,
                     sys.seed_window, sys.cover, sys.axis, sc);
  if (trace_progress) {
    search.trace = [&log](int iter, double change, double maxv) {
      log << "trace iter=" << iter << " sup_change=" << change
          << " max_value=" << maxv << '\n';
    };
    search.on_probe = [&log](const ProbeRecord& p) {
      log << "probe gamma=" << p.gamma << " status=" << status_name(p.status)
          << " iterations=" << p.iterations << " tiles=" << p.region_tiles
          << " certified=" << (p.certified ? "yes" : "no") << " seconds="
          << p.seconds << '\n';
    };
  }

  CertifiedBound bound = search.solve();

  RunResult result;
  result.gamma_cert = bound.gamma_cert;
  result.eta = bound.eta;
  result.probe_gamma = bound.probe_gamma;
  result.tile_count = bound.region->tile_count();
  result.history = bound.history;
  result.one_sided_bracket = bound.one_sided_bracket;

  // Simulation cross-check.
  for (const auto& name : config.simulation.adversaries) {
    auto adc = make_adversary(name, sys.alphabet);
    PlaybackResult pb = adversarial_playback(
        sys.model, sys.penalty, sys.alphabet, bound.control_law, *bound.region,
        *adc, config.simulation.horizon, bound.gamma_cert);
    SimulationRow row;
    row.adversary = name;
    row.awai = pb.awai.mean;
    row.margin = pb.awai.mean - bound.gamma_cert;
    row.excursions = pb.excursions;
    row.min_running_sum = pb.min_running_sum;
    row.horizon = config.simulation.horizon;
    result.simulation.push_back(row);
  }

  // Artifacts.
  std::filesystem::create_directories(out_dir);
  auto path = [&](const char* name) {
    return (std::filesystem::path(out_dir) / name).string();
  };
  std::string value_path = path("value_function.csv");
  std::string law_path = path("control_law.csv");
  std::string zls_path = path("zero_level_set.csv");
  std::string xsec_v = path("cross_section_value.csv");
  std::string xsec_k = path("cross_section_control.csv");
  std::string summary_path = path("summary.json");

  write_value_function_csv(value_path, *bound.region, bound.value_function);
  write_control_law_csv(law_path, *bound.region, bound.control_law);
  write_zero_level_set_csv(zls_path, *bound.region, bound.value_function);
  write_cross_section_csvs(xsec_v, xsec_k, *bound.region, bound.value_function,
                           bound.control_law);

  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  json summary;
  summary["gamma_cert"] = bound.gamma_cert;
  summary["eta"] = bound.eta;
  summary["probe_gamma"] = bound.probe_gamma;
  summary["max_value"] = bound.max_value;
  summary["one_sided_bracket"] = bound.one_sided_bracket;
  summary["bracket_inversion"] = bound.bracket_inversion;
  json region;
  region["tile_count"] = bound.region->tile_count();
  region["window_lo"] = std::vector<double>(
      bound.region->window().lo.data(),
      bound.region->window().lo.data() + bound.region->window().lo.size());
  region["window_hi"] = std::vector<double>(
      bound.region->window().hi.data(),
      bound.region->window().hi.data() + bound.region->window().hi.size());
  region["bbox_lo"] = bound.region->bounding_box().lo;
  region["bbox_hi"] = bound.region->bounding_box().hi;
  summary["region"] = region;
  summary["probe_history"] = history_json(bound.history);
  json sims = json::array();
  for (const auto& row : result.simulation) {
    sims.push_back({{"adversary", row.adversary},
                    {"awai", row.awai},
                    {"margin", row.margin},
                    {"excursions", row.excursions},
                    {"min_running_sum", row.min_running_sum},
                    {"horizon", row.horizon}});
  }
  summary["simulation"] = sims;
  summary["seconds"] = result.seconds;
  summary["artifacts"] = {{"value_function", value_path},
                          {"control_law", law_path},
                          {"zero_level_set", zls_path},
                          {"cross_section_value", xsec_v},
                          {"cross_section_control", xsec_k}};
  summary["config"] = config_json(config);
  {
    std::ofstream out(summary_path);
    if (!out) throw ConfigError("cannot write " + summary_path);
    out << summary.dump(2) << '\n';
  }

  result.artifact_paths = {value_path, law_path, zls_path,
                           xsec_v,     xsec_k,   summary_path};
  log << "gamma_cert=" << fmt17(bound.gamma_cert)
      << " eta=" << fmt17(bound.eta) << " tiles=" << result.tile_count
      << " seconds=" << result.seconds << '\n';
  return result;
}

int run_verify(const RunConfig& config, const std::string& value_csv,
               double gamma, std::optional<double> eta, std::ostream& log) {
  BuiltSystem sys = build_system(config);
  StoredValueFunction stored = read_value_function_csv(value_csv, sys.model.m);
  if (stored.tiles.empty()) {
    log << "verify: FAIL (no tiles in " << value_csv << ")\n";
    return 1;
  }

  // Region and table rebuilt from scratch; tile order re-derived.
  std::vector<std::pair<TileCoords, double>> rows;
  rows.reserve(stored.tiles.size());
  for (std::size_t i = 0; i < stored.tiles.size(); ++i)
    rows.emplace_back(stored.tiles[i], stored.values[i]);
  std::sort(rows.begin(), rows.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<TileCoords> tiles;
  PwcValueFunction v;
  for (auto& [c, val] : rows) {
    tiles.push_back(c);
    v.values.push_back(val);
  }
  auto region = std::make_shared<const Region>(sys.grid, tiles, sys.cover);
  if (region->tile_count() != v.values.size()) {
    log << "verify: FAIL (duplicate tiles in " << value_csv << ")\n";
    return 1;
  }

  double maxv = 0.0;
  for (double x : v.values) maxv = std::max(maxv, x);
  double slack = eta.value_or(default_slack(config.caps.conv_tol, sys.model.m, maxv));

  GridTransitionTable table(sys.model, sys.alphabet, region, sys.penalty,
                            config.caps.memory_cap_mb * (1ull << 20));
  CertificationResult cert =
      certify(table, v, gamma, slack, config.workers);

  // The zero-outside convention also needs the stage payoff to be safely
  // negative outside the region: the region must cover the seed set.
  std::vector<TileCoords> missing;
  if (sys.model.spectrum == SpectrumClass::SingleUnitRoot) {
    InvariantCylinder cyl = invariant_cylinder(sys.model, sys.alphabet);
    AlignedBox seed = seed_region_box(sys.model, sys.penalty, cyl, gamma,
                                      config.region.eps0, sys.grid.delta());
    missing = missing_seed_tiles(*region, seed);
  }

  if (cert.status == CertificationResult::Status::Certified && missing.empty()) {
    log << "verify: PASS gamma_cert=" << fmt17(cert.gamma_cert)
        << " eta=" << fmt17(slack) << " tiles=" << region->tile_count() << '\n';
    return 0;
  }
  if (!missing.empty()) {
    log << "verify: FAIL (region misses " << missing.size()
        << " seed tiles; first at";
    for (auto c : missing.front()) log << ' ' << c;
    log << ")\n";
    return 1;
  }
  if (cert.status == CertificationResult::Status::BoundaryNonzero) {
    log << "verify: FAIL (nonzero boundary tiles: "
        << cert.nonzero_boundary_tiles.size() << "; first index "
        << cert.nonzero_boundary_tiles.front() << ")\n";
    return 1;
  }
  log << "verify: FAIL (inequality violated at tile ";
  if (cert.violating_tile) {
    const TileCoords& c = region->tiles()[*cert.violating_tile];
    for (std::size_t k = 0; k < c.size(); ++k) log << (k ? " " : "") << c[k];
    log << ", margin " << cert.violation_margin;
  }
  log << ")\n";
  return 1;
}

int run_simulate(const RunConfig& config, const std::string& law_csv,
                 std::optional<double> gamma, std::optional<std::int64_t> horizon,
                 const std::string& trace_csv, std::int64_t trace_limit,
                 std::ostream& log) {
  BuiltSystem sys = build_system(config);
  StoredControlLaw stored = read_control_law_csv(law_csv, sys.model.m);
  std::vector<std::pair<TileCoords, std::int32_t>> rows;
  for (std::size_t i = 0; i < stored.tiles.size(); ++i)
    rows.emplace_back(stored.tiles[i], stored.choice[i]);
  std::sort(rows.begin(), rows.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<TileCoords> tiles;
  PwcControlLaw law;
  InputGrid inputs(sys.grid);
  for (auto& [c, j] : rows) {
    if (j < 0 || static_cast<std::size_t>(j) >= inputs.size())
      throw ConfigError("law r_index out of range");
    tiles.push_back(c);
    law.choice.push_back(j);
  }
  Region region(sys.grid, tiles, sys.cover);
  std::int64_t N = horizon.value_or(config.simulation.horizon);
  double g = gamma.value_or(0.0);

  std::ofstream trace_out;
  for (const auto& name : config.simulation.adversaries) {
    auto adc = make_adversary(name, sys.alphabet);
    TraceSink sink;
    if (!trace_csv.empty()) {
      trace_out.open(trace_csv);
      trace_out << "n,r,u";
      for (int k = 0; k < sys.model.m; ++k) trace_out << ",x" << k;
      trace_out << ",q,running_mean\n";
      sink.out = &trace_out;
      sink.row_limit = trace_limit;
    }
    PlaybackResult pb =
        adversarial_playback(sys.model, sys.penalty, sys.alphabet, law, region,
                             *adc, N, g, sink);
    log << "adversary=" << name << " awai=" << fmt17(pb.awai.mean)
        << " excursions=" << pb.excursions;
    if (gamma)
      log << " margin=" << fmt17(pb.awai.mean - g)
          << " min_running_sum=" << fmt17(pb.min_running_sum);
    log << '\n';
    if (sink.out) {
      trace_out.close();
      sink.out = nullptr;
    }
  }
  return 0;
}

}  // namespace adcbound
