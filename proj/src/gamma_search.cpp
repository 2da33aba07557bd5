#include "adcbound/gamma_search.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

namespace adcbound {

BisectionOutcome bisect_predicate(
    const std::function<bool(double)>& certified_at, double gamma_lo,
    double gamma_hi, double tol_gamma) {
  if (!(gamma_lo < gamma_hi)) throw ConfigError("gamma_lo must be below gamma_hi");
  if (!(tol_gamma > 0.0)) throw ConfigError("tol_gamma must be positive");

  BisectionOutcome out;
  auto run = [&](double g) {
    bool ok = certified_at(g);
    out.probes.emplace_back(g, ok);
    return ok;
  };

  if (!run(gamma_lo)) {
    std::ostringstream oss;
    oss << "no convergent point at gamma_lo = " << gamma_lo
        << "; a gamma = 0 run always converges";
    throw NoConvergentPoint(oss.str());
  }
  double lo = gamma_lo;
  double hi = gamma_hi;
  if (run(gamma_hi)) {
    out.lo = gamma_hi;
    out.hi = gamma_hi;
    out.one_sided = true;
    return out;
  }
  while (hi - lo > tol_gamma) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // tolerance below float resolution
    if (run(mid))
      lo = mid;
    else
      hi = mid;
  }
  out.lo = lo;
  out.hi = hi;
  // The predicate is expected to be monotone; report if the record disagrees.
  double min_fail = std::numeric_limits<double>::infinity();
  for (const auto& [g, ok] : out.probes)
    if (!ok) min_fail = std::min(min_fail, g);
  for (const auto& [g, ok] : out.probes)
    if (ok && g > min_fail) out.inversion_detected = true;
  return out;
}

Region expand_region(const Region& region, int growth,
                     const std::optional<Vector>& axis) {
  if (growth < 1) throw ConfigError("expansion growth must be >= 1");
  const Grid& grid = region.grid();
  AlignedBox window = region.window();
  double step = static_cast<double>(growth) * grid.delta();
  double axis_scale = axis ? axis->cwiseAbs().maxCoeff() : 0.0;
  for (int k = 0; k < grid.dim; ++k) {
    bool grow = !axis || std::abs((*axis)[k]) > 1e-12 * axis_scale;
    if (grow) {
      window.lo[k] -= step;
      window.hi[k] += step;
    }
  }
  return Region(grid, window, region.cover_test());
}

std::vector<TileCoords> missing_seed_tiles(const Region& region,
                                           const AlignedBox& seed_box) {
  Region seed(region.grid(), seed_box, region.cover_test());
  std::vector<TileCoords> missing;
  for (const auto& t : seed.tiles())
    if (!region.contains(t)) missing.push_back(t);
  return missing;
}

GammaSearch::GammaSearch(SystemModel model, QuantizerAlphabet alphabet,
                         PenaltyFunction penalty, Grid grid,
                         AlignedBox seed_window, TileCoverTest cover,
                         std::optional<Vector> axis, SearchConfig config)
    : model_(std::move(model)),
      alphabet_(std::move(alphabet)),
      penalty_(penalty),
      grid_(grid),
      cover_(std::move(cover)),
      axis_(std::move(axis)),
      config_(config) {
  region_ = std::make_shared<const Region>(grid_, seed_window, cover_);
  if (region_->tile_count() > config_.tile_cap)
    throw RegionExpansionLimit("seed region already exceeds the tile cap");
}

void GammaSearch::ensure_table() {
  if (!table_ || &table_->region() != region_.get())
    table_ = std::make_shared<GridTransitionTable>(
        model_, alphabet_, region_, penalty_, config_.memory_cap_bytes);
}

bool GammaSearch::expand_or_give_up(int& expansions) {
  if (expansions >= config_.max_expansions) {
    expansion_exhausted_ = true;
    return false;
  }
  // Geometric growth: add half the current axis extent, at least the
  // configured layer count.
  double extent = 0.0;
  for (int k = 0; k < grid_.dim; ++k)
    extent = std::max(extent, region_->window().hi[k] - region_->window().lo[k]);
  int growth = std::max<int>(
      config_.growth,
      static_cast<int>(std::ceil(0.25 * extent / grid_.delta())));
  Region grown = expand_region(*region_, growth, axis_);
  if (grown.tile_count() > config_.tile_cap ||
      grown.tile_count() == region_->tile_count()) {
    expansion_exhausted_ = true;
    return false;
  }
  region_ = std::make_shared<const Region>(std::move(grown));
  ++expansions;
  return true;
}

bool GammaSearch::probe_certified(double gamma) {
  int expansions = 0;
  expansion_exhausted_ = false;
  // Regions grown during a probe are kept only when the probe certifies;
  // divergent probes must not bloat the region for everyone after them.
  auto region_before = region_;
  auto table_before = table_;

  // A converged value function has magnitude on the order of gamma (the
  // fixed points observed are a few multiples of it).  A shell touch at a
  // much larger magnitude will not be fixed by more room: the required
  // region grows with the value scale, so growing is hopeless.  Classify
  // as divergent instead (conservative direction).
  const double plausible_scale =
      4.0 * std::max({gamma, last_converged_max_, 0.25});

  bool certified = false;
  int round_budget = config_.caps.max_iters;
  while (true) {
    auto start = std::chrono::steady_clock::now();
    ensure_table();

    IterateOptions opts;
    opts.workers = config_.workers;
    opts.trace = trace;

    IterationCaps round_caps = config_.caps;
    round_caps.max_iters = std::min(config_.caps.max_iters, round_budget);
    auto [value, verdict] = iterate_to_fixed_point(*table_, gamma,
                                                   round_caps, opts);
    ProbeRecord rec;
    rec.gamma = gamma;
    rec.status = verdict.status;
    rec.reason = verdict.reason;
    rec.iterations = verdict.iterations;
    rec.region_tiles = region_->tile_count();
    rec.expansions = expansions;

    bool done_with_probe = true;

    if (verdict.status == IterationStatus::Converged) {
      double eta = default_slack(config_.caps.conv_tol, model_.m,
                                 verdict.max_value);
      CertificationResult cert = certify(*table_, value, gamma, eta,
                                         config_.workers);
      if (cert.status == CertificationResult::Status::InequalityViolated &&
          cert.violation_margin > 0.0 && std::isfinite(cert.violation_margin)) {
        // Slack too small for the residual; absorb the measured margin.
        eta = eta + 2.0 * cert.violation_margin;
        cert = certify(*table_, value, gamma, eta, config_.workers);
      }
      if (cert.status == CertificationResult::Status::Certified) {
        Success s;
        s.gamma = gamma;
        s.eta = cert.eta;
        s.gamma_cert = cert.gamma_cert;
        s.max_value = verdict.max_value;
        s.value = std::move(value);
        s.region = region_;
        s.table = table_;
        last_success_ = std::move(s);
        last_converged_max_ = std::max(last_converged_max_, verdict.max_value);
        certified = true;
      } else if (cert.status == CertificationResult::Status::BoundaryNonzero) {
        done_with_probe = !expand_or_give_up(expansions);
      }
    } else if (verdict.reason == StopReason::ShellTouched &&
               verdict.max_value <= plausible_scale) {
      done_with_probe = !expand_or_give_up(expansions);
      // Convergence, when it happens, stabilizes within tens of sweeps; a
      // retry that keeps ramping past a few times the previous touch time
      // is divergent, not cramped.
      round_budget = std::max(4 * verdict.iterations + 100, 400);
    }

    rec.certified = certified;
    rec.seconds = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - start)
                      .count();
    history_.push_back(rec);
    if (on_probe) on_probe(rec);
    if (done_with_probe) {
      if (!certified) {
        region_ = region_before;
        table_ = table_before;
      }
      return certified;
    }
  }
}

CertifiedBound GammaSearch::solve() {
  BisectionOutcome outcome;
  try {
    outcome = bisect_predicate(
        [this](double g) { return probe_certified(g); }, config_.gamma_lo,
        config_.gamma_hi, config_.tol_gamma);
  } catch (const NoConvergentPoint&) {
    if (expansion_exhausted_)
      throw RegionExpansionLimit(
          "region grew to its cap without a zero boundary at gamma_lo");
    throw;
  }

  if (!last_success_)
    throw NoConvergentPoint("line search produced no certificate");

  CertifiedBound bound;
  bound.gamma_cert = last_success_->gamma_cert;
  bound.eta = last_success_->eta;
  bound.probe_gamma = last_success_->gamma;
  bound.value_function = last_success_->value;
  bound.region = last_success_->region;
  bound.max_value = last_success_->max_value;
  bound.control_law =
      extract_control(*last_success_->table, last_success_->value,
                      config_.workers);
  bound.history = history_;
  bound.one_sided_bracket = outcome.one_sided;
  bound.bracket_inversion = outcome.inversion_detected;
  return bound;
}

}  // namespace adcbound
