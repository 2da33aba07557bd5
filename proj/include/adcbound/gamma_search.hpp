#ifndef ADCBOUND_GAMMA_SEARCH_HPP
#define ADCBOUND_GAMMA_SEARCH_HPP

#include <functional>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "adcbound/bellman_engine.hpp"

namespace adcbound {

struct SearchConfig {
  double gamma_lo = 0.0;
  double gamma_hi = 1.0;
  double tol_gamma = 0.005;
  IterationCaps caps;
  double eps0 = 0.5;
  int growth = 8;  // tile layers added per expansion along the axis
  int max_expansions = 6;
  std::uint64_t tile_cap = 2'000'000;
  std::uint64_t memory_cap_bytes = 4ull << 30;
  int workers = 0;
};

struct ProbeRecord {
  double gamma = 0.0;
  IterationStatus status = IterationStatus::MaxIterations;
  StopReason reason = StopReason::IterationCap;
  int iterations = 0;
  double seconds = 0.0;
  std::size_t region_tiles = 0;
  bool certified = false;
  int expansions = 0;
};

struct CertifiedBound {
  double gamma_cert = 0.0;
  double eta = 0.0;
  double probe_gamma = 0.0;
  PwcValueFunction value_function;
  PwcControlLaw control_law;
  std::shared_ptr<const Region> region;
  std::vector<ProbeRecord> history;
  double max_value = 0.0;
  bool one_sided_bracket = false;
  bool bracket_inversion = false;
};

struct BisectionOutcome {
  double lo = 0.0;
  double hi = 0.0;
  bool one_sided = false;
  bool inversion_detected = false;
  std::vector<std::pair<double, bool>> probes;
};

// Bisection on a certified/uncertified predicate.  Requires the low endpoint
// to be certified (else NoConvergentPoint); when the high endpoint certifies
// too, returns it with the one-sided flag set.
BisectionOutcome bisect_predicate(
    const std::function<bool(double)>& certified_at, double gamma_lo,
    double gamma_hi, double tol_gamma);

// Region grown by `growth` tile layers along `axis` (all axes when axis is
// absent), re-filtered through the region's cover test.
Region expand_region(const Region& region, int growth,
                     const std::optional<Vector>& axis);

// Tiles meeting the seed box and the invariant set that a region is missing
// (used to audit stored regions).
std::vector<TileCoords> missing_seed_tiles(const Region& region,
                                           const AlignedBox& seed_box);

// Runs the probe loop (iterate, certify, expand on boundary failures) and the
// line search over gamma; owns the region and transition-table state.
class GammaSearch {
 public:
  GammaSearch(SystemModel model, QuantizerAlphabet alphabet,
              PenaltyFunction penalty, Grid grid, AlignedBox seed_window,
              TileCoverTest cover, std::optional<Vector> axis,
              SearchConfig config);

  // Probes one gamma: value iteration plus certification, expanding the
  // region when the zero-boundary obligation fails.  Returns true when a
  // certificate was produced (and retains it).
  bool probe_certified(double gamma);

  // Full line search; returns the assembled certificate at the final
  // certified gamma.
  CertifiedBound solve();

  const std::vector<ProbeRecord>& history() const { return history_; }
  const GridTransitionTable* table() const { return table_.get(); }
  TraceCallback trace;
  std::function<void(const ProbeRecord&)> on_probe;

 private:
  void ensure_table();
  bool expand_or_give_up(int& expansions);

  SystemModel model_;
  QuantizerAlphabet alphabet_;
  PenaltyFunction penalty_;
  Grid grid_;
  TileCoverTest cover_;
  std::optional<Vector> axis_;
  SearchConfig config_;

  std::shared_ptr<const Region> region_;
  std::shared_ptr<GridTransitionTable> table_;
  std::vector<ProbeRecord> history_;
  bool expansion_exhausted_ = false;
  double last_converged_max_ = 0.0;

  struct Success {
    double gamma = 0.0;
    double eta = 0.0;
    double gamma_cert = 0.0;
    double max_value = 0.0;
    PwcValueFunction value;
    std::shared_ptr<const Region> region;
    std::shared_ptr<GridTransitionTable> table;
  };
  std::optional<Success> last_success_;
};

}  // namespace adcbound

#endif
