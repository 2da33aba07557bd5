#ifndef ADCBOUND_BELLMAN_ENGINE_HPP
#define ADCBOUND_BELLMAN_ENGINE_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "adcbound/grid_geometry.hpp"
#include "adcbound/system_model.hpp"

namespace adcbound {

// Piecewise constant value function: one nonnegative value per region tile,
// implicitly zero outside.
struct PwcValueFunction {
  std::vector<double> values;
};

// One input-grid index per region tile (the adversarial input law).
struct PwcControlLaw {
  std::vector<std::int32_t> choice;
};

struct IterationCaps {
  int max_iters = 20000;
  double conv_tol = 1e-9;
  double divergence_threshold = 0.0;  // <= 0: derived from gamma and max_iters
};

enum class IterationStatus { Converged, Diverged, MaxIterations };
enum class StopReason {
  SupChangeBelowTol,
  ValueDivergence,
  IterationCap,
  ShellTouched
};

struct Certificate {
  double eta = 0.0;
  double gamma_cert = 0.0;
};

struct IterationVerdict {
  IterationStatus status = IterationStatus::MaxIterations;
  StopReason reason = StopReason::IterationCap;
  int iterations = 0;
  double final_sup_change = 0.0;
  double max_value = 0.0;
  bool shell_touched = false;
  std::optional<Certificate> certificate;
};

struct MinOverInputs {
  double value = 0.0;
  std::int32_t argmin = -1;
};

// Per-(tile, input) transition data over a grid region.  For every region
// tile the enclosure of (A x) * D over the tile closure is precomputed per
// axis; per (input, level) the enclosure of B (r - u) * D is precomputed.
// Successor tile index ranges are their sums.  When every enclosure end is an
// exactly represented integer the query path degrades to integer adds, the
// per-axis range spans become constant, and successor maxima are read from a
// value lattice dilated once per sweep.
class GridTransitionTable {
 public:
  struct Scratch {
    std::vector<double> a, b;
  };
  struct Prepared {
    std::span<const double> raw;
    const double* dilated = nullptr;  // extended lattice, or null
  };

  // Outward-rounding policy for successor index ranges.  OneUlpOutward is
  // the shipped behavior: every image-box endpoint is pushed one ulp outward
  // regardless of whether the computation rounded.  ExactResidual nudges only
  // on actual rounding; it is kept for tightness experiments in tests.
  enum class RangeRounding { OneUlpOutward, ExactResidual };

  GridTransitionTable(const SystemModel& model, const QuantizerAlphabet& alphabet,
                      std::shared_ptr<const Region> region,
                      const PenaltyFunction& penalty,
                      std::uint64_t memory_cap_bytes = 4ull << 30,
                      RangeRounding rounding = RangeRounding::OneUlpOutward);

  std::size_t tile_count() const { return n_tiles_; }
  std::size_t input_count() const { return inputs_.size(); }
  const InputGrid& inputs() const { return inputs_; }
  const Region& region() const { return *region_; }
  std::shared_ptr<const Region> region_ptr() const { return region_; }

  // Size of a value array and the slot of region tile i inside it.
  std::size_t storage_size() const { return lattice_size_; }
  std::size_t slot_of(std::size_t i) const { return slot_[i]; }

  double phi_min(std::size_t i) const { return phi_min_[i]; }

  // Builds the per-sweep view of a value array (max-dilated lattice when the
  // integer fast path applies).  The scratch buffers are reused across calls.
  Prepared prepare(std::span<const double> values, Scratch& scratch) const;

  // max over successor tiles (zero for anything outside the region) of V,
  // minimized over the input grid.  `hint` short-circuits the scan when that
  // input already attains zero; pass -1 for the tie-stable ascending scan.
  MinOverInputs min_successor_over_inputs(std::size_t i, const Prepared& values,
                                          std::int32_t hint) const;

  // max over successors of V for one input index.
  double successor_max(std::size_t i, std::size_t j,
                       const Prepared& values) const;

  // Same query against an un-dilated value lattice (used when single cells
  // are being perturbed and rebuilding the dilation would be wasteful).
  double successor_max_raw(std::size_t i, std::size_t j,
                           std::span<const double> values) const;
  MinOverInputs min_successor_raw(std::size_t i,
                                  std::span<const double> values) const;

  // Region tiles on the artificial boundary (zero-value obligation).
  const std::vector<std::int64_t>& boundary_indices() const { return boundary_; }

  bool integer_fast_path() const { return all_integer_; }

 private:
  void build(const SystemModel& model, const QuantizerAlphabet& alphabet,
             const PenaltyFunction& penalty);
  void build_dilated(std::span<const double> values, Scratch& scratch) const;

  std::shared_ptr<const Region> region_;
  InputGrid inputs_;
  std::size_t n_tiles_ = 0;
  std::size_t n_levels_ = 0;
  std::size_t lattice_size_ = 0;
  int m_ = 0;

  std::vector<double> phi_min_;
  std::vector<std::size_t> slot_;

  // Enclosures, flattened: base_[((i * m) + k) * 2 + {0,1}].
  std::vector<double> base_;
  // offset_[(((j * n_levels) + u) * m + k) * 2 + {0,1}]
  std::vector<double> offset_;
  bool all_integer_ = false;
  std::vector<std::int64_t> base_int_;
  std::vector<std::int64_t> offset_int_;

  std::vector<std::int64_t> bb_lo_, bb_hi_, strides_;
  std::vector<std::int64_t> boundary_;
  bool blind_nudge_ = true;

  // Integer-path range spans (constant per axis) and the extended lattice
  // geometry for the dilated view.
  std::vector<std::int64_t> span_;
  std::vector<std::int64_t> ext_dims_, ext_strides_;
  std::size_t ext_size_ = 0;
};

// Explicit successor-list table over an abstract finite state set; used for
// point-state instances where tile geometry is replaced by exact successor
// states.
class ExplicitTransitionTable {
 public:
  struct Entry {
    std::vector<std::int32_t> successors;
    bool touches_outside = false;
  };
  struct Scratch {};
  struct Prepared {
    std::span<const double> raw;
  };

  ExplicitTransitionTable(std::vector<double> phi_min, std::size_t n_inputs);
  void set_entry(std::size_t i, std::size_t j, Entry e);

  std::size_t tile_count() const { return phi_min_.size(); }
  std::size_t input_count() const { return n_inputs_; }
  std::size_t storage_size() const { return phi_min_.size(); }
  std::size_t slot_of(std::size_t i) const { return i; }
  double phi_min(std::size_t i) const { return phi_min_[i]; }
  Prepared prepare(std::span<const double> values, Scratch&) const {
    return Prepared{values};
  }
  MinOverInputs min_successor_over_inputs(std::size_t i, const Prepared& values,
                                          std::int32_t hint) const;
  double successor_max(std::size_t i, std::size_t j,
                       const Prepared& values) const;
  const std::vector<std::int64_t>& boundary_indices() const { return boundary_; }

 private:
  std::vector<double> phi_min_;
  std::size_t n_inputs_;
  std::vector<Entry> entries_;
  std::vector<std::int64_t> boundary_;
};

template <class T>
concept TransitionTableLike = requires(const T& t, std::span<const double> v,
                                       typename T::Scratch& scratch,
                                       const typename T::Prepared& p,
                                       std::size_t i, std::int32_t hint) {
  { t.tile_count() } -> std::convertible_to<std::size_t>;
  { t.input_count() } -> std::convertible_to<std::size_t>;
  { t.storage_size() } -> std::convertible_to<std::size_t>;
  { t.slot_of(i) } -> std::convertible_to<std::size_t>;
  { t.phi_min(i) } -> std::convertible_to<double>;
  { t.prepare(v, scratch) } -> std::convertible_to<typename T::Prepared>;
  { t.min_successor_over_inputs(i, p, hint) } -> std::convertible_to<MinOverInputs>;
  { t.boundary_indices() } -> std::convertible_to<std::vector<std::int64_t>>;
};

struct SweepStats {
  double sup_change = 0.0;
  double max_value = 0.0;
  bool monotone = true;
};

namespace detail {

// One Jacobi sweep on storage-sized buffers.  Reads only `vin`; cell order is
// irrelevant to the result.  `argmin_cache` may be empty.
template <TransitionTableLike Table>
SweepStats sweep_buffers(const Table& table, std::span<const double> vin,
                         std::span<double> vout, double gamma,
                         std::span<std::int32_t> argmin_cache, int workers);

}  // namespace detail

// Public single sweep on region-indexed value vectors.
template <TransitionTableLike Table>
PwcValueFunction value_sweep(const Table& table, const PwcValueFunction& v,
                             double gamma, SweepStats* stats = nullptr);

using TraceCallback =
    std::function<void(int iter, double sup_change, double max_value)>;

struct IterateOptions {
  int workers = 1;
  bool shell_early_exit = true;
  TraceCallback trace;
  int trace_every = 100;
};

// Monotone value iteration from the zero function until the sup-norm change
// drops below conv_tol (Converged), a value exceeds the divergence threshold
// (Diverged), or the iteration cap is hit.  With shell_early_exit, a nonzero
// value appearing on the artificial boundary stops the run: the iteration is
// monotone from below, so no fixed point with a zero boundary exists over
// this region.
template <TransitionTableLike Table>
std::pair<PwcValueFunction, IterationVerdict> iterate_to_fixed_point(
    const Table& table, double gamma, const IterationCaps& caps,
    const IterateOptions& options = {});

struct CertificationResult {
  enum class Status { Certified, InequalityViolated, BoundaryNonzero };
  Status status = Status::InequalityViolated;
  double gamma_cert = 0.0;
  double eta = 0.0;
  std::optional<std::size_t> violating_tile;
  double violation_margin = 0.0;  // rhs - V at the witness
  std::vector<std::size_t> nonzero_boundary_tiles;
  std::size_t checked_tiles = 0;
};

// Post-verification of the Bellman inequality with explicit slack: checks
// V[i] >= (gamma - eta) - phi_min_i + min_j max_{successors ∪ outside} V
// for every tile, with upward rounding on the right-hand side, plus
// nonnegativity and the zero artificial boundary.  On success gamma - eta is
// a certified level.
template <TransitionTableLike Table>
CertificationResult certify(const Table& table, const PwcValueFunction& v,
                            double gamma, double eta, int workers = 1);

// Argmin input index per tile; ties resolve to the smallest input value.
template <TransitionTableLike Table>
PwcControlLaw extract_control(const Table& table, const PwcValueFunction& v,
                              int workers = 1);

// Default certificate slack for a converged iterate.
double default_slack(double conv_tol, int state_dim, double value_scale);

// Exhaustive alternating-game recursion: the tau-horizon optimal stopped
// payoff from x0, with the stop decision maximized, inputs minimized over
// `input_set` and quantizer levels maximized.  Exact up to float rounding.
double vtau_oracle(const SystemModel& model, const QuantizerAlphabet& alphabet,
                   const std::vector<double>& input_set,
                   const std::function<double(const Vector&)>& sigma,
                   const Vector& x0, int tau,
                   std::uint64_t node_cap = 200'000'000ull);

}  // namespace adcbound

#include "adcbound/bellman_engine_impl.hpp"

#endif
