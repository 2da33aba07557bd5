#ifndef ADCBOUND_BELLMAN_ENGINE_IMPL_HPP
#define ADCBOUND_BELLMAN_ENGINE_IMPL_HPP

#include <algorithm>
#include <cmath>

#include "adcbound/interval.hpp"
#include "adcbound/parallel.hpp"

namespace adcbound {

namespace detail {

template <TransitionTableLike Table>
SweepStats sweep_buffers(const Table& table, std::span<const double> vin,
                         std::span<double> vout, double gamma,
                         std::span<std::int32_t> argmin_cache, int workers,
                         typename Table::Scratch& scratch) {
  const std::size_t n = table.tile_count();
  const int w = workers < 1 ? 1 : workers;
  const typename Table::Prepared prepared = table.prepare(vin, scratch);
  std::vector<SweepStats> chunk(static_cast<std::size_t>(w));
  parallel_chunks(n, w, [&](int c, std::size_t begin, std::size_t end) {
    SweepStats local;
    for (std::size_t i = begin; i < end; ++i) {
      std::int32_t hint = argmin_cache.empty() ? -1 : argmin_cache[i];
      MinOverInputs mo = table.min_successor_over_inputs(i, prepared, hint);
      if (!argmin_cache.empty()) argmin_cache[i] = mo.argmin;
      double sigma = gamma - table.phi_min(i);
      double nv = std::max(0.0, sigma + mo.value);
      std::size_t slot = table.slot_of(i);
      double old = vin[slot];
      if (nv < old) local.monotone = false;
      local.sup_change = std::max(local.sup_change, nv - old);
      local.max_value = std::max(local.max_value, nv);
      vout[slot] = nv;
    }
    chunk[static_cast<std::size_t>(c)] = local;
  });
  SweepStats stats;
  for (const auto& s : chunk) {
    stats.sup_change = std::max(stats.sup_change, s.sup_change);
    stats.max_value = std::max(stats.max_value, s.max_value);
    stats.monotone = stats.monotone && s.monotone;
  }
  return stats;
}

template <TransitionTableLike Table>
void region_to_storage(const Table& table, const PwcValueFunction& v,
                       std::vector<double>& storage) {
  storage.assign(table.storage_size(), 0.0);
  for (std::size_t i = 0; i < table.tile_count(); ++i)
    storage[table.slot_of(i)] = v.values[i];
}

template <TransitionTableLike Table>
PwcValueFunction storage_to_region(const Table& table,
                                   std::span<const double> storage) {
  PwcValueFunction v;
  v.values.resize(table.tile_count());
  for (std::size_t i = 0; i < table.tile_count(); ++i)
    v.values[i] = storage[table.slot_of(i)];
  return v;
}

}  // namespace detail

template <TransitionTableLike Table>
PwcValueFunction value_sweep(const Table& table, const PwcValueFunction& v,
                             double gamma, SweepStats* stats) {
  if (v.values.size() != table.tile_count())
    throw std::invalid_argument("value function size does not match the table");
  std::vector<double> vin;
  detail::region_to_storage(table, v, vin);
  std::vector<double> vout(table.storage_size(), 0.0);
  typename Table::Scratch scratch;
  SweepStats s = detail::sweep_buffers(table, vin, vout, gamma,
                                       std::span<std::int32_t>{}, 1, scratch);
  if (stats) *stats = s;
  return detail::storage_to_region(table, vout);
}

template <TransitionTableLike Table>
std::pair<PwcValueFunction, IterationVerdict> iterate_to_fixed_point(
    const Table& table, double gamma, const IterationCaps& caps,
    const IterateOptions& options) {
  if (caps.max_iters < 1 || caps.conv_tol <= 0.0)
    throw std::invalid_argument("iteration caps must be positive");
  double divergence = caps.divergence_threshold > 0.0
                          ? caps.divergence_threshold
                          : 10.0 * std::max(1.0, gamma) * caps.max_iters;
  const int workers = resolve_workers(options.workers);

  std::vector<double> vin(table.storage_size(), 0.0);
  std::vector<double> vout(table.storage_size(), 0.0);
  std::vector<std::int32_t> cache(table.tile_count(), -1);
  typename Table::Scratch scratch;
  const auto& shell = table.boundary_indices();

  IterationVerdict verdict;
  for (int iter = 1; iter <= caps.max_iters; ++iter) {
    SweepStats s = detail::sweep_buffers(table, vin, vout, gamma,
                                         std::span<std::int32_t>(cache), workers,
                                         scratch);
    verdict.iterations = iter;
    verdict.final_sup_change = s.sup_change;
    verdict.max_value = s.max_value;
    if (!s.monotone)
      throw std::logic_error("value iteration lost monotonicity");
    if (options.trace && (iter % std::max(1, options.trace_every) == 0))
      options.trace(iter, s.sup_change, s.max_value);
    vin.swap(vout);

    if (!std::isfinite(s.max_value) || s.max_value > divergence) {
      verdict.status = IterationStatus::Diverged;
      verdict.reason = StopReason::ValueDivergence;
      return {detail::storage_to_region(table, vin), verdict};
    }
    if (options.shell_early_exit) {
      for (std::int64_t b : shell) {
        if (vin[table.slot_of(static_cast<std::size_t>(b))] > 0.0) {
          verdict.shell_touched = true;
          verdict.status = IterationStatus::Diverged;
          verdict.reason = StopReason::ShellTouched;
          return {detail::storage_to_region(table, vin), verdict};
        }
      }
    }
    if (s.sup_change <= caps.conv_tol) {
      verdict.status = IterationStatus::Converged;
      verdict.reason = StopReason::SupChangeBelowTol;
      return {detail::storage_to_region(table, vin), verdict};
    }
  }
  verdict.status = IterationStatus::MaxIterations;
  verdict.reason = StopReason::IterationCap;
  return {detail::storage_to_region(table, vin), verdict};
}

template <TransitionTableLike Table>
CertificationResult certify(const Table& table, const PwcValueFunction& v,
                            double gamma, double eta, int workers) {
  CertificationResult res;
  res.eta = eta;
  res.checked_tiles = table.tile_count();
  if (v.values.size() != table.tile_count())
    throw std::invalid_argument("value function size does not match the table");

  for (std::size_t i = 0; i < v.values.size(); ++i) {
    if (!(v.values[i] >= 0.0) || !std::isfinite(v.values[i])) {
      res.status = CertificationResult::Status::InequalityViolated;
      res.violating_tile = i;
      res.violation_margin = std::numeric_limits<double>::infinity();
      return res;
    }
  }

  // Zero obligation on the artificial boundary.
  for (std::int64_t b : table.boundary_indices()) {
    if (v.values[static_cast<std::size_t>(b)] > 0.0)
      res.nonzero_boundary_tiles.push_back(static_cast<std::size_t>(b));
  }
  if (!res.nonzero_boundary_tiles.empty()) {
    res.status = CertificationResult::Status::BoundaryNonzero;
    return res;
  }

  std::vector<double> storage;
  detail::region_to_storage(table, v, storage);
  const double gme = rounding::sub_up(gamma, eta);

  const int w = resolve_workers(workers);
  typename Table::Scratch scratch;
  const typename Table::Prepared prepared = table.prepare(storage, scratch);
  struct Worst {
    bool violated = false;
    std::size_t tile = 0;
    double margin = 0.0;
  };
  std::vector<Worst> chunk(static_cast<std::size_t>(std::max(1, w)));
  parallel_chunks(table.tile_count(), w,
                  [&](int c, std::size_t begin, std::size_t end) {
                    Worst local;
                    for (std::size_t i = begin; i < end; ++i) {
                      MinOverInputs mo =
                          table.min_successor_over_inputs(i, prepared, -1);
                      double rhs = rounding::add_up(
                          rounding::sub_up(gme, table.phi_min(i)), mo.value);
                      double margin = rhs - v.values[i];
                      if (v.values[i] < rhs &&
                          (!local.violated || margin > local.margin)) {
                        local.violated = true;
                        local.tile = i;
                        local.margin = margin;
                      }
                    }
                    chunk[static_cast<std::size_t>(c)] = local;
                  });
  Worst worst;
  for (const auto& cw : chunk)
    if (cw.violated && (!worst.violated || cw.margin > worst.margin)) worst = cw;

  if (worst.violated) {
    res.status = CertificationResult::Status::InequalityViolated;
    res.violating_tile = worst.tile;
    res.violation_margin = worst.margin;
    return res;
  }
  res.status = CertificationResult::Status::Certified;
  // phi >= 0 makes 0 a universally valid level, so never report below it.
  res.gamma_cert = std::max(0.0, gamma - eta);
  return res;
}

template <TransitionTableLike Table>
PwcControlLaw extract_control(const Table& table, const PwcValueFunction& v,
                              int workers) {
  if (v.values.size() != table.tile_count())
    throw std::invalid_argument("value function size does not match the table");
  std::vector<double> storage;
  detail::region_to_storage(table, v, storage);
  typename Table::Scratch scratch;
  const typename Table::Prepared prepared = table.prepare(storage, scratch);
  PwcControlLaw law;
  law.choice.assign(table.tile_count(), 0);
  parallel_chunks(table.tile_count(), resolve_workers(workers),
                  [&](int, std::size_t begin, std::size_t end) {
                    for (std::size_t i = begin; i < end; ++i) {
                      MinOverInputs mo =
                          table.min_successor_over_inputs(i, prepared, -1);
                      law.choice[i] = mo.argmin;
                    }
                  });
  return law;
}

}  // namespace adcbound

#endif
