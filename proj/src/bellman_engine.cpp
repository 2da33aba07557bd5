#include "adcbound/bellman_engine.hpp"

#include <cmath>
#include <sstream>

namespace adcbound {

namespace {

// Certified enclosure of a single real number.
struct DirVal {
  double dn = 0.0, up = 0.0;
  bool exact() const { return dn == up; }
};

DirVal point(double v) { return {v, v}; }

DirVal div_dir(double a, double b) {
  return {rounding::div_down(a, b), rounding::div_up(a, b)};
}

DirVal mul_dir(DirVal a, double c) {
  if (c >= 0.0) return {rounding::mul_down(a.dn, c), rounding::mul_up(a.up, c)};
  return {rounding::mul_down(a.up, c), rounding::mul_up(a.dn, c)};
}

DirVal add_dir(DirVal a, DirVal b) {
  return {rounding::add_down(a.dn, b.dn), rounding::add_up(a.up, b.up)};
}

DirVal sub_dir(DirVal a, DirVal b) {
  return add_dir(a, DirVal{-b.up, -b.dn});
}

bool exact_integer(const DirVal& v, std::int64_t& out) {
  if (!v.exact()) return false;
  double f = std::floor(v.dn);
  if (f != v.dn) return false;
  if (std::abs(f) > 9.0e15) return false;
  out = static_cast<std::int64_t>(f);
  return true;
}

}  // namespace

GridTransitionTable::GridTransitionTable(const SystemModel& model,
                                         const QuantizerAlphabet& alphabet,
                                         std::shared_ptr<const Region> region,
                                         const PenaltyFunction& penalty,
                                         std::uint64_t memory_cap_bytes,
                                         RangeRounding rounding)
    : region_(std::move(region)),
      inputs_(region_->grid()),
      blind_nudge_(rounding == RangeRounding::OneUlpOutward) {
  if (region_->tile_count() == 0) throw ConfigError("region is empty");
  m_ = region_->grid().dim;
  if (m_ > 8) throw CapacityExceeded("state dimension above 8 is unsupported");
  n_tiles_ = region_->tile_count();
  n_levels_ = alphabet.size();
  lattice_size_ = static_cast<std::size_t>(region_->lattice_size());

  const std::uint64_t footprint =
      static_cast<std::uint64_t>(n_tiles_) * (16ull + 32ull * m_) +
      static_cast<std::uint64_t>(lattice_size_) * 24ull +
      static_cast<std::uint64_t>(inputs_.size()) * n_levels_ * m_ * 32ull;
  if (footprint > memory_cap_bytes) {
    std::ostringstream oss;
    oss << "transition table would need about " << footprint
        << " bytes (cap " << memory_cap_bytes << ")";
    throw CapacityExceeded(oss.str());
  }

  bb_lo_ = region_->bounding_box().lo;
  bb_hi_ = region_->bounding_box().hi;
  strides_ = region_->strides();
  boundary_ = region_->artificial_boundary();

  build(model, alphabet, penalty);
}

void GridTransitionTable::build(const SystemModel& model,
                                const QuantizerAlphabet& alphabet,
                                const PenaltyFunction& penalty) {
  const Grid& grid = region_->grid();
  const double d = static_cast<double>(grid.D);
  const std::size_t L = inputs_.size();

  phi_min_.resize(n_tiles_);
  slot_.resize(n_tiles_);
  base_.resize(n_tiles_ * m_ * 2);
  offset_.resize(L * n_levels_ * m_ * 2);
  base_int_.assign(n_tiles_ * m_ * 2, 0);
  offset_int_.assign(L * n_levels_ * m_ * 2, 0);
  all_integer_ = true;

  // Per-(input, level) offsets B_k (r_j - u) * D.
  for (std::size_t j = 0; j < L; ++j) {
    for (std::size_t u = 0; u < n_levels_; ++u) {
      DirVal w = sub_dir(point(inputs_.values[j]), point(alphabet.levels[u]));
      for (int k = 0; k < m_; ++k) {
        DirVal off = mul_dir(mul_dir(w, model.B[k]), d);
        std::size_t at = (((j * n_levels_) + u) * m_ + k) * 2;
        offset_[at] = off.dn;
        offset_[at + 1] = off.up;
        std::int64_t iv = 0;
        if (exact_integer(off, iv)) {
          offset_int_[at] = iv;
          offset_int_[at + 1] = iv;
        } else {
          all_integer_ = false;
        }
      }
    }
  }

  // Per-tile enclosures of (A x) * D over the tile closure, one per axis.
  const auto& tiles = region_->tiles();
  for (std::size_t i = 0; i < n_tiles_; ++i) {
    const TileCoords& t = tiles[i];
    slot_[i] = static_cast<std::size_t>(region_->lattice_offset(t));
    phi_min_[i] = phi_min_on_tile(model, penalty, grid, t);
    for (int k = 0; k < m_; ++k) {
      DirVal lo_end = point(0.0), hi_end = point(0.0);
      for (int l = 0; l < m_; ++l) {
        double a = model.A(k, l);
        DirVal c_lo = div_dir(static_cast<double>(t[l]), d);
        DirVal c_hi = div_dir(static_cast<double>(t[l] + 1), d);
        if (a >= 0.0) {
          lo_end = add_dir(lo_end, mul_dir(c_lo, a));
          hi_end = add_dir(hi_end, mul_dir(c_hi, a));
        } else {
          lo_end = add_dir(lo_end, mul_dir(c_hi, a));
          hi_end = add_dir(hi_end, mul_dir(c_lo, a));
        }
      }
      lo_end = mul_dir(lo_end, d);
      hi_end = mul_dir(hi_end, d);
      std::size_t at = (i * m_ + k) * 2;
      base_[at] = lo_end.dn;
      base_[at + 1] = hi_end.up;
      std::int64_t lo = 0, hi = 0;
      if (exact_integer(lo_end, lo) && exact_integer(hi_end, hi)) {
        base_int_[at] = lo;
        base_int_[at + 1] = hi;
      } else {
        all_integer_ = false;
      }
    }
  }
  if (!all_integer_) {
    base_int_.clear();
    offset_int_.clear();
    return;
  }

  // With the one-ulp outward nudge, an exactly-integer lower endpoint lands
  // in the tile below after the floor; the upper endpoint's floor is
  // unchanged.
  if (blind_nudge_)
    for (std::size_t i = 0; i < n_tiles_; ++i)
      for (int k = 0; k < m_; ++k) base_int_[(i * m_ + k) * 2] -= 1;

  // Integer path: the per-axis range span (zhi - zlo) is the same for every
  // tile, which makes a per-sweep max-dilated lattice possible.
  span_.assign(m_, 0);
  for (int k = 0; k < m_; ++k)
    span_[k] = base_int_[2 * k + 1] - base_int_[2 * k];
  for (std::size_t i = 1; i < n_tiles_; ++i)
    for (int k = 0; k < m_; ++k)
      if (base_int_[(i * m_ + k) * 2 + 1] - base_int_[(i * m_ + k) * 2] !=
          span_[k])
        throw std::logic_error("integer range spans are not constant");
  ext_dims_.assign(m_, 0);
  ext_strides_.assign(m_, 1);
  std::int64_t total = 1;
  for (int k = m_ - 1; k >= 0; --k) {
    ext_dims_[k] = (bb_hi_[k] - bb_lo_[k] + 1) + span_[k];
    ext_strides_[k] = total;
    total *= ext_dims_[k];
  }
  ext_size_ = static_cast<std::size_t>(total);
}

void GridTransitionTable::build_dilated(std::span<const double> values,
                                        Scratch& scratch) const {
  // Copy the lattice into the extended domain (lower corner shifted by the
  // span) and run a separable sliding max, window [x, x + span_k] per axis.
  scratch.a.assign(ext_size_, 0.0);
  scratch.b.assign(ext_size_, 0.0);
  double* cur = scratch.a.data();
  double* nxt = scratch.b.data();

  // Embed: ext index of lattice cell c is (c - bb_lo + span) per axis.
  {
    std::int64_t idx[8];
    for (int k = 0; k < m_; ++k) idx[k] = 0;
    const std::int64_t n = static_cast<std::int64_t>(lattice_size_);
    for (std::int64_t flat = 0; flat < n; ++flat) {
      std::int64_t ext = 0;
      for (int k = 0; k < m_; ++k) ext += (idx[k] + span_[k]) * ext_strides_[k];
      cur[ext] = values[static_cast<std::size_t>(flat)];
      for (int k = m_ - 1; k >= 0; --k) {
        if (++idx[k] <= bb_hi_[k] - bb_lo_[k]) break;
        idx[k] = 0;
      }
    }
  }

  for (int axis = 0; axis < m_; ++axis) {
    if (span_[axis] == 0) continue;
    const std::int64_t stride = ext_strides_[axis];
    const std::int64_t dim = ext_dims_[axis];
    const std::int64_t n = static_cast<std::int64_t>(ext_size_);
    for (std::int64_t base = 0; base < n; ++base) {
      std::int64_t pos = (base / stride) % dim;
      double v = cur[base];
      for (std::int64_t t = 1; t <= span_[axis] && pos + t < dim; ++t)
        v = std::max(v, cur[base + t * stride]);
      nxt[base] = v;
    }
    std::swap(cur, nxt);
  }
  if (cur != scratch.a.data()) scratch.a.swap(scratch.b);
}

GridTransitionTable::Prepared GridTransitionTable::prepare(
    std::span<const double> values, Scratch& scratch) const {
  Prepared p;
  p.raw = values;
  if (all_integer_) {
    build_dilated(values, scratch);
    p.dilated = scratch.a.data();
  }
  return p;
}

double GridTransitionTable::successor_max(std::size_t i, std::size_t j,
                                          const Prepared& values) const {
  double v = 0.0;
  std::int64_t lo[8], hi[8];
  if (all_integer_) {
    const std::int64_t* zb = &base_int_[i * m_ * 2];
    const double* dil = values.dilated;
    for (std::size_t u = 0; u < n_levels_; ++u) {
      const std::int64_t* ob = &offset_int_[(((j * n_levels_) + u) * m_) * 2];
      std::int64_t ext = 0;
      bool empty = false;
      for (int k = 0; k < m_; ++k) {
        std::int64_t l = zb[2 * k] + ob[2 * k];
        if (l > bb_hi_[k] || l + span_[k] < bb_lo_[k]) {
          empty = true;  // fully outside: contributes the implicit zero
          break;
        }
        ext += (l - bb_lo_[k] + span_[k]) * ext_strides_[k];
      }
      if (empty) continue;
      v = std::max(v, dil[ext]);
    }
    return v;
  }

  const double* zb = &base_[i * m_ * 2];
  for (std::size_t u = 0; u < n_levels_; ++u) {
    const double* ob = &offset_[(((j * n_levels_) + u) * m_) * 2];
    bool empty = false;
    for (int k = 0; k < m_; ++k) {
      double elo = rounding::add_down(zb[2 * k], ob[2 * k]);
      double ehi = rounding::add_up(zb[2 * k + 1], ob[2 * k + 1]);
      if (blind_nudge_) {
        elo = rounding::down(elo);
        ehi = rounding::up(ehi);
      }
      std::int64_t tl = floor_int(elo);
      std::int64_t th = floor_int(ehi);
      lo[k] = std::max(tl, bb_lo_[k]);
      hi[k] = std::min(th, bb_hi_[k]);
      if (lo[k] > hi[k]) {
        empty = true;
        break;
      }
    }
    if (empty) continue;
    std::int64_t idx[8];
    for (int k = 0; k < m_; ++k) idx[k] = lo[k];
    while (true) {
      std::int64_t off = 0;
      for (int k = 0; k < m_; ++k) off += (idx[k] - bb_lo_[k]) * strides_[k];
      v = std::max(v, values.raw[static_cast<std::size_t>(off)]);
      int k = m_ - 1;
      while (k >= 0) {
        if (++idx[k] <= hi[k]) break;
        idx[k] = lo[k];
        --k;
      }
      if (k < 0) break;
    }
  }
  return v;
}

double GridTransitionTable::successor_max_raw(
    std::size_t i, std::size_t j, std::span<const double> values) const {
  double v = 0.0;
  std::int64_t lo[8], hi[8];
  for (std::size_t u = 0; u < n_levels_; ++u) {
    bool empty = false;
    if (all_integer_) {
      const std::int64_t* zb = &base_int_[i * m_ * 2];
      const std::int64_t* ob = &offset_int_[(((j * n_levels_) + u) * m_) * 2];
      for (int k = 0; k < m_; ++k) {
        lo[k] = std::max(zb[2 * k] + ob[2 * k], bb_lo_[k]);
        hi[k] = std::min(zb[2 * k + 1] + ob[2 * k + 1], bb_hi_[k]);
        if (lo[k] > hi[k]) {
          empty = true;
          break;
        }
      }
    } else {
      const double* zb = &base_[i * m_ * 2];
      const double* ob = &offset_[(((j * n_levels_) + u) * m_) * 2];
      for (int k = 0; k < m_; ++k) {
        double elo = rounding::add_down(zb[2 * k], ob[2 * k]);
        double ehi = rounding::add_up(zb[2 * k + 1], ob[2 * k + 1]);
        if (blind_nudge_) {
          elo = rounding::down(elo);
          ehi = rounding::up(ehi);
        }
        lo[k] = std::max(floor_int(elo), bb_lo_[k]);
        hi[k] = std::min(floor_int(ehi), bb_hi_[k]);
        if (lo[k] > hi[k]) {
          empty = true;
          break;
        }
      }
    }
    if (empty) continue;
    std::int64_t idx[8];
    for (int k = 0; k < m_; ++k) idx[k] = lo[k];
    while (true) {
      std::int64_t off = 0;
      for (int k = 0; k < m_; ++k) off += (idx[k] - bb_lo_[k]) * strides_[k];
      v = std::max(v, values[static_cast<std::size_t>(off)]);
      int k = m_ - 1;
      while (k >= 0) {
        if (++idx[k] <= hi[k]) break;
        idx[k] = lo[k];
        --k;
      }
      if (k < 0) break;
    }
  }
  return v;
}

MinOverInputs GridTransitionTable::min_successor_raw(
    std::size_t i, std::span<const double> values) const {
  MinOverInputs out;
  out.value = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < inputs_.size(); ++j) {
    double v = successor_max_raw(i, j, values);
    if (v < out.value) {
      out.value = v;
      out.argmin = static_cast<std::int32_t>(j);
      if (v == 0.0) break;
    }
  }
  return out;
}

MinOverInputs GridTransitionTable::min_successor_over_inputs(
    std::size_t i, const Prepared& values, std::int32_t hint) const {
  const std::size_t L = inputs_.size();
  MinOverInputs out;
  out.value = std::numeric_limits<double>::infinity();
  std::int32_t skip = -1;
  if (hint >= 0 && static_cast<std::size_t>(hint) < L) {
    double v = successor_max(i, static_cast<std::size_t>(hint), values);
    if (v == 0.0) return {0.0, hint};
    out.value = v;
    out.argmin = hint;
    skip = hint;
  }
  for (std::size_t j = 0; j < L; ++j) {
    if (static_cast<std::int32_t>(j) == skip) continue;
    double v = successor_max(i, j, values);
    if (v < out.value) {
      out.value = v;
      out.argmin = static_cast<std::int32_t>(j);
      if (v == 0.0) break;  // values are nonnegative, the min is attained
    }
  }
  return out;
}

ExplicitTransitionTable::ExplicitTransitionTable(std::vector<double> phi_min,
                                                 std::size_t n_inputs)
    : phi_min_(std::move(phi_min)), n_inputs_(n_inputs) {
  entries_.resize(phi_min_.size() * n_inputs_);
}

void ExplicitTransitionTable::set_entry(std::size_t i, std::size_t j, Entry e) {
  entries_[i * n_inputs_ + j] = std::move(e);
}

double ExplicitTransitionTable::successor_max(std::size_t i, std::size_t j,
                                              const Prepared& values) const {
  const Entry& e = entries_[i * n_inputs_ + j];
  double v = 0.0;  // outside (and the stop option) carry value zero
  for (std::int32_t s : e.successors)
    v = std::max(v, values.raw[static_cast<std::size_t>(s)]);
  return v;
}

MinOverInputs ExplicitTransitionTable::min_successor_over_inputs(
    std::size_t i, const Prepared& values, std::int32_t hint) const {
  MinOverInputs out;
  out.value = std::numeric_limits<double>::infinity();
  std::int32_t skip = -1;
  if (hint >= 0 && static_cast<std::size_t>(hint) < n_inputs_) {
    double v = successor_max(i, static_cast<std::size_t>(hint), values);
    if (v == 0.0) return {0.0, hint};
    out.value = v;
    out.argmin = hint;
    skip = hint;
  }
  for (std::size_t j = 0; j < n_inputs_; ++j) {
    if (static_cast<std::int32_t>(j) == skip) continue;
    double v = successor_max(i, j, values);
    if (v < out.value) {
      out.value = v;
      out.argmin = static_cast<std::int32_t>(j);
      if (v == 0.0) break;
    }
  }
  return out;
}

double default_slack(double conv_tol, int state_dim, double value_scale) {
  const double eps = std::numeric_limits<double>::epsilon();
  return conv_tol + 8.0 * eps * (state_dim + 4) * std::max(1.0, value_scale);
}

namespace {

double game_tail(const SystemModel& model, const QuantizerAlphabet& alphabet,
                 const std::vector<double>& input_set,
                 const std::function<double(const Vector&)>& sigma,
                 const Vector& x, int remaining) {
  double here = sigma(x);
  if (remaining <= 1) return here;
  double best_r = std::numeric_limits<double>::infinity();
  for (double r : input_set) {
    double worst_u = -std::numeric_limits<double>::infinity();
    for (double u : alphabet.levels) {
      double tail =
          game_tail(model, alphabet, input_set, sigma, model.step(x, r, u),
                    remaining - 1);
      // The stop decision: continuing is only taken when profitable.
      worst_u = std::max(worst_u, std::max(0.0, tail));
    }
    best_r = std::min(best_r, worst_u);
  }
  return here + best_r;
}

}  // namespace

double vtau_oracle(const SystemModel& model, const QuantizerAlphabet& alphabet,
                   const std::vector<double>& input_set,
                   const std::function<double(const Vector&)>& sigma,
                   const Vector& x0, int tau, std::uint64_t node_cap) {
  if (tau <= 0) return 0.0;
  long double branch = static_cast<long double>(input_set.size()) *
                       static_cast<long double>(alphabet.size());
  long double nodes = 1.0L;
  for (int k = 1; k < tau; ++k) {
    nodes = nodes * branch + 1.0L;
    if (nodes > static_cast<long double>(node_cap)) {
      std::ostringstream oss;
      oss << "game tree needs more than " << node_cap << " nodes";
      throw CapacityExceeded(oss.str());
    }
  }
  return std::max(0.0, game_tail(model, alphabet, input_set, sigma, x0, tau));
}

}  // namespace adcbound
