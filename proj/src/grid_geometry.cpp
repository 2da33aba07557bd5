#include "adcbound/grid_geometry.hpp"

#include <algorithm>
#include <cmath>

namespace adcbound {

TileCoords tile_of(const Grid& grid, const Vector& x) {
  TileCoords c(grid.dim);
  for (int k = 0; k < grid.dim; ++k)
    c[k] = floor_int(x[k] * static_cast<double>(grid.D));
  return c;
}

namespace {

// Tile closure per axis as a certified interval [c/D, (c+1)/D].
Interval tile_axis_interval(const Grid& grid, std::int64_t c) {
  const double d = static_cast<double>(grid.D);
  return Interval{rounding::div_down(static_cast<double>(c), d),
                  rounding::div_up(static_cast<double>(c + 1), d)};
}

}  // namespace

ImageBox image_bbox(const SystemModel& model, const Grid& grid,
                    const TileCoords& tile, double r, double u) {
  ImageBox box;
  box.axes.resize(model.m);
  std::vector<Interval> xiv(model.m);
  for (int k = 0; k < model.m; ++k)
    xiv[k] = tile_axis_interval(grid, tile[k]);
  Interval w = Interval::point(r) - Interval::point(u);
  for (int k = 0; k < model.m; ++k) {
    Interval acc = scale(w, model.B[k]);
    for (int l = 0; l < model.m; ++l) acc = acc + scale(xiv[l], model.A(k, l));
    // Endpoints are pushed one ulp outward after accumulation.
    box.axes[k] = Interval{rounding::down(acc.lo), rounding::up(acc.hi)};
  }
  return box;
}

IndexBox tiles_meeting_box(const Grid& grid, const ImageBox& box) {
  IndexBox out;
  const int m = static_cast<int>(box.axes.size());
  out.lo.resize(m);
  out.hi.resize(m);
  const double d = static_cast<double>(grid.D);
  for (int k = 0; k < m; ++k) {
    out.lo[k] = floor_int(rounding::mul_down(box.axes[k].lo, d));
    out.hi[k] = floor_int(rounding::mul_up(box.axes[k].hi, d));
  }
  return out;
}

InputGrid::InputGrid(const Grid& grid) {
  values.reserve(static_cast<std::size_t>(2 * grid.D + 1));
  for (std::int64_t j = -grid.D; j <= grid.D; ++j)
    values.push_back(static_cast<double>(j) / static_cast<double>(grid.D));
}

namespace {

// Tile closure as per-axis intervals.
std::vector<Interval> tile_box(const Grid& grid, const TileCoords& tile) {
  std::vector<Interval> iv(grid.dim);
  for (int k = 0; k < grid.dim; ++k) iv[k] = tile_axis_interval(grid, tile[k]);
  return iv;
}

// Enclosure of v.x over a box.
Interval dot_over_box(const Vector& v, const std::vector<Interval>& box) {
  Interval acc = Interval::point(0.0);
  for (int k = 0; k < v.size(); ++k) acc = acc + scale(box[k], v[k]);
  return acc;
}

// General interval product.
Interval interval_product(Interval x, Interval y) {
  double cand_lo[4] = {rounding::mul_down(x.lo, y.lo), rounding::mul_down(x.lo, y.hi),
                       rounding::mul_down(x.hi, y.lo), rounding::mul_down(x.hi, y.hi)};
  double cand_hi[4] = {rounding::mul_up(x.lo, y.lo), rounding::mul_up(x.lo, y.hi),
                       rounding::mul_up(x.hi, y.lo), rounding::mul_up(x.hi, y.hi)};
  return Interval{*std::min_element(cand_lo, cand_lo + 4),
                  *std::max_element(cand_hi, cand_hi + 4)};
}

// Lower bound of x'Mx over a box (interval evaluation; conservative).
double quad_lower_bound(const Matrix& M, const std::vector<Interval>& box) {
  double lb = 0.0;
  const int n = static_cast<int>(M.rows());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Interval p = (i == j) ? square(box[i]) : interval_product(box[i], box[j]);
      lb = rounding::add_down(lb, scale(p, M(i, j)).lo);
    }
  return lb;
}

}  // namespace

TileCoverTest cover_test_all() {
  return [](const Grid&, const TileCoords&) { return true; };
}

TileCoverTest cover_test_strip(const InvariantStrip& strip) {
  Vector n = strip.normal;
  double beta = strip.halfwidth;
  return [n, beta](const Grid& grid, const TileCoords& tile) {
    Interval s = dot_over_box(n, tile_box(grid, tile));
    return s.lo <= beta && s.hi >= -beta;
  };
}

TileCoverTest cover_test_cylinder(const InvariantCylinder& cylinder) {
  InvariantCylinder cyl = cylinder;
  return [cyl](const Grid& grid, const TileCoords& tile) {
    if (cyl.W.cols() == 0) return true;
    auto box = tile_box(grid, tile);
    // y = W'(I-P)x is affine in x: per-component interval is exact-ish.
    Matrix T = cyl.W.transpose() * cyl.projector_complement;
    std::vector<Interval> ybox(T.rows());
    for (int i = 0; i < T.rows(); ++i)
      ybox[i] = dot_over_box(T.row(i).transpose(), box);
    return quad_lower_bound(cyl.Qs, ybox) <= cyl.beta;
  };
}

TileCoverTest cover_test_ellipsoid(const InvariantEllipsoid& ellipsoid) {
  InvariantEllipsoid ell = ellipsoid;
  return [ell](const Grid& grid, const TileCoords& tile) {
    return quad_lower_bound(ell.P, tile_box(grid, tile)) <= ell.radius_sq;
  };
}

TileCoverTest cover_test_intersection(std::vector<TileCoverTest> tests) {
  return [tests = std::move(tests)](const Grid& g, const TileCoords& t) {
    for (const auto& test : tests)
      if (!test(g, t)) return false;
    return true;
  };
}

Region::Region(const Grid& grid, const AlignedBox& window, TileCoverTest cover)
    : grid_(grid), window_(window), cover_(std::move(cover)) {
  const int m = grid.dim;
  if (window.lo.size() != m || window.hi.size() != m)
    throw ConfigError("region window dimension mismatch");

  // Tiles whose closure meets the closed window box.
  IndexBox range;
  range.lo.resize(m);
  range.hi.resize(m);
  const double d = static_cast<double>(grid.D);
  for (int k = 0; k < m; ++k) {
    double lo = rounding::mul_down(window.lo[k], d);
    double hi = rounding::mul_up(window.hi[k], d);
    std::int64_t clo = floor_int(lo);
    if (static_cast<double>(clo) == lo) --clo;  // closure touches from below
    range.lo[k] = clo;
    range.hi[k] = floor_int(hi);
  }

  TileCoords c = range.lo;
  while (true) {
    if (cover_(grid_, c)) tiles_.push_back(c);
    int k = m - 1;
    while (k >= 0) {
      if (++c[k] <= range.hi[k]) break;
      c[k] = range.lo[k];
      --k;
    }
    if (k < 0) break;
  }
  std::sort(tiles_.begin(), tiles_.end());
  build_lattice();
}

Region::Region(const Grid& grid, std::vector<TileCoords> tiles,
               TileCoverTest cover)
    : grid_(grid), cover_(std::move(cover)), tiles_(std::move(tiles)) {
  if (tiles_.empty()) throw ConfigError("region must contain at least one tile");
  std::sort(tiles_.begin(), tiles_.end());
  tiles_.erase(std::unique(tiles_.begin(), tiles_.end()), tiles_.end());
  const int m = grid.dim;
  window_.lo = Vector(m);
  window_.hi = Vector(m);
  build_lattice();
  for (int k = 0; k < m; ++k) {
    window_.lo[k] = grid.corner(bbox_.lo[k]);
    window_.hi[k] = grid.corner(bbox_.hi[k] + 1);
  }
}

void Region::build_lattice() {
  if (tiles_.empty()) throw ConfigError("region is empty");
  const int m = grid_.dim;
  bbox_.lo.assign(m, std::numeric_limits<std::int64_t>::max());
  bbox_.hi.assign(m, std::numeric_limits<std::int64_t>::min());
  for (const auto& t : tiles_)
    for (int k = 0; k < m; ++k) {
      bbox_.lo[k] = std::min(bbox_.lo[k], t[k]);
      bbox_.hi[k] = std::max(bbox_.hi[k], t[k]);
    }
  strides_.assign(m, 1);
  std::int64_t total = 1;
  for (int k = m - 1; k >= 0; --k) {
    strides_[k] = total;
    total *= bbox_.hi[k] - bbox_.lo[k] + 1;
  }
  lattice_.assign(static_cast<std::size_t>(total), -1);
  for (std::size_t i = 0; i < tiles_.size(); ++i)
    lattice_[static_cast<std::size_t>(lattice_offset(tiles_[i]))] =
        static_cast<std::int64_t>(i);
}

std::int64_t Region::lattice_offset(const TileCoords& c) const {
  std::int64_t off = 0;
  for (int k = 0; k < grid_.dim; ++k) off += (c[k] - bbox_.lo[k]) * strides_[k];
  return off;
}

std::int64_t Region::index_of(const TileCoords& c) const {
  if (!bbox_.contains(c)) return -1;
  return lattice_[static_cast<std::size_t>(lattice_offset(c))];
}

std::vector<std::int64_t> Region::artificial_boundary() const {
  std::vector<std::int64_t> out;
  TileCoords nb;
  for (std::size_t i = 0; i < tiles_.size(); ++i) {
    const TileCoords& t = tiles_[i];
    bool boundary = false;
    for (int k = 0; k < grid_.dim && !boundary; ++k) {
      for (int s : {-1, +1}) {
        nb = t;
        nb[k] += s;
        if (contains(nb)) continue;
        if (cover_(grid_, nb)) {  // missing neighbor still meets the set
          boundary = true;
          break;
        }
      }
    }
    if (boundary) out.push_back(static_cast<std::int64_t>(i));
  }
  return out;
}

double phi_min_on_tile(const SystemModel& model, const PenaltyFunction& penalty,
                       const Grid& grid, const TileCoords& tile) {
  Interval cx = dot_over_box(model.C.transpose(), tile_box(grid, tile));
  double lo = min_abs(cx);
  if (penalty.kind == PenaltyFunction::Kind::Square)
    lo = rounding::mul_down(lo, lo);
  return lo;
}

double sigma_sup_on_tile(const SystemModel& model,
                         const PenaltyFunction& penalty, const Grid& grid,
                         double gamma, const TileCoords& tile) {
  return gamma - phi_min_on_tile(model, penalty, grid, tile);
}

TileCover intersecting_tiles(const Region& region, const ImageBox& box) {
  IndexBox range = tiles_meeting_box(region.grid(), box);
  TileCover cover;
  const int m = region.grid().dim;
  TileCoords c = range.lo;
  if (range.empty()) return cover;
  while (true) {
    if (region.contains(c))
      cover.in_region.push_back(c);
    else {
      cover.outside.push_back(c);
      cover.touches_outside = true;
    }
    int k = m - 1;
    while (k >= 0) {
      if (++c[k] <= range.hi[k]) break;
      c[k] = range.lo[k];
      --k;
    }
    if (k < 0) break;
  }
  return cover;
}

}  // namespace adcbound
