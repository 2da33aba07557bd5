#ifndef ADCBOUND_GRID_GEOMETRY_HPP
#define ADCBOUND_GRID_GEOMETRY_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "adcbound/interval.hpp"
#include "adcbound/system_model.hpp"

namespace adcbound {

using TileCoords = std::vector<std::int64_t>;

// Uniform grid with spacing 1/D.  D is stored, never the spacing, so grid
// coordinates that are integer multiples of the spacing stay exact.
struct Grid {
  std::int64_t D = 1;
  int dim = 1;

  Grid(std::int64_t d, int m) : D(d), dim(m) {
    if (d < 1) throw ConfigError("grid density D must be >= 1");
    if (m < 1) throw ConfigError("grid dimension must be >= 1");
  }

  double delta() const { return 1.0 / static_cast<double>(D); }
  // Lower corner coordinate of tile index c along one axis.
  double corner(std::int64_t c) const {
    return static_cast<double>(c) / static_cast<double>(D);
  }
};

// Tiles are half-open hypercubes [c*delta, (c+1)*delta) per axis; the faces
// containing the lexicographically smallest vertex are closed.
TileCoords tile_of(const Grid& grid, const Vector& x);

// Inclusive per-axis tile index ranges.
struct IndexBox {
  std::vector<std::int64_t> lo;
  std::vector<std::int64_t> hi;

  bool empty() const {
    for (std::size_t k = 0; k < lo.size(); ++k)
      if (lo[k] > hi[k]) return true;
    return false;
  }
  std::int64_t count() const {
    std::int64_t n = 1;
    for (std::size_t k = 0; k < lo.size(); ++k) {
      if (lo[k] > hi[k]) return 0;
      n *= hi[k] - lo[k] + 1;
    }
    return n;
  }
  bool contains(const TileCoords& c) const {
    for (std::size_t k = 0; k < lo.size(); ++k)
      if (c[k] < lo[k] || c[k] > hi[k]) return false;
    return true;
  }
};

// Certified enclosure box of a tile image; closed on all faces.
struct ImageBox {
  std::vector<Interval> axes;
};

// Bounding box of {A x + B r - B u : x in closure(tile)}, one interval per
// row of A, with certified outward rounding.
ImageBox image_bbox(const SystemModel& model, const Grid& grid,
                    const TileCoords& tile, double r, double u);

// All tiles meeting a closed box under the half-open tile convention:
// per axis, indices floor(lo*D) .. floor(hi*D) of the certified enclosure.
IndexBox tiles_meeting_box(const Grid& grid, const ImageBox& box);

// Input grid: grid points inside [-1, 1], symmetric, endpoints exact.
struct InputGrid {
  std::vector<double> values;

  explicit InputGrid(const Grid& grid);
  std::size_t size() const { return values.size(); }
};

// Membership oracle for tiles against an invariant set: must return true for
// every tile whose closure meets the set (extra true answers are allowed and
// only enlarge the region).
using TileCoverTest = std::function<bool(const Grid&, const TileCoords&)>;

TileCoverTest cover_test_all();
TileCoverTest cover_test_strip(const InvariantStrip& strip);
TileCoverTest cover_test_cylinder(const InvariantCylinder& cylinder);
TileCoverTest cover_test_ellipsoid(const InvariantEllipsoid& ellipsoid);
TileCoverTest cover_test_intersection(std::vector<TileCoverTest> tests);

// Finite tile set covering (invariant set) ∩ (window box), stored with a
// dense index lattice over its bounding box for O(1) membership.
class Region {
 public:
  Region(const Grid& grid, const AlignedBox& window, TileCoverTest cover);
  // Explicit tile list; `cover` classifies missing neighbors for the
  // artificial-boundary test.
  Region(const Grid& grid, std::vector<TileCoords> tiles,
         TileCoverTest cover = cover_test_all());

  const Grid& grid() const { return grid_; }
  std::size_t tile_count() const { return tiles_.size(); }
  const std::vector<TileCoords>& tiles() const { return tiles_; }
  const IndexBox& bounding_box() const { return bbox_; }
  const AlignedBox& window() const { return window_; }
  const TileCoverTest& cover_test() const { return cover_; }

  // Region index of a tile, or -1.
  std::int64_t index_of(const TileCoords& c) const;
  bool contains(const TileCoords& c) const { return index_of(c) >= 0; }

  // Flat offset of lattice cell c inside the bounding box (c must be inside).
  std::int64_t lattice_offset(const TileCoords& c) const;
  std::int64_t lattice_size() const { return lattice_.size(); }
  // Region index stored at a lattice offset, or -1 for non-region cells.
  std::int64_t region_index_at(std::int64_t offset) const {
    return lattice_[static_cast<std::size_t>(offset)];
  }
  const std::vector<std::int64_t>& strides() const { return strides_; }

  // Tiles adjacent (face neighbors) to missing tiles that still meet the
  // invariant set: the artificial boundary where the zero-outside convention
  // must be checked.  Neighbors outside the invariant set itself are exempt.
  std::vector<std::int64_t> artificial_boundary() const;

 private:
  void build_lattice();

  Grid grid_;
  AlignedBox window_;
  TileCoverTest cover_;
  std::vector<TileCoords> tiles_;   // sorted lexicographically
  IndexBox bbox_;
  std::vector<std::int64_t> strides_;
  std::vector<std::int64_t> lattice_;  // region index or -1 per bbox cell
};

// Certified lower bound of min over the closure of the tile of phi(Cx);
// gamma - (this value) over-approximates the stage payoff supremum.
double phi_min_on_tile(const SystemModel& model, const PenaltyFunction& penalty,
                       const Grid& grid, const TileCoords& tile);

double sigma_sup_on_tile(const SystemModel& model,
                         const PenaltyFunction& penalty, const Grid& grid,
                         double gamma, const TileCoords& tile);

// Diagnostic split of tiles_meeting_box against a region.
struct TileCover {
  std::vector<TileCoords> in_region;
  std::vector<TileCoords> outside;
  bool touches_outside = false;
};

TileCover intersecting_tiles(const Region& region, const ImageBox& box);

}  // namespace adcbound

#endif
