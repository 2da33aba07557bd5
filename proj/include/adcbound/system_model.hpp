#ifndef ADCBOUND_SYSTEM_MODEL_HPP
#define ADCBOUND_SYSTEM_MODEL_HPP

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "adcbound/errors.hpp"

namespace adcbound {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

// Stage penalty phi applied to the filtered error q = Cx.
struct PenaltyFunction {
  enum class Kind { AbsoluteValue, Square };
  Kind kind = Kind::AbsoluteValue;

  double operator()(double q) const {
    return kind == Kind::AbsoluteValue ? std::abs(q) : q * q;
  }

  static PenaltyFunction from_string(const std::string& s);
  std::string to_string() const;
};

// Finite output alphabet of the quantizer.  Levels are strictly sorted and
// must bracket the input range: min < -1 and max > 1.
struct QuantizerAlphabet {
  std::vector<double> levels;

  explicit QuantizerAlphabet(std::vector<double> lv);

  double min() const { return levels.front(); }
  double max() const { return levels.back(); }
  std::size_t size() const { return levels.size(); }
  bool contains(double u) const;
  // Largest |r - u| over r in [-1,1], u in the alphabet.
  double max_error_step() const;
  // Nearest level to y; exact ties resolve to the lower level.
  double nearest(double y) const;
};

enum class SpectrumClass { Stable, SingleUnitRoot };

// State-space realization (A, B, C) of the strictly causal shaping filter,
// with scalar input and output.  Construction validates controllability and
// the spectral hypothesis: at most one eigenvalue with modulus within eig_tol
// of 1, real and simple; all others strictly inside the unit circle.
struct SystemModel {
  Matrix A;
  Vector B;
  RowVector C;
  int m = 0;

  SpectrumClass spectrum = SpectrumClass::Stable;
  double unit_eigenvalue = 0.0;     // valid when spectrum == SingleUnitRoot
  Vector unit_eigenvector;          // likewise; normalized, deterministic sign

  static constexpr double eig_tol = 1e-9;

  SystemModel(Matrix a, Vector b, RowVector c);

  // Successor state A x + B (r - u).
  Vector step(const Vector& x, double r, double u) const {
    return A * x + B * (r - u);
  }
};

// Slab |normal . x| <= halfwidth.
struct InvariantStrip {
  Vector normal;
  double halfwidth = 0.0;

  bool contains(const Vector& x) const {
    return std::abs(normal.dot(x)) <= halfwidth;
  }
};

// Tube around the unit-circle eigenvector: the Q-seminorm of the component
// transverse to the axis is bounded by beta.  W holds an orthonormal basis of
// the A-invariant complement of the axis and Qs the quotient Lyapunov matrix,
// so membership is |W' (I - P) x|_Qs^2 <= beta.
struct InvariantCylinder {
  Vector axis;
  Matrix Q;        // full-space certificate matrix, Q - A'QA >= 0
  double beta = 0.0;

  Matrix projector_complement;  // I - P, maps onto the complement of the axis
  Matrix W;                     // m x (m-1), orthonormal columns
  Matrix Qs;                    // (m-1) x (m-1), positive definite

  double transverse_seminorm_sq(const Vector& x) const;
  bool contains(const Vector& x) const {
    return transverse_seminorm_sq(x) <= beta;
  }
};

// Bounded invariant ellipsoid x'Px <= radius^2 for strictly stable A.
struct InvariantEllipsoid {
  Matrix P;
  double radius_sq = 0.0;

  bool contains(const Vector& x) const { return x.dot(P * x) <= radius_sq; }
};

struct AlignedBox {
  Vector lo;
  Vector hi;
};

struct InvarianceWitness {
  Vector x;
  double r = 0.0;
  double u = 0.0;
};

struct InvarianceCheck {
  bool holds = false;
  double attained = 0.0;  // certified upper bound on the one-step sup
  std::optional<InvarianceWitness> witness;
};

// Controllable canonical realization of num(z)/den(z), coefficients in
// descending powers of z.  Requires a strictly proper transfer function.
SystemModel canonical_realization(const std::vector<double>& num_coeffs,
                                  const std::vector<double>& den_coeffs);

// L_c = [A^{m-1} B ... A B  B].
Matrix controllability_matrix(const SystemModel& model);

// Exact one-step check of strong invariance of the strip: the supremum of
// |n.(Ax + Br - Bu)| over the strip and extreme (r, u) is evaluated in closed
// form; a violating (x, r, u) is returned when the bound fails.
InvarianceCheck verify_strong_invariance(const SystemModel& model,
                                         const QuantizerAlphabet& alphabet,
                                         const InvariantStrip& strip);

// Builds an invariant cylinder around the unit-circle eigenvector.  Throws
// UnsupportedSpectrum when no unit-circle eigenvalue exists and
// DegenerateOutputDirection when C is orthogonal to the axis.
InvariantCylinder invariant_cylinder(const SystemModel& model,
                                     const QuantizerAlphabet& alphabet);

// Bounded invariant ellipsoid for strictly stable A (Lyapunov sublevel set,
// inflated until the one-step contraction bound closes).
InvariantEllipsoid invariant_ellipsoid(const SystemModel& model,
                                       const QuantizerAlphabet& alphabet);

// Axis-aligned bounding box of {x in cylinder : phi(Cx) < gamma + eps0},
// padded by `pad` on every face.  Bounded because C.axis != 0.
AlignedBox seed_region_box(const SystemModel& model,
                           const PenaltyFunction& penalty,
                           const InvariantCylinder& cylinder, double gamma,
                           double eps0, double pad);

// m-step input sequence driving x0 to `target` with u = 0; throws OutOfRange
// when the required inputs leave [-1,1]^m.
std::vector<double> deadbeat_map_rho(const SystemModel& model, const Vector& x0,
                                     const Vector& target);

}  // namespace adcbound

#endif
