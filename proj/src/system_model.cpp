#include "adcbound/system_model.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "adcbound/interval.hpp"

namespace adcbound {

PenaltyFunction PenaltyFunction::from_string(const std::string& s) {
  if (s == "abs" || s == "absolute_value")
    return {PenaltyFunction::Kind::AbsoluteValue};
  if (s == "square") return {PenaltyFunction::Kind::Square};
  throw ConfigError("unknown penalty kind: " + s);
}

std::string PenaltyFunction::to_string() const {
  return kind == Kind::AbsoluteValue ? "abs" : "square";
}

QuantizerAlphabet::QuantizerAlphabet(std::vector<double> lv)
    : levels(std::move(lv)) {
  if (levels.size() < 2) throw ModelError("alphabet needs at least 2 levels");
  for (std::size_t i = 1; i < levels.size(); ++i)
    if (!(levels[i - 1] < levels[i]))
      throw ModelError("alphabet levels must be strictly increasing");
  if (!(levels.front() < -1.0) || !(levels.back() > 1.0))
    throw ModelError("alphabet must bracket the input range: min < -1 < 1 < max");
}

bool QuantizerAlphabet::contains(double u) const {
  return std::binary_search(levels.begin(), levels.end(), u);
}

double QuantizerAlphabet::max_error_step() const {
  double best = 0.0;
  for (double r : {-1.0, 1.0})
    for (double u : {levels.front(), levels.back()})
      best = std::max(best, std::abs(r - u));
  return best;
}

double QuantizerAlphabet::nearest(double y) const {
  auto it = std::lower_bound(levels.begin(), levels.end(), y);
  if (it == levels.begin()) return *it;
  if (it == levels.end()) return levels.back();
  double above = *it, below = *(it - 1);
  return (y - below <= above - y) ? below : above;
}

namespace {

// Deterministic sign: largest-magnitude entry positive.
void fix_sign(Vector& v) {
  int idx = 0;
  v.cwiseAbs().maxCoeff(&idx);
  if (v[idx] < 0.0) v = -v;
}

}  // namespace

SystemModel::SystemModel(Matrix a, Vector b, RowVector c)
    : A(std::move(a)), B(std::move(b)), C(std::move(c)) {
  m = static_cast<int>(A.rows());
  if (m < 1 || A.cols() != m) throw ModelError("A must be square and nonempty");
  if (B.size() != m || C.size() != m)
    throw ModelError("B and C must match the state dimension");

  // Controllability.
  Matrix lc(m, m);
  Vector col = B;
  for (int i = m - 1; i >= 0; --i) {
    lc.col(i) = col;
    col = A * col;
  }
  Eigen::FullPivLU<Matrix> lu(lc);
  if (lu.rank() != m) throw ModelError("(A, B) is not controllable");

  // Spectrum classification.
  Eigen::EigenSolver<Matrix> es(A);
  if (es.info() != Eigen::Success) throw ModelError("eigendecomposition failed");
  int unit_count = 0;
  int unit_idx = -1;
  for (int i = 0; i < m; ++i) {
    double mod = std::abs(es.eigenvalues()[i]);
    if (mod >= 1.0 - eig_tol) {
      ++unit_count;
      unit_idx = i;
    }
  }
  if (unit_count == 0) {
    spectrum = SpectrumClass::Stable;
  } else if (unit_count == 1) {
    std::complex<double> lam = es.eigenvalues()[unit_idx];
    if (std::abs(std::abs(lam) - 1.0) > eig_tol)
      throw UnsupportedSpectrum("eigenvalue outside the unit circle");
    if (std::abs(lam.imag()) > eig_tol)
      throw UnsupportedSpectrum("unit-circle eigenvalue must be real");
    spectrum = SpectrumClass::SingleUnitRoot;
    unit_eigenvalue = lam.real() >= 0.0 ? 1.0 : -1.0;
    Vector v = es.eigenvectors().col(unit_idx).real();
    if (v.norm() < 1e-12)
      throw UnsupportedSpectrum("degenerate unit-circle eigenvector");
    v.normalize();
    fix_sign(v);
    unit_eigenvector = v;
  } else {
    throw UnsupportedSpectrum("more than one eigenvalue on the unit circle");
  }
}

SystemModel canonical_realization(const std::vector<double>& num_coeffs,
                                  const std::vector<double>& den_coeffs) {
  std::vector<double> den = den_coeffs;
  while (!den.empty() && den.front() == 0.0) den.erase(den.begin());
  if (den.empty()) throw ModelError("zero denominator");
  std::vector<double> num = num_coeffs;
  while (!num.empty() && num.front() == 0.0) num.erase(num.begin());

  int m = static_cast<int>(den.size()) - 1;
  if (m < 1) throw ModelError("denominator must have positive degree");
  if (static_cast<int>(num.size()) > m)
    throw ModelError("transfer function must be strictly proper");

  double lead = den.front();
  Matrix A = Matrix::Zero(m, m);
  for (int i = 1; i <= m; ++i) A(0, i - 1) = -den[i] / lead;
  for (int i = 1; i < m; ++i) A(i, i - 1) = 1.0;
  Vector B = Vector::Zero(m);
  B[0] = 1.0;
  RowVector C = RowVector::Zero(m);
  int pad = m - static_cast<int>(num.size());
  for (std::size_t i = 0; i < num.size(); ++i)
    C[pad + static_cast<int>(i)] = num[i] / lead;
  return SystemModel(std::move(A), std::move(B), std::move(C));
}

Matrix controllability_matrix(const SystemModel& model) {
  Matrix lc(model.m, model.m);
  Vector col = model.B;
  for (int i = model.m - 1; i >= 0; --i) {
    lc.col(i) = col;
    col = model.A * col;
  }
  return lc;
}

InvarianceCheck verify_strong_invariance(const SystemModel& model,
                                         const QuantizerAlphabet& alphabet,
                                         const InvariantStrip& strip) {
  const Vector& n = strip.normal;
  const double beta = strip.halfwidth;
  Vector an = model.A.transpose() * n;
  double nsq = n.squaredNorm();
  double alpha = an.dot(n) / nsq;
  Vector residual = an - alpha * n;

  double nb = n.dot(model.B);
  double wmax = 0.0;
  double r_star = 1.0, u_star = alphabet.min();
  for (double r : {-1.0, 1.0})
    for (double u : {alphabet.min(), alphabet.max()}) {
      double w = std::abs(r - u) * std::abs(nb);
      if (w > wmax) {
        wmax = w;
        r_star = r;
        u_star = u;
      }
    }
  // Make sign(n.B (r-u)) positive for the witness direction.
  if (nb * (r_star - u_star) < 0.0) {
    r_star = -r_star;
    u_star = (u_star == alphabet.min()) ? alphabet.max() : alphabet.min();
  }

  InvarianceCheck out;
  if (residual.norm() > 1e-9 * std::max(1.0, an.norm())) {
    // A' n is not aligned with n: the sup over the (unbounded) strip is
    // infinite, pick a transverse witness far enough out.
    out.holds = false;
    out.attained = std::numeric_limits<double>::infinity();
    double t = (2.0 * beta + wmax + 1.0) / residual.squaredNorm();
    InvarianceWitness w;
    w.x = t * residual;
    w.r = r_star;
    w.u = u_star;
    out.witness = w;
    return out;
  }

  double sup = rounding::add_up(rounding::mul_up(std::abs(alpha), beta), wmax);
  out.attained = sup;
  out.holds = sup <= beta;
  if (!out.holds) {
    InvarianceWitness w;
    // Boundary point with n.x = beta * sign(alpha) so both terms add up.
    double s = (alpha >= 0.0) ? 1.0 : -1.0;
    w.x = s * beta / nsq * n;
    w.r = r_star;
    w.u = u_star;
    out.witness = w;
  }
  return out;
}

namespace {

// Solve X - M' X M = RHS for symmetric X (small dense Kronecker solve).
Matrix discrete_lyapunov(const Matrix& M, const Matrix& rhs) {
  int n = static_cast<int>(M.rows());
  if (n == 0) return Matrix(0, 0);
  Matrix K = Matrix::Identity(n * n, n * n);
  // K -= kron(M', M')
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          K(i * n + k, j * n + l) -= M(j, i) * M(l, k);
  Vector v(n * n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) v(j * n + k) = rhs(k, j);
  Vector sol = K.fullPivLu().solve(v);
  Matrix X(n, n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) X(k, j) = sol(j * n + k);
  return 0.5 * (X + X.transpose());
}

// Contraction factor of M in the metric of X, where X - M'XM = I:
// |Mx|_X^2 <= (1 - 1/lambda_max(X)) |x|_X^2.
double contraction_factor(const Matrix& X) {
  if (X.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(X);
  double lmax = es.eigenvalues().maxCoeff();
  return std::sqrt(std::max(0.0, 1.0 - 1.0 / lmax));
}

}  // namespace

double InvariantCylinder::transverse_seminorm_sq(const Vector& x) const {
  if (W.cols() == 0) return 0.0;
  Vector y = W.transpose() * (projector_complement * x);
  return y.dot(Qs * y);
}

InvariantCylinder invariant_cylinder(const SystemModel& model,
                                     const QuantizerAlphabet& alphabet) {
  if (model.spectrum != SpectrumClass::SingleUnitRoot)
    throw UnsupportedSpectrum(
        "no unit-circle eigenvalue: use a bounded invariant set instead");
  const int m = model.m;
  const Vector e1 = model.unit_eigenvector;
  if (std::abs(model.C * e1) <= 1e-9 * model.C.norm())
    throw DegenerateOutputDirection("C is orthogonal to the unit eigenvector");

  // Left eigenvector of the unit eigenvalue -> spectral projector P, whose
  // complement range is A-invariant.
  Eigen::JacobiSVD<Matrix> svd(
      model.A.transpose() - model.unit_eigenvalue * Matrix::Identity(m, m),
      Eigen::ComputeFullV);
  Vector w1 = svd.matrixV().col(m - 1);
  double denom = w1.dot(e1);
  if (std::abs(denom) < 1e-12)
    throw UnsupportedSpectrum("unit-circle eigenvalue is defective");
  Matrix P = (e1 * w1.transpose()) / denom;
  Matrix IP = Matrix::Identity(m, m) - P;

  InvariantCylinder cyl;
  cyl.axis = e1;
  cyl.projector_complement = IP;

  // Orthonormal basis of range(I - P).
  Eigen::JacobiSVD<Matrix> svd2(IP, Eigen::ComputeFullU);
  Matrix W(m, m - 1);
  for (int i = 0; i < m - 1; ++i) W.col(i) = svd2.matrixU().col(i);
  cyl.W = W;

  if (m == 1) {
    cyl.Qs = Matrix(0, 0);
    cyl.Q = Matrix::Identity(1, 1) * 0.0;
    cyl.Q(0, 0) = 1.0;
    cyl.beta = 1.0;  // seminorm is identically zero; any beta > 0 works
    return cyl;
  }

  Matrix As = W.transpose() * model.A * W;
  Matrix Qs = discrete_lyapunov(As, Matrix::Identity(m - 1, m - 1));
  Eigen::LLT<Matrix> llt(Qs);
  if (llt.info() != Eigen::Success)
    throw UnsupportedSpectrum("quotient Lyapunov solution is not positive definite");
  cyl.Qs = Qs;

  double rho = contraction_factor(Qs);
  Vector yb = W.transpose() * (IP * model.B);
  double c = alphabet.max_error_step() * std::sqrt(yb.dot(Qs * yb));
  double root_beta = (rho < 1.0) ? c / (1.0 - rho) : 0.0;
  if (root_beta <= 0.0) root_beta = 1.0;

  // Inflate until the one-step bound rho*sqrt(beta) + c <= sqrt(beta) closes
  // with a float margin.
  for (int k = 0; k < 200; ++k) {
    double lhs = rounding::add_up(rounding::mul_up(rho, root_beta), c);
    if (lhs <= root_beta) break;
    root_beta *= 1.25;
  }
  cyl.beta = root_beta * root_beta;

  // Full-space certificate Q = (I-P)' W Qs W' (I-P) + w1 w1' / (w1.e1)^2.
  Matrix mid = W * Qs * W.transpose();
  cyl.Q = IP.transpose() * mid * IP + (w1 * w1.transpose()) / (denom * denom);
  return cyl;
}

InvariantEllipsoid invariant_ellipsoid(const SystemModel& model,
                                       const QuantizerAlphabet& alphabet) {
  if (model.spectrum != SpectrumClass::Stable)
    throw UnsupportedSpectrum("invariant ellipsoid requires a strictly stable A");
  Matrix P = discrete_lyapunov(model.A, Matrix::Identity(model.m, model.m));
  Eigen::LLT<Matrix> llt(P);
  if (llt.info() != Eigen::Success)
    throw UnsupportedSpectrum("Lyapunov solution is not positive definite");
  double rho = contraction_factor(P);
  double c = alphabet.max_error_step() * std::sqrt(model.B.dot(P * model.B));
  double radius = c / (1.0 - rho);
  for (int k = 0; k < 200; ++k) {
    double lhs = rounding::add_up(rounding::mul_up(rho, radius), c);
    if (lhs <= radius) break;
    radius *= 1.25;
  }
  InvariantEllipsoid ell;
  ell.P = P;
  ell.radius_sq = radius * radius;
  return ell;
}

AlignedBox seed_region_box(const SystemModel& model,
                           const PenaltyFunction& penalty,
                           const InvariantCylinder& cylinder, double gamma,
                           double eps0, double pad) {
  if (eps0 <= 0.0) throw ModelError("eps0 must be positive");
  double level = gamma + eps0;
  double b = penalty.kind == PenaltyFunction::Kind::AbsoluteValue
                 ? level
                 : std::sqrt(std::max(0.0, level));

  const Vector& e1 = cylinder.axis;
  double ce1 = model.C * e1;
  const int m = model.m;

  AlignedBox box;
  box.lo = Vector(m);
  box.hi = Vector(m);
  for (int k = 0; k < m; ++k) {
    // x = t e1 + W y with |C x| <= b and |y|_Qs <= sqrt(beta):
    // extremal x_k = +-b e1_k / (C e1) + max_y g.y, g = e_k - (e1_k/Ce1) C'.
    double axis_term = b * std::abs(e1[k] / ce1);
    double cross_term = 0.0;
    if (cylinder.W.cols() > 0) {
      Vector g = Vector::Zero(m);
      g[k] = 1.0;
      g -= (e1[k] / ce1) * model.C.transpose();
      Vector gw = cylinder.W.transpose() * g;
      Vector sol = cylinder.Qs.llt().solve(gw);
      cross_term = std::sqrt(std::max(0.0, cylinder.beta * gw.dot(sol)));
    }
    double extent = axis_term + cross_term + pad;
    box.lo[k] = -extent;
    box.hi[k] = extent;
  }
  return box;
}

std::vector<double> deadbeat_map_rho(const SystemModel& model, const Vector& x0,
                                     const Vector& target) {
  Matrix lc = controllability_matrix(model);
  Matrix am = Matrix::Identity(model.m, model.m);
  for (int i = 0; i < model.m; ++i) am = model.A * am;
  Vector rho = lc.fullPivLu().solve(-(am * x0 - target));
  double norm = rho.lpNorm<Eigen::Infinity>();
  if (norm > 1.0 + 1e-12) {
    std::ostringstream oss;
    oss << "deadbeat inputs leave [-1,1]: |rho|_inf = " << norm;
    throw OutOfRange(oss.str(), norm);
  }
  return std::vector<double>(rho.data(), rho.data() + rho.size());
}

}  // namespace adcbound
