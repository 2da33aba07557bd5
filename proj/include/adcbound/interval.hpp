#ifndef ADCBOUND_INTERVAL_HPP
#define ADCBOUND_INTERVAL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

namespace adcbound {

// Certified enclosure of a real number or of a real interval.
//
// Every operation returns bounds that contain the exact real result.  Instead
// of blindly widening by one ulp per operation, the rounding residual of each
// double operation is recovered exactly (TwoSum / FMA) and the bound is nudged
// only when the operation actually rounded.  On dyadic data (grid multiples of
// 1/D with D a power of two, integer matrices) all enclosures stay degenerate,
// which keeps tile-image index ranges exact.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  static Interval point(double v) { return {v, v}; }
  bool is_point() const { return lo == hi; }
  double width() const { return hi - lo; }
};

namespace rounding {

inline double down(double x) {
  return std::nextafter(x, -std::numeric_limits<double>::infinity());
}
inline double up(double x) {
  return std::nextafter(x, std::numeric_limits<double>::infinity());
}

// Sum rounded toward -inf: result <= exact a+b.
inline double add_down(double a, double b) {
  double s = a + b;
  double bb = s - a;
  double err = (a - (s - bb)) + (b - bb);  // exact residual of the rounding
  return err < 0.0 ? down(s) : s;
}

// Sum rounded toward +inf: result >= exact a+b.
inline double add_up(double a, double b) {
  double s = a + b;
  double bb = s - a;
  double err = (a - (s - bb)) + (b - bb);
  return err > 0.0 ? up(s) : s;
}

inline double sub_down(double a, double b) { return add_down(a, -b); }
inline double sub_up(double a, double b) { return add_up(a, -b); }

// Product rounded toward -inf / +inf; residual via FMA is exact.
inline double mul_down(double a, double b) {
  double p = a * b;
  double err = std::fma(a, b, -p);
  return err < 0.0 ? down(p) : p;
}
inline double mul_up(double a, double b) {
  double p = a * b;
  double err = std::fma(a, b, -p);
  return err > 0.0 ? up(p) : p;
}

// Quotient rounded toward -inf / +inf for positive divisor; the residual of a
// correctly rounded division is exactly representable and FMA recovers it.
inline double div_down(double a, double b) {
  double q = a / b;
  double r = std::fma(-q, b, a);  // exact a - q*b
  return r < 0.0 ? down(q) : q;
}
inline double div_up(double a, double b) {
  double q = a / b;
  double r = std::fma(-q, b, a);
  return r > 0.0 ? up(q) : q;
}

}  // namespace rounding

inline Interval operator+(Interval a, Interval b) {
  return {rounding::add_down(a.lo, b.lo), rounding::add_up(a.hi, b.hi)};
}

inline Interval operator-(Interval a) { return {-a.hi, -a.lo}; }

inline Interval operator-(Interval a, Interval b) { return a + (-b); }

// Scale by a point value.
inline Interval scale(Interval a, double c) {
  if (c >= 0.0) return {rounding::mul_down(a.lo, c), rounding::mul_up(a.hi, c)};
  return {rounding::mul_down(a.hi, c), rounding::mul_up(a.lo, c)};
}

inline Interval hull(Interval a, Interval b) {
  return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)};
}

inline bool contains(Interval a, double x) { return a.lo <= x && x <= a.hi; }

// Enclosure of x^2 for x in a.
inline Interval square(Interval a) {
  double l = std::min(std::abs(a.lo), std::abs(a.hi));
  double h = std::max(std::abs(a.lo), std::abs(a.hi));
  if (a.lo <= 0.0 && a.hi >= 0.0) l = 0.0;
  return {rounding::mul_down(l, l), rounding::mul_up(h, h)};
}

// Smallest |x| over the enclosure (a lower bound on min |x| over the true set).
inline double min_abs(Interval a) {
  if (a.lo <= 0.0 && a.hi >= 0.0) return 0.0;
  return std::min(std::abs(a.lo), std::abs(a.hi));
}

// floor() of a double known to bound the true value from below/above.
inline std::int64_t floor_int(double x) {
  return static_cast<std::int64_t>(std::floor(x));
}

}  // namespace adcbound

#endif
