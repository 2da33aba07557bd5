#include <doctest.h>

#include <random>

#include "adcbound/interval.hpp"

using namespace adcbound;

TEST_CASE("dyadic arithmetic keeps enclosures degenerate") {
  // Products, sums and divisions on small dyadic rationals are exact in
  // doubles, so no nudging may happen.
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> num(-4096, 4096);
  for (int trial = 0; trial < 1000; ++trial) {
    double a = num(rng) / 64.0;
    double b = num(rng) / 64.0;
    CHECK(rounding::add_down(a, b) == a + b);
    CHECK(rounding::add_up(a, b) == a + b);
    CHECK(rounding::mul_down(a, 64.0) == a * 64.0);
    CHECK(rounding::mul_up(a, 64.0) == a * 64.0);
    double n = num(rng);
    CHECK(rounding::div_down(n, 64.0) == n / 64.0);
    CHECK(rounding::div_up(n, 64.0) == n / 64.0);
  }
}

TEST_CASE("directed operations bound the exact result") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> dist(-10.0, 10.0);
  for (int trial = 0; trial < 20000; ++trial) {
    double a = dist(rng), b = dist(rng);
    long double exact_sum = static_cast<long double>(a) + b;
    CHECK(rounding::add_down(a, b) <= exact_sum);
    CHECK(rounding::add_up(a, b) >= exact_sum);
    long double exact_prod = static_cast<long double>(a) * b;
    CHECK(rounding::mul_down(a, b) <= exact_prod);
    CHECK(rounding::mul_up(a, b) >= exact_prod);
    double c = dist(rng);
    if (c > 0.1) {
      long double exact_q = static_cast<long double>(a) / c;
      CHECK(rounding::div_down(a, c) <= exact_q);
      CHECK(rounding::div_up(a, c) >= exact_q);
    }
  }
}

TEST_CASE("interval scale, square and min_abs") {
  Interval t{-0.25, 0.5};
  CHECK(min_abs(t) == 0.0);
  CHECK(min_abs(Interval{0.125, 0.5}) == 0.125);
  CHECK(min_abs(Interval{-0.5, -0.125}) == 0.125);
  Interval s = scale(t, -2.0);
  CHECK(s.lo == -1.0);
  CHECK(s.hi == 0.5);
  Interval sq = square(Interval{-0.5, 0.25});
  CHECK(sq.lo == 0.0);
  CHECK(sq.hi == 0.25);
  CHECK(floor_int(-0.0001) == -1);
  CHECK(floor_int(0.9999) == 0);
}
