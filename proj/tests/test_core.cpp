#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "tvoc/core.hpp"

using namespace tvoc;

namespace {

// Quadrature oracle for the energy functional, independent of the
// closed-form integration path: composite Simpson on each segment.
double energy_quadrature(const PiecewisePolynomial& u, int panels = 4000) {
  double total = 0.0;
  const auto& bp = u.breakpoints();
  for (std::size_t k = 0; k + 1 < bp.size(); ++k) {
    const double a = bp[k], b = bp[k + 1];
    const double h = (b - a) / panels;
    double s = 0.0;
    for (int i = 0; i < panels; ++i) {
      const double x0 = a + i * h, x2 = x0 + h, x1 = 0.5 * (x0 + x2);
      auto f = [&](double t) {
        // stay inside the segment: right-continuity would grab the next one
        const double tt = std::min(t, b - 1e-15 * (k + 2 < bp.size() ? 1 : 0));
        const double v = u.evaluate(std::min(tt, 1.0));
        return v * v;
      };
      s += h / 6.0 * (f(x0) + 4.0 * f(x1) + f(x2));
    }
    total += s;
  }
  return 0.5 * total;
}

// Partition-sum approximation of the total variation (the defining
// supremum). The partition is a uniform grid refined with the breakpoints
// and their left neighborhoods, so jumps are captured.
double tv_partition_sum(const PiecewisePolynomial& u, int n = 10000) {
  std::vector<double> pts;
  pts.reserve(std::size_t(n) + 4 * u.breakpoints().size());
  for (int i = 0; i <= n; ++i) pts.push_back(double(i) / n);
  for (double b : u.breakpoints()) {
    if (b > 0.0 && b < 1.0) {
      pts.push_back(b - 1e-12);
      pts.push_back(b);
    }
  }
  std::sort(pts.begin(), pts.end());
  double s = 0.0;
  double prev = u.evaluate(pts[0]);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double v = u.evaluate(pts[i]);
    s += std::abs(v - prev);
    prev = v;
  }
  return s;
}

PiecewisePolynomial random_pw(std::mt19937& rng) {
  std::uniform_int_distribution<int> nseg(1, 5);
  std::uniform_real_distribution<double> coef(-3.0, 3.0);
  const int K = nseg(rng);
  std::vector<double> bp{0.0};
  std::uniform_real_distribution<double> gap(0.5, 1.5);
  for (int k = 1; k < K; ++k) bp.push_back(gap(rng));
  for (int k = 1; k < K; ++k) bp[std::size_t(k)] += bp[std::size_t(k) - 1];
  for (int k = 1; k < K; ++k) bp[std::size_t(k)] /= (bp.back() + gap(rng));
  std::sort(bp.begin(), bp.end());
  bp.push_back(1.0);
  std::vector<Poly> segs;
  for (int k = 0; k < K; ++k)
    segs.push_back({coef(rng), coef(rng), coef(rng), coef(rng)});
  return PiecewisePolynomial(bp, segs);
}

}  // namespace

TEST_CASE("evaluate basics") {
  const auto c5 = PiecewisePolynomial::constant(5.0);
  CHECK(c5.evaluate(0.3) == 5.0);

  const auto u = PiecewisePolynomial::single({-4.0, 6.0});  // 6t - 4
  CHECK(u.evaluate(0.0) == -4.0);
  CHECK(u.evaluate(1.0) == 2.0);

  const auto jumpy = PiecewisePolynomial({0.0, 0.5, 1.0}, {{-3.0}, {1.0}});
  CHECK(jumpy.evaluate(0.5) == 1.0);  // right-continuous at the junction
  CHECK(jumpy.evaluate_left(0.5) == -3.0);

  CHECK_THROWS_AS(u.evaluate(-0.1), std::domain_error);
  CHECK_THROWS_AS(u.evaluate(1.1), std::domain_error);
}

TEST_CASE("constructor rejects malformed input") {
  CHECK_THROWS(PiecewisePolynomial({0.0, 0.5}, {{1.0}}));
  CHECK_THROWS(PiecewisePolynomial({0.0, 0.5, 0.5, 1.0},
                                   {{1.0}, {1.0}, {1.0}}));
  CHECK_THROWS(PiecewisePolynomial({0.0, 1.0}, {{1.0}, {2.0}}));
}

TEST_CASE("total variation of named controls") {
  CHECK(total_variation(PiecewisePolynomial::single({-4.0, 6.0})) == 6.0);
  CHECK(total_variation(PiecewisePolynomial::constant(3.0)) == 0.0);
  CHECK(total_variation(PiecewisePolynomial({0.0, 0.5, 1.0},
                                            {{-3.0}, {1.0}})) == 4.0);
}

TEST_CASE("total variation of a sine rendered as piecewise cubics") {
  // sin over [0, 3*pi/2] mapped onto [0,1]; TV is invariant under the time
  // scaling and equals 3.
  const double T = 1.5 * M_PI;
  const int K = 200;
  std::vector<double> bp;
  std::vector<Poly> segs;
  for (int k = 0; k <= K; ++k) bp.push_back(double(k) / K);
  for (int k = 0; k < K; ++k) {
    const double a = bp[std::size_t(k)], b = bp[std::size_t(k) + 1];
    const double h = b - a;
    // cubic Hermite in the local variable
    const double f0 = std::sin(T * a), f1 = std::sin(T * b);
    const double d0 = T * std::cos(T * a), d1 = T * std::cos(T * b);
    const double c2 = (3.0 * (f1 - f0) / h - 2.0 * d0 - d1) / h;
    const double c3 = (2.0 * (f0 - f1) / h + d0 + d1) / (h * h);
    segs.push_back({f0, d0, c2, c3});
  }
  const PiecewisePolynomial u(bp, segs);
  CHECK_THAT(total_variation(u), Catch::Matchers::WithinAbs(3.0, 1e-6));
}

TEST_CASE("energy of named controls") {
  CHECK(energy(PiecewisePolynomial::constant(0.0)) == 0.0);
  const auto lin = PiecewisePolynomial::single({-4.0, 6.0});
  CHECK_THAT(energy(lin), Catch::Matchers::WithinAbs(2.0, 1e-14));
  CHECK_THAT(energy_quadrature(lin), Catch::Matchers::WithinAbs(2.0, 1e-10));
  const auto jumpy = PiecewisePolynomial({0.0, 0.5, 1.0}, {{-3.0}, {1.0}});
  CHECK_THAT(energy(jumpy), Catch::Matchers::WithinAbs(2.5, 1e-14));
  CHECK_THAT(energy_quadrature(jumpy), Catch::Matchers::WithinAbs(2.5, 1e-10));
}

TEST_CASE("property: exact functionals vs independent approximations") {
  std::mt19937 rng(1234);
  for (int trial = 0; trial < 40; ++trial) {
    const auto u = random_pw(rng);
    const double tv = total_variation(u);
    CHECK(tv >= 0.0);
    // partition sums refine toward the exact value from below
    const double s_coarse = tv_partition_sum(u, 1000);
    const double s_fine = tv_partition_sum(u, 10000);
    CHECK(s_coarse <= s_fine + 1e-9);
    CHECK(s_fine <= tv + 1e-9);
    CHECK_THAT(s_fine, Catch::Matchers::WithinAbs(tv, 1e-5));
    CHECK_THAT(energy_quadrature(u),
               Catch::Matchers::WithinRel(energy(u) + 1e-30, 1e-9));
  }
}

TEST_CASE("property: redundant breakpoints change nothing") {
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> tau(0.05, 0.95);
  for (int trial = 0; trial < 40; ++trial) {
    const auto u = random_pw(rng);
    auto r = u;
    for (int i = 0; i < 3; ++i) r = r.with_breakpoint(tau(rng));
    CHECK_THAT(energy(r), Catch::Matchers::WithinAbs(energy(u), 1e-12));
    CHECK_THAT(total_variation(r),
               Catch::Matchers::WithinAbs(total_variation(u), 1e-12));
    for (int i = 0; i <= 50; ++i) {
      const double t = double(i) / 50;
      CHECK_THAT(r.evaluate(t), Catch::Matchers::WithinAbs(u.evaluate(t), 1e-12));
    }
  }
  // on a continuous function the inserted junctions stay continuous
  auto c = PiecewisePolynomial::single({1.0, -2.0, 0.5, 3.0});
  for (int i = 0; i < 4; ++i) c = c.with_breakpoint(tau(rng));
  CHECK(c.is_continuous(1e-9));
}

TEST_CASE("total variation zero iff constant") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto u = random_pw(rng);
    const double tv = total_variation(u);
    double lo = u.evaluate(0.0), hi = lo;
    for (int i = 1; i <= 400; ++i) {
      const double v = u.evaluate(double(i) / 400);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (tv == 0.0)
      CHECK(hi - lo <= 1e-12);
    else
      CHECK(hi - lo > 0.0);
  }
}

TEST_CASE("json round trip") {
  std::mt19937 rng(42);
  for (int trial = 0; trial < 10; ++trial) {
    const auto u = random_pw(rng);
    const auto v = PiecewisePolynomial::from_json(u.to_json());
    CHECK(v.breakpoints() == u.breakpoints());
    CHECK(v.segments() == u.segments());
  }
}

TEST_CASE("weight validation") {
  CHECK_THROWS_AS(Weight(-0.5), std::domain_error);
  CHECK(Weight(0.0).is_zero());
  CHECK(Weight::infinity().is_infinite());
}
