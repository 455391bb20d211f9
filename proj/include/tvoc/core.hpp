#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace tvoc {

/// Endpoint values for a double-integrator instance on the horizon [0,1].
struct BoundaryConditions {
  double s0 = 0.0;  ///< initial position
  double sf = 0.0;  ///< final position
  double v0 = 0.0;  ///< initial velocity
  double vf = 0.0;  ///< final velocity

  bool valid() const {
    return std::isfinite(s0) && std::isfinite(sf) && std::isfinite(v0) &&
           std::isfinite(vf);
  }
};

/// Nonnegative trade-off weight. Infinity is a distinguished sentinel used
/// by the asymptotic solver.
struct Weight {
  double alpha = 0.0;

  Weight() = default;
  explicit Weight(double a) : alpha(a) {
    if (std::isnan(a) || a < 0.0)
      throw std::domain_error("Weight: alpha must be >= 0");
  }

  bool is_zero() const { return alpha == 0.0; }
  bool is_infinite() const { return std::isinf(alpha); }

  static Weight infinity() {
    return Weight(std::numeric_limits<double>::infinity());
  }
};

/// A polynomial in the local variable (t - tau_k), ascending-power
/// coefficients.
using Poly = std::vector<double>;

inline double poly_eval(const Poly& c, double s) {
  double r = 0.0;
  for (std::size_t i = c.size(); i-- > 0;) r = r * s + c[i];
  return r;
}

inline Poly poly_derivative(const Poly& c) {
  if (c.size() <= 1) return {0.0};
  Poly d(c.size() - 1);
  for (std::size_t i = 1; i < c.size(); ++i) d[i - 1] = c[i] * double(i);
  return d;
}

inline Poly poly_antiderivative(const Poly& c) {
  Poly a(c.size() + 1, 0.0);
  for (std::size_t i = 0; i < c.size(); ++i) a[i + 1] = c[i] / double(i + 1);
  return a;
}

inline Poly poly_mul(const Poly& a, const Poly& b) {
  Poly r(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
  return r;
}

/// Re-expands p around s = shift: returns q with q(s) = p(s + shift).
/// Exact synthetic division, no quadrature.
inline Poly poly_shift(const Poly& p, double shift) {
  Poly c = p;
  Poly out(p.size(), 0.0);
  for (std::size_t j = 0; j < p.size(); ++j) {
    for (std::size_t i = c.size() - 1; i > 0; --i) c[i - 1] += c[i] * shift;
    out[j] = c[0];
    c.erase(c.begin());
    if (c.empty()) break;
  }
  return out;
}

/// Piecewise polynomial on [0,1] with breakpoints 0 = tau_0 < ... < tau_K = 1.
/// Each segment k holds coefficients in the local variable (t - tau_k).
/// Evaluation is right-continuous at interior breakpoints.
class PiecewisePolynomial {
 public:
  static constexpr double kContinuityTol = 1e-12;

  PiecewisePolynomial() : breakpoints_{0.0, 1.0}, segments_{{0.0}} {}

  PiecewisePolynomial(std::vector<double> breakpoints,
                      std::vector<Poly> segments)
      : breakpoints_(std::move(breakpoints)), segments_(std::move(segments)) {
    validate();
  }

  /// Single segment spanning [0,1].
  static PiecewisePolynomial single(Poly coeffs) {
    return PiecewisePolynomial({0.0, 1.0}, {std::move(coeffs)});
  }

  static PiecewisePolynomial constant(double value) {
    return single({value});
  }

  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<Poly>& segments() const { return segments_; }
  std::size_t segment_count() const { return segments_.size(); }

  /// Right-continuous evaluation; t must lie in [0,1].
  double operator()(double t) const { return evaluate(t); }

  double evaluate(double t) const {
    if (!(t >= 0.0 && t <= 1.0))
      throw std::domain_error("PiecewisePolynomial::evaluate: t outside [0,1]");
    const std::size_t k = segment_index(t);
    return poly_eval(segments_[k], t - breakpoints_[k]);
  }

  /// Value of the segment to the left of t (differs from evaluate only at
  /// interior breakpoints of a discontinuous function).
  double evaluate_left(double t) const {
    if (!(t > 0.0 && t <= 1.0))
      throw std::domain_error("PiecewisePolynomial::evaluate_left: t outside (0,1]");
    std::size_t k = segment_index(t);
    if (k > 0 && t == breakpoints_[k]) --k;
    return poly_eval(segments_[k], t - breakpoints_[k]);
  }

  PiecewisePolynomial derivative() const {
    std::vector<Poly> segs;
    segs.reserve(segments_.size());
    for (const auto& s : segments_) segs.push_back(poly_derivative(s));
    return PiecewisePolynomial(breakpoints_, std::move(segs));
  }

  /// Definite integral over [0,1], exact.
  double integral() const {
    double total = 0.0;
    for (std::size_t k = 0; k < segments_.size(); ++k) {
      const Poly a = poly_antiderivative(segments_[k]);
      total += poly_eval(a, breakpoints_[k + 1] - breakpoints_[k]);
    }
    return total;
  }

  /// True when every interior junction is value-continuous within tol
  /// (relative when the magnitude exceeds 1, else absolute).
  bool is_continuous(double tol = kContinuityTol) const {
    for (std::size_t k = 1; k < segments_.size(); ++k) {
      const double tau = breakpoints_[k];
      const double left =
          poly_eval(segments_[k - 1], tau - breakpoints_[k - 1]);
      const double right = segments_[k].empty() ? 0.0 : segments_[k][0];
      const double scale = std::max({1.0, std::abs(left), std::abs(right)});
      if (std::abs(left - right) > tol * scale) return false;
    }
    return true;
  }

  /// Jump height (right minus left value) at interior breakpoint k.
  double jump(std::size_t k) const {
    const double tau = breakpoints_[k];
    return poly_eval(segments_[k], 0.0) -
           poly_eval(segments_[k - 1], tau - breakpoints_[k - 1]);
  }

  /// Builds from segments whose coefficients are written in the global
  /// variable t rather than the local (t - tau_k).
  static PiecewisePolynomial from_global(std::vector<double> breakpoints,
                                         const std::vector<Poly>& global) {
    std::vector<Poly> segs;
    segs.reserve(global.size());
    for (std::size_t k = 0; k < global.size(); ++k)
      segs.push_back(poly_shift(global[k], breakpoints[k]));
    return PiecewisePolynomial(std::move(breakpoints), std::move(segs));
  }

  /// Antiderivative with prescribed value at t=0, continuous across
  /// junctions. Exact coefficient arithmetic.
  PiecewisePolynomial antiderivative(double value_at_zero) const {
    std::vector<Poly> segs;
    segs.reserve(segments_.size());
    double acc = value_at_zero;
    for (std::size_t k = 0; k < segments_.size(); ++k) {
      Poly a = poly_antiderivative(segments_[k]);
      a[0] = acc;
      acc = poly_eval(a, breakpoints_[k + 1] - breakpoints_[k]);
      segs.push_back(std::move(a));
    }
    return PiecewisePolynomial(breakpoints_, std::move(segs));
  }

  /// Inserts a breakpoint without changing the represented function.
  PiecewisePolynomial with_breakpoint(double tau) const {
    if (!(tau > 0.0 && tau < 1.0))
      throw std::domain_error("with_breakpoint: tau outside (0,1)");
    auto it = std::lower_bound(breakpoints_.begin(), breakpoints_.end(), tau);
    if (it != breakpoints_.end() && *it == tau) return *this;
    const std::size_t k = std::size_t(it - breakpoints_.begin()) - 1;

    std::vector<double> bp = breakpoints_;
    bp.insert(bp.begin() + long(k) + 1, tau);
    std::vector<Poly> segs = segments_;
    segs.insert(segs.begin() + long(k) + 1,
                poly_shift(segments_[k], tau - breakpoints_[k]));
    return PiecewisePolynomial(std::move(bp), std::move(segs));
  }

  nlohmann::json to_json() const {
    return {{"breakpoints", breakpoints_}, {"segments", segments_}};
  }

  static PiecewisePolynomial from_json(const nlohmann::json& j) {
    return PiecewisePolynomial(j.at("breakpoints").get<std::vector<double>>(),
                               j.at("segments").get<std::vector<Poly>>());
  }

 private:
  std::vector<double> breakpoints_;
  std::vector<Poly> segments_;

  void validate() const {
    if (breakpoints_.size() < 2)
      throw std::invalid_argument("PiecewisePolynomial: need >= 2 breakpoints");
    if (breakpoints_.front() != 0.0 || breakpoints_.back() != 1.0)
      throw std::invalid_argument(
          "PiecewisePolynomial: breakpoints must span [0,1]");
    for (std::size_t k = 1; k < breakpoints_.size(); ++k)
      if (!(breakpoints_[k] > breakpoints_[k - 1]))
        throw std::invalid_argument(
            "PiecewisePolynomial: breakpoints must be strictly increasing");
    if (segments_.size() + 1 != breakpoints_.size())
      throw std::invalid_argument(
          "PiecewisePolynomial: segment count mismatch");
    for (const auto& s : segments_)
      if (s.empty())
        throw std::invalid_argument("PiecewisePolynomial: empty segment");
  }

  std::size_t segment_index(double t) const {
    // Right-continuity: t on a breakpoint belongs to the segment starting there.
    auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
    std::size_t k = std::size_t(it - breakpoints_.begin());
    if (k == 0) return 0;
    --k;
    if (k >= segments_.size()) k = segments_.size() - 1;  // t == 1
    return k;
  }

};

std::vector<double> poly_roots_in(const Poly& p, double lo, double hi);

/// Energy functional: (1/2) * integral of u^2, exact polynomial integration.
inline double energy(const PiecewisePolynomial& u) {
  double total = 0.0;
  const auto& bp = u.breakpoints();
  for (std::size_t k = 0; k < u.segment_count(); ++k) {
    const Poly sq = poly_mul(u.segments()[k], u.segments()[k]);
    const Poly a = poly_antiderivative(sq);
    total += poly_eval(a, bp[k + 1] - bp[k]);
  }
  return 0.5 * total;
}

/// Total variation on [0,1]. For each segment, integral of |u'| split exactly
/// at interior roots of u'; jump magnitudes at discontinuous junctions are
/// added per the partition definition.
inline double total_variation(const PiecewisePolynomial& u) {
  double tv = 0.0;
  const auto& bp = u.breakpoints();
  for (std::size_t k = 0; k < u.segment_count(); ++k) {
    const double len = bp[k + 1] - bp[k];
    const Poly d = poly_derivative(u.segments()[k]);
    const Poly anti = poly_antiderivative(d);

    // Split [0,len] at real roots of d (degree <= 2 after differentiation of
    // cubics; handle general degree by subdividing at all sign changes found
    // via the quadratic/linear closed forms, else dense sampling fallback).
    std::vector<double> cuts{0.0, len};
    for (double r : poly_roots_in(d, 0.0, len)) cuts.push_back(r);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    for (std::size_t i = 1; i < cuts.size(); ++i)
      tv += std::abs(poly_eval(anti, cuts[i]) - poly_eval(anti, cuts[i - 1]));

    if (k > 0) tv += std::abs(u.jump(k));
  }
  return tv;
}

/// Real roots of a polynomial inside (lo, hi). Closed forms for degree <= 2;
/// bisection on sign-change subintervals for higher degree.
inline std::vector<double> poly_roots_in(const Poly& p, double lo, double hi) {
  // Trim trailing zeros.
  Poly c = p;
  while (c.size() > 1 && c.back() == 0.0) c.pop_back();
  std::vector<double> roots;
  if (c.size() <= 1) return roots;  // constant: no isolated roots
  if (c.size() == 2) {
    const double r = -c[0] / c[1];
    if (r > lo && r < hi) roots.push_back(r);
    return roots;
  }
  if (c.size() == 3) {
    const double a = c[2], b = c[1], k = c[0];
    const double disc = b * b - 4.0 * a * k;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      // numerically stable quadratic roots
      const double q = -0.5 * (b + (b >= 0 ? sq : -sq));
      const double r1 = q / a;
      const double r2 = (q != 0.0) ? k / q : r1;
      for (double r : {r1, r2})
        if (r > lo && r < hi) roots.push_back(r);
    }
    std::sort(roots.begin(), roots.end());
    roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
    return roots;
  }
  // Higher degree: sample and bisect sign changes.
  const int n = 256;
  double prev = poly_eval(c, lo);
  for (int i = 1; i <= n; ++i) {
    const double t = lo + (hi - lo) * double(i) / n;
    const double val = poly_eval(c, t);
    if (prev == 0.0) {
      // grid point root handled as interval endpoint
    } else if (val * prev < 0.0) {
      double a = lo + (hi - lo) * double(i - 1) / n, b = t;
      for (int it = 0; it < 80; ++it) {
        const double m = 0.5 * (a + b);
        if (poly_eval(c, m) * poly_eval(c, a) <= 0.0)
          b = m;
        else
          a = m;
      }
      roots.push_back(0.5 * (a + b));
    }
    prev = val;
  }
  return roots;
}

}  // namespace tvoc
