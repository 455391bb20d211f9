// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Runs without any test framework so the output stays a plain
// checklist.
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "tvoc/analytic.hpp"
#include "tvoc/oracle.hpp"
#include "tvoc/pareto.hpp"

using namespace tvoc;

namespace {

int g_failures = 0;

void report(int idx, const std::string& name, bool ok,
            const std::string& detail) {
  std::printf("[%s] criterion %d: %s (%s)\n", ok ? "PASS" : "FAIL", idx,
              name.c_str(), detail.c_str());
  if (!ok) ++g_failures;
}

bool coeffs_match(const Poly& got, const Poly& want, double tol = 1e-12) {
  const std::size_t n = std::max(got.size(), want.size());
  for (std::size_t i = 0; i < n; ++i) {
    const double a = i < got.size() ? got[i] : 0.0;
    const double b = i < want.size() ? want[i] : 0.0;
    if (std::abs(a - b) > tol) return false;
  }
  return true;
}

std::vector<double> log_spaced_alphas(int count) {
  std::vector<double> a;
  for (int i = 0; i < count; ++i)
    a.push_back(std::pow(10.0, -6.0 + 12.0 * i / double(count - 1)));
  return a;
}

void criterion1() {
  const auto s = solve_min_energy({0, 0, 1, 0});
  bool ok = s.u.segment_count() == 1 && s.x1.segment_count() == 1 &&
            s.x2.segment_count() == 1;
  if (ok) {
    ok = coeffs_match(s.u.segments()[0], {-4.0, 6.0}) &&
         coeffs_match(s.x1.segments()[0], {0.0, 1.0, -2.0, 1.0}) &&
         coeffs_match(s.x2.segments()[0], {1.0, -4.0, 3.0});
  }
  const double tv = total_variation(s.u);
  ok = ok && std::abs(tv - 6.0) <= 1e-12 && std::abs(s.phi2 - 6.0) <= 1e-12;
  char buf[128];
  std::snprintf(buf, sizeof buf, "coefficients exact to 1e-12, TV(u)=%g", tv);
  report(1, "min-energy closed form", ok, buf);
}

void criterion2() {
  bool ok = true;
  double prev = 0.0, worst_f = 0.0, worst_sym = 0.0, last_t1 = 0.0;
  for (double a : log_spaced_alphas(50)) {
    const auto s = solve_tv_particular(Weight(a));
    const double b = 3.0 * (2.0 + 1.0 / a);
    const double f = 4.0 * s.t1 * s.t1 * s.t1 - b * s.t1 * s.t1 + 1.0;
    worst_f = std::max(worst_f, std::abs(f));
    worst_sym = std::max(worst_sym, std::abs(s.t1 + s.t2 - 1.0));
    if (!(s.t1 > prev)) ok = false;
    prev = s.t1;
    last_t1 = s.t1;
  }
  ok = ok && worst_f <= 1e-12 && worst_sym <= 1e-10 &&
       std::abs(last_t1 - 0.5) <= 1e-3;
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "max|f1(t1)|=%.2e, max|t1+t2-1|=%.2e, t1(1e6)=%.6f, monotone",
                worst_f, worst_sym, last_t1);
  report(2, "cubic root + junction symmetry", ok, buf);
}

void criterion3() {
  bool ok = true;
  double worst = 0.0;
  for (double a : log_spaced_alphas(50)) {
    const auto rep = check_optimality(solve_tv_particular(Weight(a)), 1e-9);
    worst = std::max(worst, rep.worst_residual());
    if (!rep.pass()) ok = false;
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "50 alphas at tol 1e-9, worst residual %.2e",
                worst);
  report(3, "maximum-principle suite", ok, buf);
}

void criterion4() {
  bool ok = true;
  double worst_obj = 0.0, worst_u = 0.0, worst_eta = 0.0;
  const int N = 2000;
  for (double a : {0.0, 0.05, 0.4, 1.0, 10.0}) {
    const StructuralSolution ref = a == 0.0 ? solve_min_energy({0, 0, 1, 0})
                                            : solve_tv_particular(Weight(a));
    const auto dp = discretize({0, 0, 1, 0}, Weight(a), N);
    const auto sol = solve(dp);
    const double ref_obj = ref.phi1 + a * ref.phi2;
    worst_obj = std::max(worst_obj, std::abs(sol.objective - ref_obj) /
                                        std::max(1.0, std::abs(ref_obj)));
    for (int k = 0; k < N; ++k)
      worst_u = std::max(worst_u, std::abs(sol.control(k) -
                                           ref.u.evaluate((k + 0.5) / N)));
    for (int k = 0; k <= N; ++k)
      worst_eta = std::max(worst_eta, std::abs(sol.eta[std::size_t(k)] -
                                               ref.eta.evaluate(double(k) / N)));
  }
  ok = worst_obj <= 1e-3 && worst_u <= 5e-3 && worst_eta <= 5e-3;
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "N=2000: obj gap %.2e (<=1e-3), u gap %.2e (<=5e-3), "
                "eta gap %.2e (<=5e-3)",
                worst_obj, worst_u, worst_eta);
  report(4, "analytic vs oracle equivalence", ok, buf);
}

void criterion5() {
  const auto front = sweep({0, 0, 1, 0}, default_alpha_grid(200));
  bool all_solved = true;
  for (const auto& p : front.points)
    if (p.failed) all_solved = false;
  const auto& first = front.points.front();
  const auto& last = front.points.back();
  const bool endpoints =
      std::abs(first.phi1 - 2.0) <= 1e-3 && std::abs(first.phi2 - 6.0) <= 1e-3 &&
      std::abs(last.phi1 - 2.5) <= 1e-3 && std::abs(last.phi2 - 4.0) <= 1e-3;
  const bool shape = front_is_monotone(front) && front_nondominated(front) &&
                     front_on_convex_hull(front, 1e-6);
  const bool ok = all_solved && endpoints && shape;
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "%zu points, ends (%.4f,%.4f)/(%.4f,%.4f), monotone=%d, "
                "nondominated=%d, hull=%d",
                front.points.size(), first.phi1, first.phi2, last.phi1,
                last.phi2, int(front_is_monotone(front)),
                int(front_nondominated(front)),
                int(front_on_convex_hull(front, 1e-6)));
  report(5, "Pareto endpoints and shape", ok, buf);
}

void criterion6() {
  const auto lim = asymptotic_solution();
  bool exact = std::abs(lim.x1.evaluate(0.0)) == 0.0 &&
               std::abs(lim.x1.evaluate(1.0)) == 0.0 &&
               std::abs(lim.x2.evaluate(0.0) - 1.0) == 0.0 &&
               std::abs(lim.x2.evaluate(1.0)) == 0.0;
  // continuity of the states at the switch
  exact = exact &&
          std::abs(lim.x1.evaluate_left(0.5) - lim.x1.evaluate(0.5)) <= 1e-15 &&
          std::abs(lim.x2.evaluate_left(0.5) - lim.x2.evaluate(0.5)) <= 1e-15;
  const auto s = solve_tv_particular(Weight(1e6));
  const double gap = std::max(
      {std::abs(s.t1 - lim.t1), std::abs(s.t2 - lim.t2),
       std::abs(s.u1 - lim.u1), std::abs(s.u3 - lim.u3),
       std::abs(s.phi1 - lim.phi1), std::abs(s.phi2 - lim.phi2)});
  const bool ok = exact && gap <= 1e-3;
  char buf[128];
  std::snprintf(buf, sizeof buf,
                "boundary/continuity exact, alpha=1e6 parameter gap %.2e",
                gap);
  report(6, "asymptotic solution", ok, buf);
}

void criterion7() {
  const int N = 500;
  const auto di = discretize({0, 0, 1, 0}, Weight(0.4), N);
  LqptvData d;
  d.n = 2;
  d.m = 1;
  Eigen::MatrixXd A(2, 2), B(2, 1), Q(2, 2), R(1, 1);
  A << 0, 1, 0, 0;
  B << 0, 1;
  Q.setZero();
  R << 1;
  d.A = {A};
  d.B = {B};
  d.Q = {Q};
  d.R = {R};
  d.x0 = Eigen::Vector2d(0, 1);
  d.xf = Eigen::Vector2d(0, 0);
  const auto dg = discretize_lqptv(d, Weight(0.4), N);
  const auto si = solve(di);
  const auto sg = solve_lqptv(dg);
  bool ok = si.controls.size() == sg.controls.size() &&
            si.objective == sg.objective;
  if (ok)
    for (std::size_t k = 0; k < si.controls.size(); ++k)
      if (si.controls[k] != sg.controls[k]) ok = false;
  report(7, "LQPTV specialization", ok,
         ok ? "controls and objective bit-for-bit identical"
            : "solutions differ");
}

void criterion8() {
  const double a = 0.4;
  const auto ref = solve_tv_particular(Weight(a));
  const double ref_obj = ref.phi1 + a * ref.phi2;
  std::vector<double> lx, ly;
  bool monotone = true;
  double prev = std::numeric_limits<double>::infinity();
  for (int N : {125, 250, 500, 1000, 2000}) {
    const auto sol = solve(discretize({0, 0, 1, 0}, Weight(a), N));
    const double err = std::abs(sol.objective - ref_obj);
    if (err > prev + 1e-9) monotone = false;
    prev = err;
    lx.push_back(std::log(double(N)));
    ly.push_back(std::log(err));
  }
  // least-squares slope of log(err) vs log(N)
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = double(lx.size());
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  const double slope = -(n * sxy - sx * sy) / (n * sxx - sx * sx);
  // Exact hold propagation makes the objective error decay at second order;
  // the gate is decay of at least first order.
  const bool ok = monotone && slope >= 0.8;
  char buf[128];
  std::snprintf(buf, sizeof buf,
                "empirical order %.2f (>=0.8 required), monotone=%d", slope,
                int(monotone));
  report(8, "grid convergence", ok, buf);
}

}  // namespace

int main() {
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  if (g_failures) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all 8 criteria passed\n");
  return 0;
}
