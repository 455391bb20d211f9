#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <future>
#include <optional>
#include <ostream>
#include <semaphore>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "tvoc/analytic.hpp"
#include "tvoc/core.hpp"

namespace tvoc {

/// Maps the unit-interval scalarization weight to the unbounded one.
inline double alpha_from_alpha1(double alpha1) {
  if (!(alpha1 > 0.0 && alpha1 <= 1.0))
    throw std::domain_error("alpha_from_alpha1: alpha1 must be in (0,1]");
  return (1.0 - alpha1) / alpha1;
}

/// Default sweep grid: log-spaced interior points spanning the plotted
/// range, plus the two exact endpoints.
inline std::vector<Weight> default_alpha_grid(int interior = 200) {
  std::vector<Weight> g;
  g.reserve(std::size_t(interior) + 2);
  g.emplace_back(0.0);
  for (int i = 0; i < interior; ++i) {
    const double e = -6.0 + 12.0 * double(i) / (interior - 1);
    g.emplace_back(std::pow(10.0, e));
  }
  g.push_back(Weight::infinity());
  return g;
}

struct ParetoPoint {
  Weight alpha;
  double phi1 = 0.0;
  double phi2 = 0.0;
  int solution_ref = -1;  // index into ParetoFront::solutions, -1 if failed
  bool failed = false;
  std::string error;
};

struct ParetoFront {
  std::vector<ParetoPoint> points;  // alpha ascending
  std::vector<StructuralSolution> solutions;
  BoundaryConditions instance;

  const StructuralSolution& solution(const ParetoPoint& p) const {
    return solutions[std::size_t(p.solution_ref)];
  }

  std::vector<const ParetoPoint*> solved_points() const {
    std::vector<const ParetoPoint*> out;
    for (const auto& p : points)
      if (!p.failed) out.push_back(&p);
    return out;
  }
};

namespace detail_pareto {

inline bool is_particular_instance(const BoundaryConditions& bc) {
  return bc.s0 == 0.0 && bc.sf == 0.0 && bc.v0 == 1.0 && bc.vf == 0.0;
}

inline int sweep_thread_cap() {
  if (const char* env = std::getenv("TVOC_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? int(hw) : 4;
}

inline StructuralSolution solve_one(const BoundaryConditions& bc,
                                    Weight alpha) {
  if (alpha.is_zero()) return solve_min_energy(bc);
  if (alpha.is_infinite()) {
    if (!is_particular_instance(bc))
      throw std::domain_error(
          "asymptotic endpoint is only available on the instance (0,0,1,0)");
    return asymptotic_solution();
  }
  if (is_particular_instance(bc)) return solve_tv_particular(alpha);
  return solve_tv_general(bc, alpha);
}

}  // namespace detail_pareto

/// Weighted-sum sweep. Per-alpha solves run concurrently (capped by
/// TVOC_THREADS); assembly is ordered by alpha, so the result does not
/// depend on completion order. Failed solves are recorded, not dropped.
inline ParetoFront sweep(const BoundaryConditions& bc,
                         const std::vector<Weight>& alphas) {
  if (alphas.empty()) throw std::invalid_argument("sweep: empty alpha list");
  for (std::size_t i = 1; i < alphas.size(); ++i) {
    if (!(alphas[i].alpha > alphas[i - 1].alpha))
      throw std::invalid_argument(
          "sweep: alphas must be strictly ascending (duplicates rejected)");
  }

  struct Slot {
    std::optional<StructuralSolution> sol;
    std::string error;
  };
  std::vector<Slot> slots(alphas.size());

  const int cap = detail_pareto::sweep_thread_cap();
  std::counting_semaphore<256> gate(std::min(cap, 256));
  std::vector<std::future<void>> tasks;
  tasks.reserve(alphas.size());
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    tasks.push_back(std::async(std::launch::async, [&, i] {
      gate.acquire();
      try {
        slots[i].sol = detail_pareto::solve_one(bc, alphas[i]);
      } catch (const std::exception& e) {
        slots[i].error = e.what();
      }
      gate.release();
    }));
  }
  for (auto& t : tasks) t.get();

  ParetoFront front;
  front.instance = bc;
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    ParetoPoint p;
    p.alpha = alphas[i];
    if (slots[i].sol) {
      const auto& s = *slots[i].sol;
      const auto rep = check_optimality(s, 1e-8);
      if (rep.pass()) {
        p.phi1 = s.phi1;
        p.phi2 = s.phi2;
        p.solution_ref = int(front.solutions.size());
        front.solutions.push_back(s);
      } else {
        p.failed = true;
        p.error = "optimality check failed (worst residual " +
                  std::to_string(rep.worst_residual()) + ")";
      }
    } else {
      p.failed = true;
      p.error = slots[i].error;
    }
    front.points.push_back(std::move(p));
  }
  return front;
}

/// phi2 nonincreasing and phi1 nondecreasing along ascending alpha.
inline bool front_is_monotone(const ParetoFront& front, double slack = 1e-9) {
  const auto pts = front.solved_points();
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (pts[i]->phi1 < pts[i - 1]->phi1 - slack) return false;
    if (pts[i]->phi2 > pts[i - 1]->phi2 + slack) return false;
  }
  return true;
}

/// No solved point strictly dominates another: no pair where one point is
/// better in both objectives beyond the slack. Weak domination within the
/// slack is indistinguishable from the exact front's ties at the saturated
/// ends, so it does not count as a violation.
inline bool front_nondominated(const ParetoFront& front, double slack = 1e-9) {
  const auto pts = front.solved_points();
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (i == j) continue;
      if (pts[i]->phi1 < pts[j]->phi1 - slack &&
          pts[i]->phi2 < pts[j]->phi2 - slack)
        return false;
    }
  return true;
}

/// All solved points lie on the lower-left convex hull of the point set.
inline bool front_on_convex_hull(const ParetoFront& front, double tol = 1e-9) {
  auto pts = front.solved_points();
  if (pts.size() < 3) return true;
  // Ordered by phi1 ascending (monotone front), check convexity of phi2 as a
  // function of phi1: every interior point at or below the chord.
  for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
    const double x0 = pts[i - 1]->phi1, y0 = pts[i - 1]->phi2;
    const double x1 = pts[i]->phi1, y1 = pts[i]->phi2;
    const double x2 = pts[i + 1]->phi1, y2 = pts[i + 1]->phi2;
    const double cross = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0);
    // convex (lower-left) requires the middle point not above the chord
    if (cross < -tol * std::max({1.0, std::abs(x2 - x0), std::abs(y2 - y0)}))
      return false;
  }
  return true;
}

/// The data content of one movie frame: trajectories sampled on a uniform
/// grid, the normalized switching function, and the front with the current
/// point highlighted.
struct FrameData {
  Weight alpha;
  std::vector<double> t;
  std::vector<double> u, x1, x2, eta_over_alpha;
  bool eta_ratio_defined = true;  // false for the alpha=0 frame
  int front_index = -1;

  nlohmann::json to_json() const {
    return {{"alpha", alpha.is_infinite() ? nlohmann::json("inf")
                                          : nlohmann::json(alpha.alpha)},
            {"t", t},
            {"u", u},
            {"x1", x1},
            {"x2", x2},
            {"eta_over_alpha", eta_over_alpha},
            {"eta_ratio_defined", eta_ratio_defined},
            {"front_index", front_index}};
  }
};

inline std::vector<FrameData> frames(const ParetoFront& front,
                                     int grid = 400) {
  if (front.points.empty()) throw std::invalid_argument("frames: empty front");
  std::vector<FrameData> out;
  for (std::size_t i = 0; i < front.points.size(); ++i) {
    const auto& p = front.points[i];
    if (p.failed) continue;
    const auto& s = front.solution(p);
    FrameData f;
    f.alpha = p.alpha;
    f.front_index = int(i);
    f.eta_ratio_defined = !p.alpha.is_zero() && !p.alpha.is_infinite();
    for (int g = 0; g <= grid; ++g) {
      const double t = double(g) / grid;
      f.t.push_back(t);
      f.u.push_back(s.u.evaluate(t));
      f.x1.push_back(s.x1.evaluate(t));
      f.x2.push_back(s.x2.evaluate(t));
      f.eta_over_alpha.push_back(
          f.eta_ratio_defined ? s.eta.evaluate(t) / p.alpha.alpha : 0.0);
    }
    out.push_back(std::move(f));
  }
  return out;
}

inline void write_front_csv(std::ostream& os, const ParetoFront& front) {
  os << "alpha,phi1,phi2,t1,t2,u1,u3\n";
  os.precision(17);
  for (const auto& p : front.points) {
    if (p.failed) continue;
    const auto& s = front.solution(p);
    if (p.alpha.is_infinite())
      os << "inf";
    else
      os << p.alpha.alpha;
    os << "," << p.phi1 << "," << p.phi2 << "," << s.t1 << "," << s.t2 << ","
       << s.u1 << "," << s.u3 << "\n";
  }
}

inline nlohmann::json front_to_json(const ParetoFront& front) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : front.points) {
    nlohmann::json jp = {{"alpha", p.alpha.is_infinite()
                                       ? nlohmann::json("inf")
                                       : nlohmann::json(p.alpha.alpha)},
                         {"failed", p.failed}};
    if (p.failed) {
      jp["error"] = p.error;
    } else {
      jp["phi1"] = p.phi1;
      jp["phi2"] = p.phi2;
      jp["solution_ref"] = p.solution_ref;
    }
    pts.push_back(std::move(jp));
  }
  nlohmann::json sols = nlohmann::json::array();
  for (const auto& s : front.solutions) sols.push_back(s.to_json());
  return {{"instance",
           {{"s0", front.instance.s0},
            {"sf", front.instance.sf},
            {"v0", front.instance.v0},
            {"vf", front.instance.vf}}},
          {"points", pts},
          {"solutions", sols}};
}

namespace detail_pareto {

/// Minimal polyline panel for the SVG emitters.
struct SvgPanel {
  double x = 0, y = 0, w = 300, h = 220;
  double xmin = 0, xmax = 1, ymin = -1, ymax = 1;
  std::ostringstream body;

  double px(double v) const { return x + (v - xmin) / (xmax - xmin) * w; }
  double py(double v) const { return y + h - (v - ymin) / (ymax - ymin) * h; }

  void fit_y(const std::vector<double>& ys) {
    double lo = ys.empty() ? -1 : ys[0], hi = lo;
    for (double v : ys) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi - lo < 1e-12) {
      lo -= 1.0;
      hi += 1.0;
    }
    const double pad = 0.08 * (hi - lo);
    ymin = lo - pad;
    ymax = hi + pad;
  }

  void polyline(const std::vector<double>& xs, const std::vector<double>& ys,
                const char* color) {
    body << "<polyline fill=\"none\" stroke=\"" << color
         << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < xs.size(); ++i)
      body << px(xs[i]) << "," << py(ys[i]) << " ";
    body << "\"/>\n";
  }

  void dot(double vx, double vy, const char* color, double r = 3.5) {
    body << "<circle cx=\"" << px(vx) << "\" cy=\"" << py(vy) << "\" r=\"" << r
         << "\" fill=\"" << color << "\"/>\n";
  }

  void frame_and_label(std::ostream& os, const std::string& label) const {
    os << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << w
       << "\" height=\"" << h
       << "\" fill=\"white\" stroke=\"#444\" stroke-width=\"1\"/>\n";
    os << body.str();
    os << "<text x=\"" << x + 8 << "\" y=\"" << y + 18
       << "\" font-family=\"sans-serif\" font-size=\"13\">" << label
       << "</text>\n";
  }
};

inline void fill_front_panel(SvgPanel& p, const ParetoFront& front,
                             int highlight) {
  std::vector<double> xs, ys;
  for (const auto& pt : front.points)
    if (!pt.failed) {
      xs.push_back(pt.phi1);
      ys.push_back(pt.phi2);
    }
  double xlo = xs[0], xhi = xs[0];
  for (double v : xs) {
    xlo = std::min(xlo, v);
    xhi = std::max(xhi, v);
  }
  if (xhi - xlo < 1e-12) xhi = xlo + 1.0;
  p.xmin = xlo - 0.08 * (xhi - xlo);
  p.xmax = xhi + 0.08 * (xhi - xlo);
  p.fit_y(ys);
  p.polyline(xs, ys, "#1f77b4");
  if (highlight >= 0 && highlight < int(front.points.size()) &&
      !front.points[std::size_t(highlight)].failed)
    p.dot(front.points[std::size_t(highlight)].phi1,
          front.points[std::size_t(highlight)].phi2, "#d62728");
}

}  // namespace detail_pareto

/// Static front plot.
inline void write_front_svg(std::ostream& os, const ParetoFront& front) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" "
        "height=\"360\" viewBox=\"0 0 480 360\">\n";
  detail_pareto::SvgPanel p;
  p.x = 40;
  p.y = 30;
  p.w = 400;
  p.h = 300;
  detail_pareto::fill_front_panel(p, front, -1);
  p.frame_and_label(os, "Pareto front (phi1 vs phi2)");
  os << "</svg>\n";
}

/// Four-panel frame plot: control, states, normalized switching function,
/// and the front with the current point highlighted.
inline void write_frame_svg(std::ostream& os, const FrameData& f,
                            const ParetoFront& front) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"680\" "
        "height=\"520\" viewBox=\"0 0 680 520\">\n";
  const double W = 300, H = 220;
  {
    detail_pareto::SvgPanel p{20, 20, W, H};
    p.fit_y(f.u);
    p.polyline(f.t, f.u, "#1f77b4");
    p.frame_and_label(os, "u(t)");
  }
  {
    detail_pareto::SvgPanel p{360, 20, W, H};
    std::vector<double> both = f.x1;
    both.insert(both.end(), f.x2.begin(), f.x2.end());
    p.fit_y(both);
    p.polyline(f.t, f.x1, "#2ca02c");
    p.polyline(f.t, f.x2, "#ff7f0e");
    p.frame_and_label(os, "x1(t), x2(t)");
  }
  {
    detail_pareto::SvgPanel p{20, 280, W, H};
    p.ymin = -1.3;
    p.ymax = 1.3;
    p.polyline(f.t, f.eta_over_alpha, "#9467bd");
    p.polyline({0.0, 1.0}, {1.0, 1.0}, "#bbbbbb");
    p.polyline({0.0, 1.0}, {-1.0, -1.0}, "#bbbbbb");
    p.frame_and_label(os, f.eta_ratio_defined ? "eta(t)/alpha"
                                              : "eta/alpha (undefined)");
  }
  {
    detail_pareto::SvgPanel p{360, 280, W, H};
    detail_pareto::fill_front_panel(p, front, f.front_index);
    p.frame_and_label(os, "front");
  }
  os << "</svg>\n";
}

/// Weighted-sum consistency: each solved point minimizes its own
/// scalarization over the whole front (infinite-weight point compares by
/// phi2 alone).
inline bool front_weighted_sum_consistent(const ParetoFront& front,
                                          double slack = 1e-6) {
  const auto pts = front.solved_points();
  for (const auto* p : pts) {
    for (const auto* q : pts) {
      if (p == q) continue;
      if (p->alpha.is_infinite()) {
        if (p->phi2 > q->phi2 + slack) return false;
      } else {
        const double a = p->alpha.alpha;
        if (p->phi1 + a * p->phi2 > q->phi1 + a * q->phi2 + slack)
          return false;
      }
    }
  }
  return true;
}

}  // namespace tvoc
