#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "tvoc/pareto.hpp"

using namespace tvoc;
using Catch::Matchers::WithinAbs;

namespace {

std::vector<Weight> small_grid() {
  std::vector<Weight> g;
  g.emplace_back(0.0);
  for (double a : {1e-3, 1e-2, 0.1, 0.4, 1.0, 4.0, 20.0, 1e3})
    g.emplace_back(a);
  g.push_back(Weight::infinity());
  return g;
}

}  // namespace

TEST_CASE("weight mapping from the unit-interval parameter") {
  CHECK(alpha_from_alpha1(1.0) == 0.0);
  CHECK_THAT(alpha_from_alpha1(0.5), WithinAbs(1.0, 1e-15));
  CHECK_THAT(alpha_from_alpha1(0.2), WithinAbs(4.0, 1e-12));
  CHECK_THROWS_AS(alpha_from_alpha1(0.0), std::domain_error);
  CHECK_THROWS_AS(alpha_from_alpha1(1.5), std::domain_error);
}

TEST_CASE("default grid shape") {
  const auto g = default_alpha_grid(200);
  REQUIRE(g.size() == 202);
  CHECK(g.front().is_zero());
  CHECK(g.back().is_infinite());
  CHECK_THAT(g[1].alpha, WithinAbs(1e-6, 1e-18));
  CHECK_THAT(g[200].alpha, WithinAbs(1e6, 1e-6));
  for (std::size_t i = 1; i < g.size(); ++i)
    CHECK(g[i].alpha > g[i - 1].alpha);
}

TEST_CASE("sweep on the reference instance") {
  const auto front = sweep({0, 0, 1, 0}, small_grid());
  REQUIRE(front.points.size() == 10);
  for (const auto& p : front.points) {
    INFO("alpha " << p.alpha.alpha << ": " << p.error);
    CHECK_FALSE(p.failed);
  }
  // endpoints
  CHECK_THAT(front.points.front().phi1, WithinAbs(2.0, 1e-12));
  CHECK_THAT(front.points.front().phi2, WithinAbs(6.0, 1e-12));
  CHECK_THAT(front.points.back().phi1, WithinAbs(2.5, 1e-12));
  CHECK_THAT(front.points.back().phi2, WithinAbs(4.0, 1e-12));

  CHECK(front_is_monotone(front));
  CHECK(front_nondominated(front));
  CHECK(front_on_convex_hull(front, 1e-7));
  CHECK(front_weighted_sum_consistent(front));
}

TEST_CASE("sweep input validation") {
  CHECK_THROWS_AS(sweep({0, 0, 1, 0}, {}), std::invalid_argument);
  std::vector<Weight> dup{Weight(1.0), Weight(1.0)};
  CHECK_THROWS_AS(sweep({0, 0, 1, 0}, dup), std::invalid_argument);
  std::vector<Weight> desc{Weight(2.0), Weight(1.0)};
  CHECK_THROWS_AS(sweep({0, 0, 1, 0}, desc), std::invalid_argument);
}

TEST_CASE("sweep records failures instead of dropping points") {
  // The infinite endpoint is only available on the reference instance.
  std::vector<Weight> g{Weight(0.0), Weight(1.0), Weight::infinity()};
  const auto front = sweep({0, 1, 0, 0}, g);
  REQUIRE(front.points.size() == 3);
  CHECK_FALSE(front.points[0].failed);
  CHECK_FALSE(front.points[1].failed);
  CHECK(front.points[2].failed);
  CHECK_FALSE(front.points[2].error.empty());
  CHECK(front.solved_points().size() == 2);
}

TEST_CASE("sweep result does not depend on the thread cap") {
  const auto a = sweep({0, 0, 1, 0}, small_grid());
  setenv("TVOC_THREADS", "1", 1);
  const auto b = sweep({0, 0, 1, 0}, small_grid());
  unsetenv("TVOC_THREADS");
  REQUIRE(a.points.size() == b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    CHECK(a.points[i].phi1 == b.points[i].phi1);
    CHECK(a.points[i].phi2 == b.points[i].phi2);
  }
}

TEST_CASE("frames carry the normalized switching function") {
  const auto front = sweep({0, 0, 1, 0}, small_grid());
  const auto fs = frames(front, 200);
  REQUIRE(fs.size() == front.points.size());
  for (const auto& f : fs) {
    REQUIRE(f.t.size() == 201);
    CHECK(f.u.size() == f.t.size());
    if (!f.eta_ratio_defined) continue;
    double lo = 0.0, peak = 0.0;
    for (double v : f.eta_over_alpha) {
      lo = std::min(lo, v);
      peak = std::max(peak, std::abs(v));
    }
    CHECK(peak <= 1.0 + 1e-7);          // ratio stays inside the band
    CHECK_THAT(lo, WithinAbs(-1.0, 1e-6));  // and touches the active side
  }
  // the frame near alpha = 0.589 from the mapped weight 0.6294
  const auto front2 =
      sweep({0, 0, 1, 0}, {Weight(alpha_from_alpha1(0.6294))});
  const auto f2 = frames(front2, 400);
  REQUIRE(f2.size() == 1);
  double lo = 0.0;
  for (double v : f2[0].eta_over_alpha) lo = std::min(lo, v);
  CHECK_THAT(lo, WithinAbs(-1.0, 1e-9));
}

TEST_CASE("csv and json emission") {
  const auto front = sweep({0, 0, 1, 0}, small_grid());
  std::ostringstream os;
  write_front_csv(os, front);
  std::istringstream is(os.str());
  std::string header;
  std::getline(is, header);
  CHECK(header == "alpha,phi1,phi2,t1,t2,u1,u3");
  int rows = 0;
  std::string line, last;
  while (std::getline(is, line))
    if (!line.empty()) {
      ++rows;
      last = line;
    }
  CHECK(rows == 10);
  CHECK(last.substr(0, 4) == "inf,");

  const auto j = front_to_json(front);
  CHECK(j.at("points").size() == 10);
  CHECK(j.at("solutions").size() == 10);
  CHECK(j.at("instance").at("v0").get<double>() == 1.0);
  CHECK(j.at("points")[9].at("alpha") == "inf");
}

TEST_CASE("svg emitters produce well-formed documents") {
  const auto front = sweep({0, 0, 1, 0}, small_grid());
  {
    std::ostringstream os;
    write_front_svg(os, front);
    const std::string s = os.str();
    CHECK(s.find("<svg") == 0);
    CHECK(s.find("</svg>") != std::string::npos);
    CHECK(s.find("polyline") != std::string::npos);
  }
  const auto fs = frames(front, 100);
  std::ostringstream os;
  write_frame_svg(os, fs[4], front);
  const std::string s = os.str();
  CHECK(s.find("<svg") == 0);
  CHECK(s.find("</svg>") != std::string::npos);
  CHECK(s.find("circle") != std::string::npos);  // highlighted front point
}

TEST_CASE("dense sweep keeps its structural invariants") {
  const auto front = sweep({0, 0, 1, 0}, default_alpha_grid(60));
  for (const auto& p : front.points) CHECK_FALSE(p.failed);
  CHECK(front_is_monotone(front));
  CHECK(front_nondominated(front));
  CHECK(front_on_convex_hull(front, 1e-6));
  CHECK(front_weighted_sum_consistent(front, 1e-6));
  // junction times close toward 1/2 along the sweep
  double prev = 0.0;
  for (const auto* p : front.solved_points()) {
    const auto& s = front.solution(*p);
    CHECK(s.t1 >= prev - 1e-12);
    prev = s.t1;
  }
  CHECK_THAT(prev, WithinAbs(0.5, 1e-9));
}
