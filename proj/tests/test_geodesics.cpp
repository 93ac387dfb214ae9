#include <cmath>
#include <vector>

#include "doctest.h"

#include "mmangle/core_space.hpp"
#include "mmangle/geodesics.hpp"
#include "mmangle/util.hpp"

using namespace mmangle;

namespace {

DiscreteMMSpace line_space(std::size_t n, double step, double h_mult = 2.0) {
  std::vector<double> coords;
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) coords.push_back(double(i) * step);
  for (std::size_t i = 0; i + 1 < n; ++i) edges.push_back({PointId(i), PointId(i + 1), step});
  return build_from_edges(n, 1, coords, edges, std::vector<double>(n, 1.0 / double(n)),
                          h_mult * step);
}

DiscreteMMSpace cloud_space(std::size_t n, std::uint64_t seed, double radius, double h) {
  Rng rng(seed);
  std::vector<double> coords;
  for (std::size_t i = 0; i < 2 * n; ++i) coords.push_back(rng.next_double());
  std::vector<Edge> edges;
  auto eu = [&](std::size_t a, std::size_t b) {
    const double dx = coords[2 * a] - coords[2 * b];
    const double dy = coords[2 * a + 1] - coords[2 * b + 1];
    return std::sqrt(dx * dx + dy * dy);
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (eu(i, j) <= radius) edges.push_back({PointId(i), PointId(j), eu(i, j)});
  return build_from_edges(n, 2, coords, edges, std::vector<double>(n, 1.0 / double(n)), h);
}

}  // namespace

TEST_CASE("shortest geodesic realizes the metric and is subpath-optimal") {
  auto s = cloud_space(250, 5, 0.16, 0.2);
  Rng rng(99);
  for (int rep = 0; rep < 12; ++rep) {
    const PointId x = PointId(rng.next_below(s.size()));
    const PointId p = PointId(rng.next_below(s.size()));
    if (x == p) continue;
    const auto g = shortest_geodesic(s, x, p);
    REQUIRE(g.vertices.size() >= 2);
    CHECK(g.start() == x);
    CHECK(g.end() == p);
    CHECK(g.speed == doctest::Approx(s.dist(x, p)).epsilon(1e-12));
    CHECK(g.cumlen.front() == 0.0);
    CHECK(g.cumlen.back() == doctest::Approx(g.speed).epsilon(1e-12));
    for (std::size_t i = 1; i < g.cumlen.size(); ++i) CHECK(g.cumlen[i] > g.cumlen[i - 1]);
    // every sub-arc is itself shortest
    for (std::size_t i = 0; i < g.vertices.size(); i += 2)
      for (std::size_t j = i + 1; j < g.vertices.size(); j += 3)
        CHECK(s.dist(g.vertices[i], g.vertices[j]) ==
              doctest::Approx(g.cumlen[j] - g.cumlen[i]).epsilon(1e-12));
  }
}

TEST_CASE("ties break toward the lexicographically smallest predecessor") {
  // diamond: two equal-length routes 0-1-3 and 0-2-3
  std::vector<Edge> edges = {{0, 1, 1.0}, {0, 2, 1.0}, {1, 3, 1.0}, {2, 3, 1.0}};
  auto s = build_from_edges(4, 0, {}, edges, {1, 1, 1, 1}, 2.0);
  const auto g = shortest_geodesic(s, 0, 3);
  REQUIRE(g.vertices.size() == 3);
  CHECK(g.vertices[0] == 0);
  CHECK(g.vertices[1] == 1);
  CHECK(g.vertices[2] == 3);

  // a second run is bit-identical
  const auto g2 = shortest_geodesic(s, 0, 3);
  CHECK(g2.vertices == g.vertices);
  CHECK(g2.cumlen == g.cumlen);
}

TEST_CASE("constant geodesic and same-point rejection") {
  auto s = line_space(5, 1.0);
  CHECK_THROWS_AS(shortest_geodesic(s, 2, 2), SamePoint);
  const auto c = constant_geodesic(2);
  CHECK(c.vertices.size() == 1);
  CHECK(c.speed == 0.0);
  CHECK(c.start() == 2);
  CHECK(geodesic_eval(c, 0.7) == 2);
}

TEST_CASE("evaluation picks the nearest arc sample, ties toward the start") {
  auto s = line_space(5, 1.0);
  const auto g = shortest_geodesic(s, 0, 4);  // cumlen 0,1,2,3,4
  CHECK(geodesic_eval_index(g, 0.0) == 0);
  CHECK(geodesic_eval_index(g, 1.0) == 4);
  CHECK(geodesic_eval_index(g, 0.5) == 2);
  CHECK(geodesic_eval_index(g, 0.125) == 0);   // 0.5 sits exactly between 0 and 1
  CHECK(geodesic_eval_index(g, 0.375) == 1);   // 1.5 sits exactly between 1 and 2
  CHECK(geodesic_eval(g, 0.26) == 1);
}

TEST_CASE("restriction keeps a prefix and rejects too-short windows") {
  auto s = line_space(9, 0.5, 2.0);  // h = 1, length 4
  const auto g = shortest_geodesic(s, 0, 8);
  const auto full = geodesic_restrict(g, 1.0, s.h);
  CHECK(full.vertices == g.vertices);
  CHECK(full.speed == doctest::Approx(g.speed).epsilon(1e-15));

  const auto half = geodesic_restrict(g, 0.5, s.h);
  REQUIRE(half.vertices.size() == 5);
  CHECK(half.end() == 4);
  CHECK(half.speed == doctest::Approx(2.0).epsilon(1e-12));
  for (std::size_t i = 0; i < half.vertices.size(); ++i) CHECK(half.vertices[i] == g.vertices[i]);

  CHECK_THROWS_AS(geodesic_restrict(g, 0.4, s.h), TooShort);  // 1.6 < 2h
}

TEST_CASE("restricted Euclidean geodesics land near the coordinate midpoint") {
  auto s = cloud_space(300, 8, 0.15, 0.18);
  Rng rng(4);
  int tested = 0;
  while (tested < 6) {
    const PointId x = PointId(rng.next_below(s.size()));
    const PointId p = PointId(rng.next_below(s.size()));
    // the restricted half must itself be a valid geodesic of length >= 2h
    if (x == p || s.dist(x, p) < 0.75) continue;
    const auto g = shortest_geodesic(s, x, p);
    const auto half = geodesic_restrict(g, 0.5, s.h);
    const double mx = 0.5 * (s.coord(x, 0) + s.coord(p, 0));
    const double my = 0.5 * (s.coord(x, 1) + s.coord(p, 1));
    const double ex = s.coord(half.end(), 0) - mx;
    const double ey = s.coord(half.end(), 1) - my;
    // half the graph-vs-chord slack plus one vertex of quantization
    CHECK(std::sqrt(ex * ex + ey * ey) <= 2.0 * s.h);
    ++tested;
  }
}

TEST_CASE("interior extension certificates on a line") {
  auto s = line_space(21, 0.1, 2.0);  // vertices at 0..2.0
  const auto g = shortest_geodesic(s, 10, 20);
  const auto cert = is_interior_extendable(s, g, 0.3);
  CHECK(cert.found);
  CHECK(cert.betweenness_defect == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(cert.dist_from_start >= 0.3);
  CHECK(s.coord(cert.witness, 0) < s.coord(10, 0));

  // the left endpoint extends nowhere: every candidate doubles back
  const auto edge = shortest_geodesic(s, 0, 20);
  const auto none = is_interior_extendable(s, edge, 0.3);
  CHECK_FALSE(none.found);
}

TEST_CASE("path length on clouds stays close to the chord") {
  auto s = cloud_space(400, 21, 0.13, 0.15);
  Rng rng(17);
  int tested = 0;
  while (tested < 10) {
    const PointId x = PointId(rng.next_below(s.size()));
    const PointId p = PointId(rng.next_below(s.size()));
    if (x == p) continue;
    const double dx = s.coord(x, 0) - s.coord(p, 0);
    const double dy = s.coord(x, 1) - s.coord(p, 1);
    const double chord = std::sqrt(dx * dx + dy * dy);
    if (chord < 0.4) continue;
    const auto g = shortest_geodesic(s, x, p);
    CHECK(g.speed >= chord - 1e-12);
    CHECK(g.speed <= 1.25 * chord);
    ++tested;
  }
}
