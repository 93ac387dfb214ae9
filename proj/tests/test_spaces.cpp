#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "mmangle/core_space.hpp"
#include "mmangle/spaces.hpp"
#include "mmangle/util.hpp"

using namespace mmangle;

namespace {

const double kPi = std::acos(-1.0);

double clamp1(double v) { return std::min(1.0, std::max(-1.0, v)); }

// Independent planar oracle: law of cosines from squared coordinate distances.
double planar_angle(double px, double py, double xx, double xy, double qx, double qy) {
  double a2 = (px - xx) * (px - xx) + (py - xy) * (py - xy);
  double b2 = (qx - xx) * (qx - xx) + (qy - xy) * (qy - xy);
  double c2 = (px - qx) * (px - qx) + (py - qy) * (py - qy);
  return std::acos(clamp1((a2 + b2 - c2) / (2.0 * std::sqrt(a2 * b2))));
}

double gc_dist(const DiscreteMMSpace& s, PointId a, PointId b) {
  double dot = 0.0;
  for (std::size_t k = 0; k < 3; ++k) dot += s.coord(a, k) * s.coord(b, k);
  return std::acos(clamp1(dot));
}

PointId pick(Rng& rng, std::size_t n) { return PointId(rng.next_double() * double(n)) % n; }

}  // namespace

TEST_CASE("euclidean cloud: determinism, chord bounds, distance-only oracle check") {
  OracleSpace os = euclidean_cloud(300, 2, 5);
  CHECK(os.space.size() == 300);
  CHECK(os.space.dim() == 2);
  CHECK(os.kind == "euclidean_cloud");
  CHECK(os.K == 0.0);
  CHECK(os.N == 2.0);
  CHECK(os.space.h == doctest::Approx(2.0 * std::pow(std::log(300.0) / 300.0, 0.5)));
  CHECK(os.space.measure[0] == os.space.measure[299]);
  CHECK(os.space.total_mass() == doctest::Approx(1.0).epsilon(1e-12));

  OracleSpace again = euclidean_cloud(300, 2, 5);
  OracleSpace other = euclidean_cloud(300, 2, 6);
  bool identical = true, differs = false;
  for (PointId i = 0; i < 300; ++i)
    for (std::size_t k = 0; k < 2; ++k) {
      identical = identical && os.space.coord(i, k) == again.space.coord(i, k);
      differs = differs || os.space.coord(i, k) != other.space.coord(i, k);
    }
  CHECK(identical);
  CHECK(differs);
  CHECK(os.space.h == again.space.h);

  Rng rng(17);
  for (int it = 0; it < 60; ++it) {
    PointId a = pick(rng, 300), b = pick(rng, 300);
    if (a == b) continue;
    double dx = os.space.coord(a, 0) - os.space.coord(b, 0);
    double dy = os.space.coord(a, 1) - os.space.coord(b, 1);
    double chord = std::sqrt(dx * dx + dy * dy);
    double d = os.space.dist(a, b);
    CHECK(d >= chord - 1e-9);             // edge weights are exact, paths only add
    CHECK(d <= 1.35 * chord + os.space.h);  // mild detour on a dense cloud
  }

  // oracle agrees with the angle recovered from coordinate distances alone
  for (int it = 0; it < 60; ++it) {
    PointId p = pick(rng, 300), x = pick(rng, 300), q = pick(rng, 300);
    if (p == x || q == x) continue;
    double ref = planar_angle(os.space.coord(p, 0), os.space.coord(p, 1), os.space.coord(x, 0),
                              os.space.coord(x, 1), os.space.coord(q, 0), os.space.coord(q, 1));
    CHECK(os.oracle_angle(p, x, q) == doctest::Approx(ref).epsilon(1e-9));
  }
  CHECK_THROWS_AS(os.oracle_angle(3, 3, 5), std::domain_error);
  CHECK_FALSE(os.oracle_defined(3, 300, 5));
  CHECK_THROWS_AS(euclidean_cloud(1, 2, 0), std::invalid_argument);
  CHECK_THROWS_AS(euclidean_cloud(10, 0, 0), std::invalid_argument);
}

TEST_CASE("euclidean grid: layout, uniform cell mass, axis-aligned oracle angles") {
  OracleSpace os = euclidean_grid(7, 5, 0.5);
  const DiscreteMMSpace& s = os.space;
  CHECK(s.size() == 35);
  CHECK(s.h == 2.5 * 0.5);
  for (std::size_t iy = 0; iy < 5; ++iy)
    for (std::size_t ix = 0; ix < 7; ++ix) {
      PointId id = PointId(iy * 7 + ix);
      CHECK(s.coord(id, 0) == double(ix) * 0.5);
      CHECK(s.coord(id, 1) == double(iy) * 0.5);
      CHECK(s.measure[id] == 0.25);
    }
  // unit lattice steps are realized exactly by single edges
  CHECK(s.dist(0, 1) == 0.5);
  CHECK(s.dist(0, 7) == 0.5);
  CHECK(s.dist(0, 8) == doctest::Approx(0.5 * std::sqrt(2.0)).epsilon(1e-15));

  PointId p = 2 * 7 + 1, x = 2 * 7 + 3, q = 2 * 7 + 5;  // one horizontal line
  CHECK(os.oracle_angle(p, x, q) == kPi);
  PointId up = 4 * 7 + 3;
  CHECK(os.oracle_angle(p, x, up) == doctest::Approx(kPi / 2.0).epsilon(1e-15));
  CHECK(os.oracle_angle(p, x, p) == 0.0);
  CHECK_THROWS_AS(euclidean_grid(1, 5, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(euclidean_grid(5, 5, 0.0), std::invalid_argument);
}

TEST_CASE("sphere cloud: unit vectors and the spherical law of cosines") {
  OracleSpace os = sphere_cloud(500, 3);
  const DiscreteMMSpace& s = os.space;
  CHECK(s.size() == 500);
  CHECK(os.K == 1.0);
  CHECK(os.N == 2.0);
  for (PointId i = 0; i < 500; i += 7) {
    double n2 = 0.0;
    for (std::size_t k = 0; k < 3; ++k) n2 += s.coord(i, k) * s.coord(i, k);
    CHECK(n2 == doctest::Approx(1.0).epsilon(1e-12));
  }

  // independent oracle: angles from great-circle side lengths only
  Rng rng(31);
  int checked = 0;
  while (checked < 50) {
    PointId p = pick(rng, 500), x = pick(rng, 500), q = pick(rng, 500);
    if (p == x || q == x || p == q || !os.oracle_defined(p, x, q)) continue;
    double a = gc_dist(s, x, p), b = gc_dist(s, x, q), c = gc_dist(s, p, q);
    double sab = std::sin(a) * std::sin(b);
    if (sab < 1e-3) continue;
    double ref = std::acos(clamp1((std::cos(c) - std::cos(a) * std::cos(b)) / sab));
    CHECK(os.oracle_angle(p, x, q) == doctest::Approx(ref).epsilon(1e-9));
    ++checked;
  }

  // graph metric dominates the great-circle metric it was built from
  for (int it = 0; it < 40; ++it) {
    PointId a = pick(rng, 500), b = pick(rng, 500);
    if (a != b) CHECK(s.dist(a, b) >= gc_dist(s, a, b) - 1e-9);
  }
}

TEST_CASE("cone cloud: full angle reduces to the plane, apex carries no frame") {
  const double alpha = 2.0 * kPi;
  OracleSpace os = cone_cloud(alpha, 300, 9);
  const DiscreteMMSpace& s = os.space;
  CHECK(os.alpha == alpha);
  CHECK(s.coord(0, 0) == 0.0);  // apex sits at id 0
  CHECK_FALSE(os.oracle_defined(1, 0, 2));

  auto emb = [&](PointId i, double& ex, double& ey) {
    ex = s.coord(i, 0) * std::cos(s.coord(i, 1));
    ey = s.coord(i, 0) * std::sin(s.coord(i, 1));
  };
  Rng rng(41);
  int checked = 0;
  while (checked < 50) {
    PointId p = pick(rng, 300), x = pick(rng, 300), q = pick(rng, 300);
    if (x == 0 || p == x || q == x) continue;
    // stay away from the cut locus of the development around x
    auto wrapped = [&](PointId t) {
      double so = std::fmod(s.coord(t, 1) - s.coord(x, 1), alpha);
      if (so <= -alpha / 2.0) so += alpha;
      if (so > alpha / 2.0) so -= alpha;
      return std::fabs(so);
    };
    if (wrapped(p) > 3.1 || wrapped(q) > 3.1) continue;
    if (!os.oracle_defined(p, x, q)) continue;
    double px, py, xx, xy, qx, qy;
    emb(p, px, py);
    emb(x, xx, xy);
    emb(q, qx, qy);
    CHECK(os.oracle_angle(p, x, q) ==
          doctest::Approx(planar_angle(px, py, xx, xy, qx, qy)).epsilon(1e-9));
    ++checked;
  }

  // graph metric dominates the cone metric; radius is the distance to the apex
  for (PointId b = 1; b < 40; ++b) CHECK(s.dist(0, b) >= s.coord(b, 0) - 1e-9);
  CHECK_THROWS_AS(cone_cloud(0.0, 50, 1), std::invalid_argument);
  CHECK_THROWS_AS(cone_cloud(13.0 * kPi, 50, 1), std::invalid_argument);
}

TEST_CASE("metric tree: dyadic subdivision is exact, branch oracle is 0 or pi") {
  std::vector<TreeEdge> tripod = {{0, 1, 1.0}, {0, 2, 1.0}, {0, 3, 1.0}};
  OracleSpace os = metric_tree(tripod, 0.25);
  const DiscreteMMSpace& s = os.space;
  CHECK(s.size() == 13);  // 4 nodes + 3 interior points per unit edge
  CHECK(s.h == 0.5);
  CHECK(os.N == 1.0);
  CHECK(s.dim() == 0);

  CHECK(s.dist(0, 1) == 1.0);
  CHECK(s.dist(1, 2) == 2.0);
  CHECK(s.dist(1, 3) == 2.0);
  CHECK(os.oracle_angle(1, 0, 2) == kPi);
  CHECK(os.oracle_angle(1, 0, 1) == 0.0);

  // v: the subdivision point one step from leaf 1
  auto nb = s.neighbors_within(1, 0.26);
  REQUIRE(nb.size() == 1);
  PointId v = nb[0].first;
  CHECK(s.dist(1, v) == 0.25);
  CHECK(os.oracle_angle(0, v, 1) == kPi);   // opposite directions along the edge
  CHECK(os.oracle_angle(2, v, 3) == 0.0);   // both continue through the center
  CHECK(s.dist(v, 2) == s.dist(v, 0) + 1.0);

  CHECK_THROWS_AS(metric_tree({}, 0.25), std::invalid_argument);
  CHECK_THROWS_AS(metric_tree(tripod, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(metric_tree({{0, 0, 1.0}}, 0.25), std::invalid_argument);
}

TEST_CASE("gaussian weighted cloud: normalized center-heavy mass, flat-space oracle") {
  OracleSpace os = gaussian_weighted_cloud(400, 2, 13, 0.35);
  const DiscreteMMSpace& s = os.space;
  CHECK(s.size() == 400);
  CHECK(os.K == doctest::Approx(1.0 / (0.35 * 0.35)).epsilon(1e-15));
  CHECK(std::isinf(os.N));
  CHECK(s.total_mass() == doctest::Approx(1.0).epsilon(1e-12));

  auto r2 = [&](PointId i) {
    double a = s.coord(i, 0) - 0.5, b = s.coord(i, 1) - 0.5;
    return a * a + b * b;
  };
  PointId inner = 0, outer = 0;
  for (PointId i = 1; i < 400; ++i) {
    if (r2(i) < r2(inner)) inner = i;
    if (r2(i) > r2(outer)) outer = i;
  }
  CHECK(s.measure[inner] > s.measure[outer]);

  double ref = planar_angle(s.coord(1, 0), s.coord(1, 1), s.coord(2, 0), s.coord(2, 1),
                            s.coord(3, 0), s.coord(3, 1));
  CHECK(os.oracle_angle(1, 2, 3) == doctest::Approx(ref).epsilon(1e-9));
  CHECK_THROWS_AS(gaussian_weighted_cloud(400, 2, 13, 0.0), std::invalid_argument);
}

TEST_CASE("oracle space JSON round trips keep kind, curvature tags, and the oracle") {
  OracleSpace cone = cone_cloud(kPi, 60, 2);
  OracleSpace rt = oracle_space_from_json(oracle_space_to_json(cone));
  CHECK(rt.kind == cone.kind);
  CHECK(rt.id == cone.id);
  CHECK(rt.K == cone.K);
  CHECK(rt.N == cone.N);
  CHECK(rt.alpha == cone.alpha);
  CHECK(rt.space.dist(1, 5) == cone.space.dist(1, 5));
  PointId p = 4, x = 7, q = 11;
  if (cone.oracle_defined(p, x, q))
    CHECK(rt.oracle_angle(p, x, q) == cone.oracle_angle(p, x, q));

  OracleSpace gauss = gaussian_weighted_cloud(50, 2, 1, 0.5);
  OracleSpace grt = oracle_space_from_json(oracle_space_to_json(gauss));
  CHECK(std::isinf(grt.N));  // survives the "inf" encoding
  CHECK(grt.K == gauss.K);

  OracleSpace tree = metric_tree({{0, 1, 1.0}, {0, 2, 1.0}, {0, 3, 1.0}}, 0.25);
  OracleSpace trt = oracle_space_from_json(oracle_space_to_json(tree));
  CHECK(trt.space.dist(1, 2) == 2.0);
  CHECK(trt.oracle_angle(1, 0, 2) == kPi);

  // bare space JSON carries no descriptor block
  CHECK_THROWS_AS(oracle_space_from_json(space_to_json(tree.space, "")), std::invalid_argument);

  std::string text = oracle_space_to_json(euclidean_cloud(20, 2, 4));
  std::string bad = text;
  std::size_t at;
  while ((at = bad.find("euclidean_cloud")) != std::string::npos)
    bad.replace(at, 15, "mystery_spacexx");
  CHECK_THROWS_AS(oracle_space_from_json(bad), std::invalid_argument);

  // coordinate kinds refuse a coordinate-free payload
  std::string treetext = oracle_space_to_json(tree);
  while ((at = treetext.find("metric_tree")) != std::string::npos)
    treetext.replace(at, 11, "sphere_cloud");
  CHECK_THROWS_AS(oracle_space_from_json(treetext), std::invalid_argument);
}
