#pragma once

#include "mmangle/core_space.hpp"

namespace mmangle {

struct SamePoint : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct TooShort : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Unit-interval parametrized shortest path. cumlen[i] = distance from
// vertices[0] to vertices[i] along the path; cumlen is strictly increasing,
// cumlen.front() == 0, cumlen.back() == speed == d(start, end). A constant
// geodesic (one vertex, speed 0) is allowed.
struct DiscreteGeodesic {
  std::vector<PointId> vertices;
  std::vector<double> cumlen;
  double speed = 0.0;

  PointId start() const { return vertices.front(); }
  PointId end() const { return vertices.back(); }
};

// Shortest path x -> p; ties broken deterministically by always taking the
// lexicographically smallest predecessor.
DiscreteGeodesic shortest_geodesic(const DiscreteMMSpace& s, PointId x, PointId p);

DiscreteGeodesic constant_geodesic(PointId x);

// Index into vertices of the sample point for parameter t in [0,1]:
// nearest cumlen to t*speed, ties resolved toward the smaller cumlen.
std::size_t geodesic_eval_index(const DiscreteGeodesic& g, double t);
PointId geodesic_eval(const DiscreteGeodesic& g, double t);

// Prefix of g up to the sample at parameter T. The result is again a
// shortest path from g's start; its speed is T*speed up to one vertex gap.
// Throws TooShort when T*speed < 2h.
DiscreteGeodesic geodesic_restrict(const DiscreteGeodesic& g, double T, double h);

// Witness that g's start is an interior point: a point phat at distance
// >= margin from the start such that the start lies on an approximately
// shortest path from phat to g's end. betweenness_defect =
// d(phat, start) + speed - d(phat, end) (always >= 0, zero iff exactly
// between); found means defect <= h.
struct ExtensionCertificate {
  bool found = false;
  PointId witness = 0;
  double betweenness_defect = 0.0;
  double dist_from_start = 0.0;
};

ExtensionCertificate is_interior_extendable(const DiscreteMMSpace& s, const DiscreteGeodesic& g,
                                            double margin);

}  // namespace mmangle
