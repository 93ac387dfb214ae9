#pragma once

#include "mmangle/core_space.hpp"

namespace mmangle {

// A generated space bundled with its analytic angle oracle and the model
// curvature/dimension bounds it satisfies. The oracle answers in the
// smooth model the sample was drawn from, independently of the graph
// metric, so it can referee every discrete estimator.
class OracleSpace {
 public:
  DiscreteMMSpace space;
  std::string kind;
  std::string id;
  double K = 0.0;
  double N = 0.0;      // model dimension; infinity for weighted clouds
  double alpha = 0.0;  // cone opening angle when kind == "cone_cloud"

  bool oracle_defined(PointId p, PointId x, PointId q) const;
  // angle in radians at x between the directions toward p and q
  double oracle_angle(PointId p, PointId x, PointId q) const;

  std::string descriptor_json() const;
};

// Uniform sample of the unit cube [0,1]^dim, edges between points at
// Euclidean distance <= h, uniform measure 1/n. h = 0 picks
// 2 (log n / n)^(1/dim); on a disconnected draw h is grown by 1.3x
// (up to 6 times).
OracleSpace euclidean_cloud(std::size_t n, std::size_t dim, std::uint64_t seed, double h = 0.0);

// Regular nx x ny lattice with the given spacing, lower-left corner at
// (ox, oy), neighbor template of radius 2.5*spacing, per-point mass
// spacing^2 (unit density).
OracleSpace euclidean_grid(std::size_t nx, std::size_t ny, double spacing, double ox = 0.0,
                           double oy = 0.0);

// Uniform sample of the unit sphere, great-circle edge lengths, h = 0 picks
// 4 (log n / n)^(1/2).
OracleSpace sphere_cloud(std::size_t n, std::uint64_t seed, double h = 0.0);

// Flat cone of total angle alpha, unit slant radius, apex included as point
// 0. Coordinates are stored in the intrinsic polar chart (r, theta).
OracleSpace cone_cloud(double alpha, std::size_t n, std::uint64_t seed, double h = 0.0);

// Metric tree: combinatorial edges (a, b, length) over node labels
// 0..max, each subdivided with steps of at most `step` (0.25 default keeps
// dyadic lengths exact in floating point). Node labels keep their ids;
// subdivision points are appended after them.
struct TreeEdge {
  std::size_t a, b;
  double len;
};
OracleSpace metric_tree(const std::vector<TreeEdge>& edges, double step = 0.25);

// Euclidean cloud re-weighted by a centered Gaussian density of width sigma.
OracleSpace gaussian_weighted_cloud(std::size_t n, std::size_t dim, std::uint64_t seed,
                                    double sigma, double h = 0.0);

// Round trip through the core space JSON plus the oracle descriptor block.
std::string oracle_space_to_json(const OracleSpace& os);
OracleSpace oracle_space_from_json(const std::string& text);

}  // namespace mmangle
