#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace mmangle {

// Index into the point set of the owning space.
using PointId = std::uint32_t;

// One value per point of the owning space, in point order.
using ScalarField = std::vector<double>;

struct DisconnectedGraph : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NonPositiveWeight : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EmptyBallNormalizer : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Edge {
  PointId u, v;
  double w;
};

// Open metric ball: members hold every y with d(center, y) < radius,
// center first, the rest in ascending id order.
struct Ball {
  PointId center = 0;
  double radius = 0.0;
  std::vector<PointId> members;
};

// Immutable metric data shared across rescalings of the same point set.
// Distances are completed shortest-path distances over the edge graph.
// Small cores keep the full matrix; larger ones compute rows on demand
// (per-source Dijkstra) and cache them. Queries are safe to run
// concurrently; the row cache is guarded internally.
class MetricCore {
 public:
  MetricCore(std::size_t n, std::size_t dim, std::vector<double> coords,
             const std::vector<Edge>& edges, std::size_t dense_threshold);

  std::size_t n() const { return n_; }
  std::size_t dim() const { return dim_; }
  bool has_coords() const { return dim_ > 0; }
  double coord(PointId i, std::size_t k) const { return coords_[i * dim_ + k]; }
  const std::vector<double>& coords() const { return coords_; }
  double min_edge_weight() const { return min_w_; }
  const std::vector<Edge>& edges() const { return edges_; }

  double dist(PointId a, PointId b) const;
  // Full distance row from p; the pointer stays valid for the core's lifetime.
  const double* row(PointId p) const;
  // All y != x with d(x, y) <= radius, ascending id. Exact: a shortest path
  // between points at distance <= r never leaves the radius-r ball around x.
  std::vector<std::pair<PointId, double>> within(PointId x, double radius) const;

  // adjacency in CSR form (symmetric, both directions stored)
  std::size_t degree(PointId v) const { return adj_off_[v + 1] - adj_off_[v]; }
  const std::size_t* adj_offsets() const { return adj_off_.data(); }
  const PointId* adj_targets() const { return adj_to_.data(); }
  const double* adj_weights() const { return adj_w_.data(); }

 private:
  std::vector<double> sssp(PointId src) const;

  std::size_t n_;
  std::size_t dim_;
  std::vector<double> coords_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> adj_off_;
  std::vector<PointId> adj_to_;
  std::vector<double> adj_w_;
  double min_w_ = 0.0;
  bool dense_ = false;
  std::vector<double> dmat_;
  mutable std::mutex cache_mu_;
  mutable std::unordered_map<PointId, std::unique_ptr<double[]>> row_cache_;
};

// A finite metric measure space with a neighborhood scale h.
//
// Invariants: the metric is the completed shortest-path metric of the build
// graph (scaled by metric_scale for rescaled views), every measure weight is
// positive, and h >= twice the minimal nonzero pairwise distance so each
// point has a neighbor within scale. Instances are immutable after build.
class DiscreteMMSpace {
 public:
  std::shared_ptr<const MetricCore> core;
  double metric_scale = 1.0;  // multiplies every core distance and edge weight
  std::vector<double> measure;
  double h = 0.0;
  std::optional<PointId> basepoint;

  std::size_t size() const { return core->n(); }
  double dist(PointId a, PointId b) const { return metric_scale * core->dist(a, b); }
  bool has_coords() const { return core->has_coords(); }
  std::size_t dim() const { return core->dim(); }
  double coord(PointId i, std::size_t k) const { return core->coord(i, k); }
  double total_mass() const;

  // neighbors with 0 < d(x,y) <= radius, ascending id, distances in the
  // space's (scaled) metric
  std::vector<std::pair<PointId, double>> neighbors_within(PointId x, double radius) const;

  void check_point(PointId p, const char* what) const;
};

// Validates weights/measure, completes the metric, checks connectivity and
// the h invariant. coords may be empty (dim 0). dense_threshold picks matrix
// vs on-demand storage; pass 0 for the default.
DiscreteMMSpace build_from_edges(std::size_t n, std::size_t dim, std::vector<double> coords,
                                 std::vector<Edge> edges, std::vector<double> measure, double h,
                                 std::size_t dense_threshold = 0);

// d(p, .) as a field.
ScalarField distance_field(const DiscreteMMSpace& s, PointId p);

Ball ball(const DiscreteMMSpace& s, PointId x, double r);

// Blow-up view at x with factor 1/r: distances and h divided by r, measure
// divided by the window sum(y in B_r(x)) (1 - d(y,x)/r) m(y). Shares the
// metric core with the input, so composing rescales composes the factors
// exactly. Coordinates, if any, stay in the base embedding.
DiscreteMMSpace rescale(const DiscreteMMSpace& s, PointId x, double r);

// JSON round trip. Serializes points (id, mass, optional coords), edges, h
// and optional extras; never the distance matrix, which is rebuilt on load.
std::string space_to_json(const DiscreteMMSpace& s, const std::string& extra_json = "");
DiscreteMMSpace space_from_json(const std::string& text, std::string* extra_out = nullptr);

}  // namespace mmangle
