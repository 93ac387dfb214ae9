#include "mmangle/geodesics.hpp"

#include <algorithm>
#include <cmath>

namespace mmangle {

DiscreteGeodesic shortest_geodesic(const DiscreteMMSpace& s, PointId x, PointId p) {
  s.check_point(x, "shortest_geodesic");
  s.check_point(p, "shortest_geodesic");
  if (x == p) throw SamePoint("shortest_geodesic: endpoints coincide");

  // Walk backward from p using the distance row of x: v precedes u when
  // d(x,v) + w(v,u) == d(x,u). Dijkstra produced d(x,u) as exactly such a
  // sum for at least one neighbor, so with a small relative tolerance the
  // candidate set is never empty; the smallest id wins.
  const double* dx = s.core->row(x);
  const double scale = s.metric_scale;
  const auto* off = s.core->adj_offsets();
  const auto* to = s.core->adj_targets();
  const auto* w = s.core->adj_weights();

  std::vector<PointId> rev{p};
  PointId u = p;
  while (u != x) {
    const double du = dx[u];
    PointId best = u;
    bool have = false;
    for (std::size_t k = off[u]; k < off[u + 1]; ++k) {
      const PointId v = to[k];
      if (dx[v] >= du) continue;
      const double slack = std::abs(dx[v] + w[k] - du);
      if (slack <= 1e-12 * (1.0 + du)) {
        if (!have || v < best) {
          best = v;
          have = true;
        }
      }
    }
    if (!have) throw std::runtime_error("shortest_geodesic: predecessor walk failed");
    rev.push_back(best);
    u = best;
  }
  std::reverse(rev.begin(), rev.end());

  DiscreteGeodesic g;
  g.vertices = std::move(rev);
  g.cumlen.resize(g.vertices.size());
  for (std::size_t i = 0; i < g.vertices.size(); ++i)
    g.cumlen[i] = scale * dx[g.vertices[i]];
  g.speed = g.cumlen.back();
  return g;
}

DiscreteGeodesic constant_geodesic(PointId x) {
  DiscreteGeodesic g;
  g.vertices = {x};
  g.cumlen = {0.0};
  g.speed = 0.0;
  return g;
}

std::size_t geodesic_eval_index(const DiscreteGeodesic& g, double t) {
  if (g.vertices.size() == 1) return 0;
  const double target = t * g.speed;
  auto it = std::lower_bound(g.cumlen.begin(), g.cumlen.end(), target);
  if (it == g.cumlen.end()) return g.cumlen.size() - 1;
  if (it == g.cumlen.begin()) return 0;
  const std::size_t hi = static_cast<std::size_t>(it - g.cumlen.begin());
  const std::size_t lo = hi - 1;
  const double dlo = target - g.cumlen[lo];
  const double dhi = g.cumlen[hi] - target;
  return dlo <= dhi ? lo : hi;  // tie goes to the smaller cumlen
}

PointId geodesic_eval(const DiscreteGeodesic& g, double t) {
  return g.vertices[geodesic_eval_index(g, t)];
}

DiscreteGeodesic geodesic_restrict(const DiscreteGeodesic& g, double T, double h) {
  if (T * g.speed < 2.0 * h)
    throw TooShort("geodesic_restrict: restricted length below 2h");
  const std::size_t idx = geodesic_eval_index(g, T);
  if (idx == 0) throw TooShort("geodesic_restrict: restriction collapses to the start");
  DiscreteGeodesic out;
  out.vertices.assign(g.vertices.begin(), g.vertices.begin() + idx + 1);
  out.cumlen.assign(g.cumlen.begin(), g.cumlen.begin() + idx + 1);
  out.speed = out.cumlen.back();
  return out;
}

ExtensionCertificate is_interior_extendable(const DiscreteMMSpace& s, const DiscreteGeodesic& g,
                                            double margin) {
  const PointId a = g.start();
  const PointId b = g.end();
  const double* da = s.core->row(a);
  const double* db = s.core->row(b);
  const double scale = s.metric_scale;

  ExtensionCertificate best;
  bool have = false;
  for (std::size_t v = 0; v < s.size(); ++v) {
    const double dfrom = scale * da[v];
    if (dfrom < margin) continue;
    const double defect = dfrom + g.speed - scale * db[v];
    if (!have || defect < best.betweenness_defect - 1e-15 ||
        (std::abs(defect - best.betweenness_defect) <= 1e-15 && dfrom > best.dist_from_start)) {
      best.witness = static_cast<PointId>(v);
      best.betweenness_defect = defect;
      best.dist_from_start = dfrom;
      have = true;
    }
  }
  if (have) best.found = best.betweenness_defect <= s.h;
  return best;
}

}  // namespace mmangle
