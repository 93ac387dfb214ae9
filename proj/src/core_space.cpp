#include "mmangle/core_space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include <nlohmann/json.hpp>

#include "mmangle/util.hpp"

namespace mmangle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// (dist, vertex) min-heap entry; lazy deletion
using HeapItem = std::pair<double, PointId>;

}  // namespace

MetricCore::MetricCore(std::size_t n, std::size_t dim, std::vector<double> coords,
                       const std::vector<Edge>& edges, std::size_t dense_threshold)
    : n_(n), dim_(dim), coords_(std::move(coords)), edges_(edges) {
  if (n_ == 0) throw std::invalid_argument("space needs at least one point");
  if (dim_ > 0 && coords_.size() != n_ * dim_)
    throw std::invalid_argument("coords size does not match n*dim");

  min_w_ = kInf;
  std::vector<std::size_t> deg(n_, 0);
  for (const Edge& e : edges_) {
    if (e.u >= n_ || e.v >= n_) throw std::invalid_argument("edge endpoint out of range");
    if (e.u == e.v) throw std::invalid_argument("self-loop edge");
    if (!(e.w > 0.0)) throw NonPositiveWeight("edge weight must be positive");
    min_w_ = std::min(min_w_, e.w);
    ++deg[e.u];
    ++deg[e.v];
  }
  adj_off_.assign(n_ + 1, 0);
  for (std::size_t v = 0; v < n_; ++v) adj_off_[v + 1] = adj_off_[v] + deg[v];
  adj_to_.resize(adj_off_[n_]);
  adj_w_.resize(adj_off_[n_]);
  std::vector<std::size_t> cur(adj_off_.begin(), adj_off_.end() - 1);
  for (const Edge& e : edges_) {
    adj_to_[cur[e.u]] = e.v;
    adj_w_[cur[e.u]++] = e.w;
    adj_to_[cur[e.v]] = e.u;
    adj_w_[cur[e.v]++] = e.w;
  }
  // keep each adjacency list in ascending id order: path extraction and
  // neighborhood listings stay deterministic
  for (std::size_t v = 0; v < n_; ++v) {
    std::vector<std::pair<PointId, double>> nb;
    nb.reserve(deg[v]);
    for (std::size_t k = adj_off_[v]; k < adj_off_[v + 1]; ++k)
      nb.emplace_back(adj_to_[k], adj_w_[k]);
    std::sort(nb.begin(), nb.end());
    for (std::size_t k = adj_off_[v]; k < adj_off_[v + 1]; ++k) {
      adj_to_[k] = nb[k - adj_off_[v]].first;
      adj_w_[k] = nb[k - adj_off_[v]].second;
    }
  }

  // connectivity check (BFS over the undirected graph)
  if (n_ > 1) {
    std::vector<char> seen(n_, 0);
    std::vector<PointId> stack{0};
    seen[0] = 1;
    std::size_t reached = 1;
    while (!stack.empty()) {
      const PointId v = stack.back();
      stack.pop_back();
      for (std::size_t k = adj_off_[v]; k < adj_off_[v + 1]; ++k) {
        const PointId w = adj_to_[k];
        if (!seen[w]) {
          seen[w] = 1;
          ++reached;
          stack.push_back(w);
        }
      }
    }
    if (reached != n_) throw DisconnectedGraph("edge graph is not connected");
  }

  const std::size_t threshold = dense_threshold ? dense_threshold : 800;
  if (n_ <= threshold) {
    dense_ = true;
    dmat_.resize(n_ * n_);
    for (std::size_t p = 0; p < n_; ++p) {
      const auto row = sssp(static_cast<PointId>(p));
      std::copy(row.begin(), row.end(), dmat_.begin() + p * n_);
    }
  }
}

std::vector<double> MetricCore::sssp(PointId src) const {
  std::vector<double> dist(n_, kInf);
  std::priority_queue<HeapItem, std::vector<HeapItem>, std::greater<>> heap;
  dist[src] = 0.0;
  heap.emplace(0.0, src);
  while (!heap.empty()) {
    const auto [d, v] = heap.top();
    heap.pop();
    if (d > dist[v]) continue;
    for (std::size_t k = adj_off_[v]; k < adj_off_[v + 1]; ++k) {
      const PointId w = adj_to_[k];
      const double nd = d + adj_w_[k];
      if (nd < dist[w]) {
        dist[w] = nd;
        heap.emplace(nd, w);
      }
    }
  }
  return dist;
}

const double* MetricCore::row(PointId p) const {
  if (p >= n_) throw std::invalid_argument("row: point out of range");
  if (dense_) return dmat_.data() + static_cast<std::size_t>(p) * n_;
  {
    std::lock_guard<std::mutex> lock(cache_mu_);
    auto it = row_cache_.find(p);
    if (it != row_cache_.end()) return it->second.get();
  }
  auto computed = sssp(p);
  std::lock_guard<std::mutex> lock(cache_mu_);
  auto it = row_cache_.find(p);
  if (it == row_cache_.end()) {
    auto buf = std::make_unique<double[]>(n_);
    std::copy(computed.begin(), computed.end(), buf.get());
    it = row_cache_.emplace(p, std::move(buf)).first;
  }
  return it->second.get();
}

double MetricCore::dist(PointId a, PointId b) const {
  if (a == b) {
    if (a >= n_) throw std::invalid_argument("dist: point out of range");
    return 0.0;
  }
  return row(a)[b];
}

std::vector<std::pair<PointId, double>> MetricCore::within(PointId x, double radius) const {
  if (x >= n_) throw std::invalid_argument("within: point out of range");
  // truncated Dijkstra; exact because shortest paths to points within the
  // radius stay inside the radius ball
  std::unordered_map<PointId, double> dist;
  dist.reserve(64);
  std::priority_queue<HeapItem, std::vector<HeapItem>, std::greater<>> heap;
  dist[x] = 0.0;
  heap.emplace(0.0, x);
  while (!heap.empty()) {
    const auto [d, v] = heap.top();
    heap.pop();
    auto dv = dist.find(v);
    if (dv != dist.end() && d > dv->second) continue;
    for (std::size_t k = adj_off_[v]; k < adj_off_[v + 1]; ++k) {
      const PointId w = adj_to_[k];
      const double nd = d + adj_w_[k];
      if (nd > radius) continue;
      auto it = dist.find(w);
      if (it == dist.end() || nd < it->second) {
        dist[w] = nd;
        heap.emplace(nd, w);
      }
    }
  }
  std::vector<std::pair<PointId, double>> out;
  out.reserve(dist.size());
  for (const auto& [v, d] : dist)
    if (v != x) out.emplace_back(v, d);
  std::sort(out.begin(), out.end());
  return out;
}

double DiscreteMMSpace::total_mass() const {
  double s = 0.0;
  for (double m : measure) s += m;
  return s;
}

std::vector<std::pair<PointId, double>> DiscreteMMSpace::neighbors_within(PointId x,
                                                                          double radius) const {
  auto out = core->within(x, radius / metric_scale);
  for (auto& [v, d] : out) d *= metric_scale;
  return out;
}

void DiscreteMMSpace::check_point(PointId p, const char* what) const {
  if (p >= size()) throw std::invalid_argument(std::string(what) + ": point out of range");
}

DiscreteMMSpace build_from_edges(std::size_t n, std::size_t dim, std::vector<double> coords,
                                 std::vector<Edge> edges, std::vector<double> measure, double h,
                                 std::size_t dense_threshold) {
  if (measure.size() != n) throw std::invalid_argument("measure size does not match n");
  for (double m : measure)
    if (!(m > 0.0)) throw NonPositiveWeight("measure weights must be positive");
  if (!(h > 0.0)) throw std::invalid_argument("h must be positive");

  DiscreteMMSpace s;
  s.core = std::make_shared<MetricCore>(n, dim, std::move(coords), edges, dense_threshold);
  s.measure = std::move(measure);
  s.h = h;
  if (n > 1 && h < 2.0 * s.core->min_edge_weight() - 1e-12)
    throw std::invalid_argument("h below twice the minimal pairwise distance");
  return s;
}

ScalarField distance_field(const DiscreteMMSpace& s, PointId p) {
  s.check_point(p, "distance_field");
  const double* r = s.core->row(p);
  ScalarField f(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) f[i] = s.metric_scale * r[i];
  return f;
}

Ball ball(const DiscreteMMSpace& s, PointId x, double r) {
  s.check_point(x, "ball");
  if (!(r > 0.0)) throw std::invalid_argument("ball radius must be positive");
  Ball b;
  b.center = x;
  b.radius = r;
  b.members.push_back(x);
  for (const auto& [v, d] : s.neighbors_within(x, r))
    if (d < r) b.members.push_back(v);
  return b;
}

DiscreteMMSpace rescale(const DiscreteMMSpace& s, PointId x, double r) {
  s.check_point(x, "rescale");
  if (!(r > 0.0)) throw EmptyBallNormalizer("rescale radius must be positive");
  double window = s.measure[x];  // center contributes with weight 1
  for (const auto& [v, d] : s.neighbors_within(x, r))
    if (d < r) window += (1.0 - d / r) * s.measure[v];
  if (!(window > 0.0)) throw EmptyBallNormalizer("rescale window has no mass");

  DiscreteMMSpace out;
  out.core = s.core;
  out.metric_scale = s.metric_scale / r;
  out.measure.resize(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out.measure[i] = s.measure[i] / window;
  out.h = s.h / r;
  out.basepoint = x;
  return out;
}

std::string space_to_json(const DiscreteMMSpace& s, const std::string& extra_json) {
  nlohmann::ordered_json j;
  j["points"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < s.size(); ++i) {
    nlohmann::ordered_json p;
    p["id"] = i;
    if (s.has_coords()) {
      auto c = nlohmann::ordered_json::array();
      for (std::size_t k = 0; k < s.dim(); ++k) c.push_back(s.coord(static_cast<PointId>(i), k));
      p["coords"] = c;
    }
    p["mass"] = s.measure[i];
    j["points"].push_back(std::move(p));
  }
  j["edges"] = nlohmann::ordered_json::array();
  for (const Edge& e : s.core->edges()) {
    nlohmann::ordered_json je;
    je["u"] = e.u;
    je["v"] = e.v;
    je["w"] = e.w * s.metric_scale;
    j["edges"].push_back(std::move(je));
  }
  j["h"] = s.h;
  if (!extra_json.empty()) j["oracle"] = nlohmann::ordered_json::parse(extra_json);
  return j.dump(1);
}

DiscreteMMSpace space_from_json(const std::string& text, std::string* extra_out) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("space JSON parse error: ") + e.what());
  }
  if (!j.contains("points") || !j.contains("edges") || !j.contains("h"))
    throw std::invalid_argument("space JSON needs points, edges and h");

  const auto& pts = j["points"];
  const std::size_t n = pts.size();
  std::size_t dim = 0;
  if (n > 0 && pts[0].contains("coords")) dim = pts[0]["coords"].size();
  std::vector<double> coords(dim ? n * dim : 0);
  std::vector<double> measure(n);
  std::vector<char> seen(n, 0);
  for (const auto& p : pts) {
    const std::size_t id = p.at("id").get<std::size_t>();
    if (id >= n || seen[id]) throw std::invalid_argument("point ids must be 0..n-1, unique");
    seen[id] = 1;
    measure[id] = p.at("mass").get<double>();
    if (dim) {
      const auto& c = p.at("coords");
      if (c.size() != dim) throw std::invalid_argument("inconsistent coordinate dimension");
      for (std::size_t k = 0; k < dim; ++k) coords[id * dim + k] = c[k].get<double>();
    }
  }
  std::vector<Edge> edges;
  edges.reserve(j["edges"].size());
  for (const auto& e : j["edges"])
    edges.push_back(Edge{e.at("u").get<PointId>(), e.at("v").get<PointId>(),
                         e.at("w").get<double>()});
  if (extra_out) *extra_out = j.contains("oracle") ? j["oracle"].dump() : "";
  return build_from_edges(n, dim, std::move(coords), std::move(edges), std::move(measure),
                          j["h"].get<double>());
}

}  // namespace mmangle
