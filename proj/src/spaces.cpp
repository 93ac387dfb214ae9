#include "mmangle/spaces.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "mmangle/util.hpp"

namespace mmangle {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<Edge> radius_edges(std::size_t n, double h,
                               const std::function<double(PointId, PointId)>& d) {
  std::vector<Edge> edges;
  for (PointId i = 0; i < n; ++i) {
    for (PointId j = i + 1; j < n; ++j) {
      double w = d(i, j);
      if (w <= h && w > 0.0) edges.push_back({i, j, w});
    }
  }
  return edges;
}

// Builds with automatic radius growth: a sparse draw can disconnect, in
// which case h is grown by 1.3x (at most 6 times) and edges are recomputed.
DiscreteMMSpace build_with_growth(std::size_t n, std::size_t dim, std::vector<double> coords,
                                  std::vector<double> measure, double& h,
                                  const std::function<double(PointId, PointId)>& d) {
  for (int attempt = 0;; ++attempt) {
    try {
      return build_from_edges(n, dim, coords, radius_edges(n, h, d), measure, h);
    } catch (const DisconnectedGraph&) {
      if (attempt >= 6) throw;
      h *= 1.3;
    }
  }
}

double euclid(const std::vector<double>& c, std::size_t dim, PointId a, PointId b) {
  double s = 0.0;
  for (std::size_t k = 0; k < dim; ++k) {
    double t = c[a * dim + k] - c[b * dim + k];
    s += t * t;
  }
  return std::sqrt(s);
}

double great_circle(const std::vector<double>& c, PointId a, PointId b) {
  const double* u = &c[a * 3];
  const double* v = &c[b * 3];
  double dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
  double cx = u[1] * v[2] - u[2] * v[1];
  double cy = u[2] * v[0] - u[0] * v[2];
  double cz = u[0] * v[1] - u[1] * v[0];
  return std::atan2(std::sqrt(cx * cx + cy * cy + cz * cz), dot);
}

// Flat cone metric in the intrinsic polar chart; alpha is the total angle.
double cone_dist(const std::vector<double>& c, double alpha, PointId a, PointId b) {
  double r1 = c[a * 2], t1 = c[a * 2 + 1];
  double r2 = c[b * 2], t2 = c[b * 2 + 1];
  if (r1 == 0.0 || r2 == 0.0) return r1 + r2;
  double dt = std::fabs(t1 - t2);
  dt = std::min(dt, alpha - dt);
  if (dt >= kPi) return r1 + r2;
  return std::sqrt(std::max(0.0, r1 * r1 + r2 * r2 - 2.0 * r1 * r2 * std::cos(dt)));
}

double clamp1(double v) { return std::min(1.0, std::max(-1.0, v)); }

double vec_angle(const std::vector<double>& u, const std::vector<double>& v) {
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    dot += u[k] * v[k];
    nu += u[k] * u[k];
    nv += v[k] * v[k];
  }
  return std::acos(clamp1(dot / std::sqrt(nu * nv)));
}

std::vector<double> euclid_dir(const DiscreteMMSpace& s, PointId x, PointId t) {
  std::vector<double> v(s.dim());
  for (std::size_t k = 0; k < s.dim(); ++k) v[k] = s.coord(t, k) - s.coord(x, k);
  return v;
}

// Tangent direction at x toward t on the unit sphere (projection of the
// chord onto the tangent plane). Near-zero for t equal or antipodal to x.
std::vector<double> sphere_dir(const DiscreteMMSpace& s, PointId x, PointId t) {
  std::vector<double> v(3);
  double dot = 0.0;
  for (std::size_t k = 0; k < 3; ++k) dot += s.coord(t, k) * s.coord(x, k);
  for (std::size_t k = 0; k < 3; ++k) v[k] = s.coord(t, k) - dot * s.coord(x, k);
  return v;
}

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// Initial direction at x toward t on a cone of total angle alpha, in the
// chart developed around x (x sits at (r_x, 0)). When the geodesic passes
// through the apex the direction points at the origin.
std::vector<double> cone_dir(const DiscreteMMSpace& s, double alpha, PointId x, PointId t) {
  double rx = s.coord(x, 0);
  double rt = s.coord(t, 0);
  double so = s.coord(t, 1) - s.coord(x, 1);
  so = std::fmod(so, alpha);
  if (so <= -alpha / 2.0) so += alpha;
  if (so > alpha / 2.0) so -= alpha;
  std::vector<double> dev(2, 0.0);
  if (rt > 0.0 && std::fabs(so) < kPi) {
    dev[0] = rt * std::cos(so);
    dev[1] = rt * std::sin(so);
  }
  return {dev[0] - rx, dev[1]};
}

// First graph neighbor of x on the (unique) tree geodesic toward p.
PointId tree_first_step(const MetricCore& c, PointId x, PointId p) {
  const double* dp = c.row(p);
  const std::size_t* off = c.adj_offsets();
  const PointId* to = c.adj_targets();
  const double* w = c.adj_weights();
  PointId best = x;
  for (std::size_t e = off[x]; e < off[x + 1]; ++e) {
    if (std::fabs(w[e] + dp[to[e]] - dp[x]) <= 1e-9 * (1.0 + dp[x])) {
      if (best == x || to[e] < best) best = to[e];
    }
  }
  if (best == x) throw std::logic_error("tree geodesic first step not found");
  return best;
}

std::string num_tag(double v) {
  std::string s = format_double(v);
  for (char& ch : s)
    if (ch == '.' || ch == '-' || ch == '+') ch = '_';
  return s;
}

}  // namespace

bool OracleSpace::oracle_defined(PointId p, PointId x, PointId q) const {
  if (p >= space.size() || x >= space.size() || q >= space.size()) return false;
  if (p == x || q == x) return false;
  if (kind == "cone_cloud") {
    if (space.coord(x, 0) == 0.0) return false;  // no tangent frame at the apex
    if (norm2(cone_dir(space, alpha, x, p)) < 1e-12) return false;
    if (norm2(cone_dir(space, alpha, x, q)) < 1e-12) return false;
  }
  if (kind == "sphere_cloud") {
    // undefined when a pole coincides with x or its antipode
    if (norm2(sphere_dir(space, x, p)) < 1e-9) return false;
    if (norm2(sphere_dir(space, x, q)) < 1e-9) return false;
  }
  return true;
}

double OracleSpace::oracle_angle(PointId p, PointId x, PointId q) const {
  if (!oracle_defined(p, x, q)) throw std::domain_error("oracle angle undefined at this triple");
  if (kind == "euclidean_cloud" || kind == "euclidean_grid" || kind == "gaussian_weighted_cloud") {
    return vec_angle(euclid_dir(space, x, p), euclid_dir(space, x, q));
  }
  if (kind == "sphere_cloud") {
    return vec_angle(sphere_dir(space, x, p), sphere_dir(space, x, q));
  }
  if (kind == "cone_cloud") {
    return vec_angle(cone_dir(space, alpha, x, p), cone_dir(space, alpha, x, q));
  }
  if (kind == "metric_tree") {
    if (p == q) return 0.0;
    return tree_first_step(*space.core, x, p) == tree_first_step(*space.core, x, q) ? 0.0 : kPi;
  }
  throw std::logic_error("unknown space kind: " + kind);
}

std::string OracleSpace::descriptor_json() const {
  nlohmann::ordered_json j;
  j["kind"] = kind;
  j["id"] = id;
  j["K"] = K;
  if (std::isinf(N))
    j["N"] = "inf";
  else
    j["N"] = N;
  if (kind == "cone_cloud") j["alpha"] = alpha;
  return j.dump();
}

OracleSpace euclidean_cloud(std::size_t n, std::size_t dim, std::uint64_t seed, double h) {
  if (n < 2 || dim == 0) throw std::invalid_argument("euclidean_cloud: need n >= 2, dim >= 1");
  Rng rng(seed);
  std::vector<double> coords(n * dim);
  for (double& c : coords) c = rng.next_double();
  if (h <= 0.0) h = 2.0 * std::pow(std::log(double(n)) / double(n), 1.0 / double(dim));
  OracleSpace os;
  os.space = build_with_growth(n, dim, coords, std::vector<double>(n, 1.0 / double(n)), h,
                               [&](PointId a, PointId b) { return euclid(coords, dim, a, b); });
  os.kind = "euclidean_cloud";
  os.K = 0.0;
  os.N = double(dim);
  os.id = "euclidean_cloud-n" + std::to_string(n) + "-d" + std::to_string(dim) + "-s" +
          std::to_string(seed);
  return os;
}

OracleSpace euclidean_grid(std::size_t nx, std::size_t ny, double spacing, double ox, double oy) {
  if (nx < 2 || ny < 2 || spacing <= 0.0)
    throw std::invalid_argument("euclidean_grid: need nx, ny >= 2 and spacing > 0");
  std::size_t n = nx * ny;
  std::vector<double> coords(n * 2);
  for (std::size_t iy = 0; iy < ny; ++iy)
    for (std::size_t ix = 0; ix < nx; ++ix) {
      std::size_t id = iy * nx + ix;
      coords[id * 2] = ox + double(ix) * spacing;
      coords[id * 2 + 1] = oy + double(iy) * spacing;
    }
  // all lattice offsets of norm <= 2.5 (one representative per +-pair)
  static const int offs[][2] = {{1, 0},  {0, 1},  {1, 1},  {1, -1}, {2, 0},
                                {0, 2},  {2, 1},  {2, -1}, {1, 2},  {1, -2}};
  std::vector<Edge> edges;
  for (std::size_t iy = 0; iy < ny; ++iy)
    for (std::size_t ix = 0; ix < nx; ++ix)
      for (const auto& o : offs) {
        long jx = long(ix) + o[0], jy = long(iy) + o[1];
        if (jx < 0 || jy < 0 || jx >= long(nx) || jy >= long(ny)) continue;
        PointId u = PointId(iy * nx + ix), v = PointId(std::size_t(jy) * nx + std::size_t(jx));
        double w = spacing * std::sqrt(double(o[0] * o[0] + o[1] * o[1]));
        edges.push_back({std::min(u, v), std::max(u, v), w});
      }
  double h = 2.5 * spacing;
  OracleSpace os;
  os.space = build_from_edges(n, 2, std::move(coords), std::move(edges),
                              std::vector<double>(n, spacing * spacing), h);
  os.kind = "euclidean_grid";
  os.K = 0.0;
  os.N = 2.0;
  os.id = "euclidean_grid-" + std::to_string(nx) + "x" + std::to_string(ny) + "-s" +
          num_tag(spacing);
  return os;
}

OracleSpace sphere_cloud(std::size_t n, std::uint64_t seed, double h) {
  if (n < 2) throw std::invalid_argument("sphere_cloud: need n >= 2");
  Rng rng(seed);
  std::vector<double> coords(n * 3);
  for (std::size_t i = 0; i < n; ++i) {
    double x, y, z, r;
    do {
      x = rng.normal();
      y = rng.normal();
      z = rng.normal();
      r = std::sqrt(x * x + y * y + z * z);
    } while (r < 1e-6);
    coords[i * 3] = x / r;
    coords[i * 3 + 1] = y / r;
    coords[i * 3 + 2] = z / r;
  }
  if (h <= 0.0) h = 4.0 * std::sqrt(std::log(double(n)) / double(n));
  OracleSpace os;
  os.space = build_with_growth(n, 3, coords, std::vector<double>(n, 1.0 / double(n)), h,
                               [&](PointId a, PointId b) { return great_circle(coords, a, b); });
  os.kind = "sphere_cloud";
  os.K = 1.0;
  os.N = 2.0;
  os.id = "sphere_cloud-n" + std::to_string(n) + "-s" + std::to_string(seed);
  return os;
}

OracleSpace cone_cloud(double alpha, std::size_t n, std::uint64_t seed, double h) {
  if (!(alpha > 0.0) || alpha > 4.0 * kPi)
    throw std::invalid_argument("cone_cloud: need total angle in (0, 4pi]");
  if (n < 2) throw std::invalid_argument("cone_cloud: need n >= 2");
  Rng rng(seed);
  std::vector<double> coords(n * 2, 0.0);  // point 0 is the apex
  for (std::size_t i = 1; i < n; ++i) {
    coords[i * 2] = std::sqrt(rng.next_double());  // area-uniform radius
    coords[i * 2 + 1] = alpha * rng.next_double();
  }
  if (h <= 0.0) h = 2.5 * std::sqrt((alpha / 2.0) * std::log(double(n)) / (kPi * double(n)));
  OracleSpace os;
  os.space =
      build_with_growth(n, 2, coords, std::vector<double>(n, 1.0 / double(n)), h,
                        [&](PointId a, PointId b) { return cone_dist(coords, alpha, a, b); });
  os.kind = "cone_cloud";
  os.K = 0.0;
  os.N = 2.0;
  os.alpha = alpha;
  os.id = "cone_cloud-a" + num_tag(alpha) + "-n" + std::to_string(n) + "-s" + std::to_string(seed);
  return os;
}

OracleSpace metric_tree(const std::vector<TreeEdge>& tedges, double step) {
  if (tedges.empty()) throw std::invalid_argument("metric_tree: need at least one edge");
  if (step <= 0.0) throw std::invalid_argument("metric_tree: need step > 0");
  std::size_t nodes = 0;
  for (const auto& e : tedges) nodes = std::max({nodes, e.a + 1, e.b + 1});
  std::vector<Edge> edges;
  std::size_t next = nodes;
  double max_seg = 0.0;
  for (const auto& e : tedges) {
    if (e.a == e.b || !(e.len > 0.0)) throw std::invalid_argument("metric_tree: bad edge");
    auto k = std::size_t(std::ceil(e.len / step - 1e-9));
    double seg = e.len / double(k);
    max_seg = std::max(max_seg, seg);
    PointId prev = PointId(e.a);
    for (std::size_t i = 1; i < k; ++i) {
      edges.push_back({prev, PointId(next), seg});
      prev = PointId(next++);
    }
    edges.push_back({prev, PointId(e.b), seg});
  }
  std::size_t n = next;
  OracleSpace os;
  os.space = build_from_edges(n, 0, {}, std::move(edges), std::vector<double>(n, 1.0 / double(n)),
                              2.0 * max_seg);
  os.kind = "metric_tree";
  os.K = 0.0;
  os.N = 1.0;
  os.id = "metric_tree-n" + std::to_string(nodes) + "-e" + std::to_string(tedges.size());
  return os;
}

OracleSpace gaussian_weighted_cloud(std::size_t n, std::size_t dim, std::uint64_t seed,
                                    double sigma, double h) {
  if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_weighted_cloud: need sigma > 0");
  if (n < 2 || dim == 0)
    throw std::invalid_argument("gaussian_weighted_cloud: need n >= 2, dim >= 1");
  Rng rng(seed);
  std::vector<double> coords(n * dim);
  for (double& c : coords) c = rng.next_double();
  std::vector<double> measure(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double r2 = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
      double t = coords[i * dim + k] - 0.5;
      r2 += t * t;
    }
    measure[i] = std::exp(-r2 / (2.0 * sigma * sigma));
    total += measure[i];
  }
  for (double& m : measure) m /= total;
  if (h <= 0.0) h = 2.0 * std::pow(std::log(double(n)) / double(n), 1.0 / double(dim));
  OracleSpace os;
  os.space = build_with_growth(n, dim, coords, std::move(measure), h,
                               [&](PointId a, PointId b) { return euclid(coords, dim, a, b); });
  os.kind = "gaussian_weighted_cloud";
  os.K = 1.0 / (sigma * sigma);
  os.N = std::numeric_limits<double>::infinity();
  os.id = "gauss_cloud-n" + std::to_string(n) + "-d" + std::to_string(dim) + "-s" +
          std::to_string(seed) + "-sig" + num_tag(sigma);
  return os;
}

std::string oracle_space_to_json(const OracleSpace& os) {
  return space_to_json(os.space, os.descriptor_json());
}

OracleSpace oracle_space_from_json(const std::string& text) {
  OracleSpace os;
  std::string extra;
  os.space = space_from_json(text, &extra);
  if (extra.empty()) throw std::invalid_argument("oracle_space_from_json: missing descriptor");
  auto j = nlohmann::json::parse(extra);
  os.kind = j.at("kind").get<std::string>();
  os.id = j.at("id").get<std::string>();
  os.K = j.at("K").get<double>();
  if (j.at("N").is_string())
    os.N = std::numeric_limits<double>::infinity();
  else
    os.N = j.at("N").get<double>();
  if (j.contains("alpha")) os.alpha = j["alpha"].get<double>();
  static const char* kinds[] = {"euclidean_cloud", "euclidean_grid",  "sphere_cloud",
                                "cone_cloud",      "metric_tree",     "gaussian_weighted_cloud"};
  if (std::find_if(std::begin(kinds), std::end(kinds),
                   [&](const char* k) { return os.kind == k; }) == std::end(kinds))
    throw std::invalid_argument("oracle_space_from_json: unknown kind " + os.kind);
  if (os.kind != "metric_tree" && !os.space.has_coords())
    throw std::invalid_argument("oracle_space_from_json: kind requires coordinates");
  return os;
}

}  // namespace mmangle
