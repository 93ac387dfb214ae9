#include "mmangle/wasserstein.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>

#include "mmangle/util.hpp"

namespace mmangle {

namespace {

constexpr double kMassTol = 1e-12;
constexpr double kDualTol = 1e-9;

double clamp_unit(double v, double* excess = nullptr) {
  double c = std::min(1.0, std::max(-1.0, v));
  if (excess) *excess = std::fabs(v - c);
  return c;
}

// ---- transportation simplex ----------------------------------------------
//
// Minimizes sum f_ij C_ij subject to the transportation constraints, exact
// up to floating point. The basis is kept as a spanning tree over the m + k
// bipartite nodes; duals are recomputed from the tree each pivot (O(m+k),
// cheap next to the O(mk) entering scan). Dantzig pricing with a switch to
// Bland's rule after a pivot budget guarantees termination on degenerate
// instances.
struct SimplexArc {
  int i, j;
  double flow;
};

struct SimplexResult {
  std::vector<SimplexArc> basis;
  std::vector<double> u, v;
};

SimplexResult transport_simplex(std::size_t m, std::size_t k, const std::vector<double>& a,
                                const std::vector<double>& b, const std::vector<double>& C) {
  std::size_t nodes = m + k;
  std::vector<SimplexArc> basis;
  basis.reserve(nodes - 1);

  // northwest-corner start: advances exactly one side per step, so the
  // basis has m + k - 1 arcs including degenerate zero-flow ones
  {
    std::vector<double> ra = a, rb = b;
    std::size_t i = 0, j = 0;
    while (true) {
      double f = std::min(ra[i], rb[j]);
      basis.push_back({int(i), int(j), f});
      ra[i] -= f;
      rb[j] -= f;
      bool ilast = i + 1 == m, jlast = j + 1 == k;
      if (ilast && jlast) break;
      if (!ilast && (ra[i] <= rb[j] || jlast))
        ++i;
      else
        ++j;
    }
    if (basis.size() != nodes - 1) throw SolverFailure("degenerate initialization");
  }

  // adjacency of the basis tree: node -> (other node, arc index)
  std::vector<std::vector<std::pair<int, int>>> adj(nodes);
  auto arc_nodes = [&](const SimplexArc& e) {
    return std::pair<int, int>(e.i, int(m) + e.j);
  };
  for (std::size_t id = 0; id < basis.size(); ++id) {
    auto [x, y] = arc_nodes(basis[id]);
    adj[x].push_back({y, int(id)});
    adj[y].push_back({x, int(id)});
  }
  auto adj_remove = [&](int node, int arc) {
    auto& l = adj[node];
    l.erase(std::find_if(l.begin(), l.end(), [&](auto& p) { return p.second == arc; }));
  };

  std::vector<double> u(m), v(k);
  std::vector<char> seen(nodes);
  std::vector<int> stack, parent_node(nodes), parent_arc(nodes);

  auto compute_duals = [&]() {
    std::fill(seen.begin(), seen.end(), 0);
    stack.assign(1, 0);
    seen[0] = 1;
    u[0] = 0.0;
    std::size_t visited = 1;
    while (!stack.empty()) {
      int x = stack.back();
      stack.pop_back();
      for (auto [y, id] : adj[x]) {
        if (seen[y]) continue;
        seen[y] = 1;
        ++visited;
        const SimplexArc& e = basis[id];
        double c = C[std::size_t(e.i) * k + std::size_t(e.j)];
        if (y >= int(m))
          v[std::size_t(y) - m] = c - u[std::size_t(e.i)];
        else
          u[std::size_t(y)] = c - v[std::size_t(e.j)];
        stack.push_back(y);
      }
    }
    if (visited != nodes) throw SolverFailure("basis tree disconnected");
  };

  double cmax = 0.0;
  for (double c : C) cmax = std::max(cmax, std::fabs(c));
  const double rc_tol = 1e-12 * (1.0 + cmax);
  const std::size_t bland_after = 40 * nodes + 400;
  const std::size_t max_iter = 2000 * nodes + 20000;

  for (std::size_t iter = 0;; ++iter) {
    if (iter > max_iter) throw SolverFailure("pivot budget exhausted");
    compute_duals();

    int ei = -1, ej = -1;
    bool bland = iter > bland_after;
    double best = -rc_tol;
    for (std::size_t i = 0; i < m && (!bland || ei < 0); ++i) {
      const double* Ci = &C[i * k];
      for (std::size_t j = 0; j < k; ++j) {
        double rc = Ci[j] - u[i] - v[j];
        if (rc < best) {
          best = rc;
          ei = int(i);
          ej = int(j);
          if (bland) break;
        }
      }
    }
    if (ei < 0) break;  // optimal

    // tree path from the entering source to the entering sink
    std::fill(seen.begin(), seen.end(), 0);
    stack.assign(1, ei);
    seen[std::size_t(ei)] = 1;
    parent_node[std::size_t(ei)] = -1;
    int goal = int(m) + ej;
    while (!stack.empty()) {
      int x = stack.back();
      stack.pop_back();
      if (x == goal) break;
      for (auto [y, id] : adj[x]) {
        if (seen[y]) continue;
        seen[y] = 1;
        parent_node[std::size_t(y)] = x;
        parent_arc[std::size_t(y)] = id;
        stack.push_back(y);
      }
    }
    if (!seen[std::size_t(goal)]) throw SolverFailure("entering arc closed no cycle");

    // walking sink -> source, path arcs alternate -, +, -, ... (the
    // entering arc itself is the + closing the cycle)
    double theta = std::numeric_limits<double>::infinity();
    int leave = -1;
    {
      bool minus = true;
      for (int x = goal; parent_node[std::size_t(x)] >= 0; x = parent_node[std::size_t(x)]) {
        int id = parent_arc[std::size_t(x)];
        if (minus) {
          const SimplexArc& e = basis[std::size_t(id)];
          if (e.flow < theta - 1e-15 ||
              (e.flow <= theta + 1e-15 &&
               (leave < 0 || std::pair(e.i, e.j) < std::pair(basis[std::size_t(leave)].i,
                                                             basis[std::size_t(leave)].j)))) {
            theta = std::min(theta, e.flow);
            leave = id;
          }
        }
        minus = !minus;
      }
    }
    if (leave < 0) throw SolverFailure("unbounded pivot");

    {
      bool minus = true;
      for (int x = goal; parent_node[std::size_t(x)] >= 0; x = parent_node[std::size_t(x)]) {
        basis[std::size_t(parent_arc[std::size_t(x)])].flow += minus ? -theta : theta;
        minus = !minus;
      }
    }
    auto [lx, ly] = arc_nodes(basis[std::size_t(leave)]);
    adj_remove(lx, leave);
    adj_remove(ly, leave);
    basis[std::size_t(leave)] = {ei, ej, theta};
    auto [nx, ny] = arc_nodes(basis[std::size_t(leave)]);
    adj[nx].push_back({ny, leave});
    adj[ny].push_back({nx, leave});
  }

  compute_duals();
  return {std::move(basis), std::move(u), std::move(v)};
}

}  // namespace

ProbMeasure dirac(PointId p) { return {{p}, {1.0}}; }

ProbMeasure uniform_on(std::vector<PointId> pts) {
  if (pts.empty()) throw std::invalid_argument("uniform_on: empty support");
  std::sort(pts.begin(), pts.end());
  if (std::adjacent_find(pts.begin(), pts.end()) != pts.end())
    throw std::invalid_argument("uniform_on: duplicate point");
  std::size_t n = pts.size();
  return {std::move(pts), std::vector<double>(n, 1.0 / double(n))};
}

ProbMeasure restrict_measure(const DiscreteMMSpace& s, const Ball& B) {
  if (B.members.empty()) throw std::invalid_argument("restrict_measure: empty ball");
  ProbMeasure mu;
  mu.support = B.members;
  std::sort(mu.support.begin(), mu.support.end());
  double total = 0.0;
  for (PointId y : mu.support) total += s.measure[y];
  for (PointId y : mu.support) mu.mass.push_back(s.measure[y] / total);
  return mu;
}

void validate_measure(const DiscreteMMSpace& s, const ProbMeasure& mu) {
  if (mu.support.empty() || mu.support.size() != mu.mass.size())
    throw std::invalid_argument("measure: empty or mismatched support");
  double total = 0.0;
  for (std::size_t i = 0; i < mu.support.size(); ++i) {
    s.check_point(mu.support[i], "measure support");
    if (i > 0 && mu.support[i] <= mu.support[i - 1])
      throw std::invalid_argument("measure: support not strictly ascending");
    if (!(mu.mass[i] > 0.0)) throw std::invalid_argument("measure: nonpositive mass");
    total += mu.mass[i];
  }
  if (std::fabs(total - 1.0) > kMassTol)
    throw std::invalid_argument("measure: total mass " + format_double(total));
}

OTResult solve_ot(const DiscreteMMSpace& s, const ProbMeasure& mu, const ProbMeasure& nu) {
  validate_measure(s, mu);
  validate_measure(s, nu);
  std::size_t m = mu.support.size(), k = nu.support.size();
  if (m * k > std::size_t(4e6)) throw SolverFailure("support product too large");

  // distance block from rows of the smaller side (the metric is symmetric)
  std::vector<double> D(m * k);
  double ms = s.metric_scale;
  if (m <= k) {
    for (std::size_t i = 0; i < m; ++i) {
      const double* r = s.core->row(mu.support[i]);
      for (std::size_t j = 0; j < k; ++j) D[i * k + j] = ms * r[nu.support[j]];
    }
  } else {
    for (std::size_t j = 0; j < k; ++j) {
      const double* r = s.core->row(nu.support[j]);
      for (std::size_t i = 0; i < m; ++i) D[i * k + j] = ms * r[mu.support[i]];
    }
  }
  std::vector<double> C(m * k);
  for (std::size_t t = 0; t < m * k; ++t) C[t] = 0.5 * D[t] * D[t];

  SimplexResult sr = transport_simplex(m, k, mu.mass, nu.mass, C);

  double primal = 0.0, cost_d2 = 0.0;
  for (const auto& e : sr.basis) {
    primal += e.flow * C[std::size_t(e.i) * k + std::size_t(e.j)];
    cost_d2 += e.flow * D[std::size_t(e.i) * k + std::size_t(e.j)] *
               D[std::size_t(e.i) * k + std::size_t(e.j)];
  }
  double dual = 0.0;
  for (std::size_t i = 0; i < m; ++i) dual += mu.mass[i] * sr.u[i];
  for (std::size_t j = 0; j < k; ++j) dual += nu.mass[j] * sr.v[j];
  double gap = primal - dual;

  double feas = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < k; ++j) feas = std::max(feas, sr.u[i] + sr.v[j] - C[i * k + j]);
  double slack = 0.0;
  for (const auto& e : sr.basis)
    if (e.flow > 1e-15)
      slack = std::max(slack, std::fabs(sr.u[std::size_t(e.i)] + sr.v[std::size_t(e.j)] -
                                        C[std::size_t(e.i) * k + std::size_t(e.j)]));
  double tol = kDualTol * (1.0 + std::fabs(primal));
  if (std::fabs(gap) > tol || feas > tol || slack > tol)
    throw SolverFailure("optimality certificate failed: gap " + format_double(gap) + ", feas " +
                        format_double(feas) + ", slackness " + format_double(slack));

  OTResult out;
  for (const auto& e : sr.basis)
    if (e.flow > 1e-15)
      out.plan.entries.push_back(
          {mu.support[std::size_t(e.i)], nu.support[std::size_t(e.j)], e.flow});
  std::sort(out.plan.entries.begin(), out.plan.entries.end(), [](const auto& l, const auto& r) {
    return std::pair(l.from, l.to) < std::pair(r.from, r.to);
  });
  out.plan.cost = cost_d2;
  out.w2 = std::sqrt(std::max(0.0, cost_d2));

  // c-transform extension off the supports; support points keep the exact
  // simplex duals (the extension matches them there up to roundoff)
  std::size_t n = s.size();
  PotentialPair& pot = out.pot;
  pot.phi.assign(n, std::numeric_limits<double>::infinity());
  pot.psi.assign(n, std::numeric_limits<double>::infinity());
  for (std::size_t j = 0; j < k; ++j) {
    const double* r = s.core->row(nu.support[j]);
    for (std::size_t z = 0; z < n; ++z) {
      double d = ms * r[z];
      pot.phi[z] = std::min(pot.phi[z], 0.5 * d * d - sr.v[j]);
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    const double* r = s.core->row(mu.support[i]);
    for (std::size_t z = 0; z < n; ++z) {
      double d = ms * r[z];
      pot.psi[z] = std::min(pot.psi[z], 0.5 * d * d - sr.u[i]);
    }
  }
  for (std::size_t i = 0; i < m; ++i) pot.phi[mu.support[i]] = sr.u[i];
  for (std::size_t j = 0; j < k; ++j) pot.psi[nu.support[j]] = sr.v[j];
  pot.dual_value = dual;
  pot.gap = gap;
  return out;
}

double plan_marginal_defect(const TransportPlan& plan, const ProbMeasure& mu,
                            const ProbMeasure& nu) {
  std::map<PointId, double> row, col;
  for (const auto& e : plan.entries) {
    if (e.mass < 0.0) return std::numeric_limits<double>::infinity();
    row[e.from] += e.mass;
    col[e.to] += e.mass;
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < mu.support.size(); ++i) {
    worst = std::max(worst, std::fabs(row[mu.support[i]] - mu.mass[i]));
    row.erase(mu.support[i]);
  }
  for (std::size_t j = 0; j < nu.support.size(); ++j) {
    worst = std::max(worst, std::fabs(col[nu.support[j]] - nu.mass[j]));
    col.erase(nu.support[j]);
  }
  for (const auto& [p, v] : row) worst = std::max(worst, std::fabs(v));
  for (const auto& [p, v] : col) worst = std::max(worst, std::fabs(v));
  return worst;
}

ProbMeasure displacement_interpolation(const DiscreteMMSpace& s, const TransportPlan& plan,
                                       double t) {
  if (t < 0.0 || t > 1.0) throw std::invalid_argument("interpolation time outside [0,1]");
  std::map<PointId, double> acc;
  for (const auto& e : plan.entries) {
    PointId at;
    if (e.from == e.to || t == 0.0)
      at = t == 1.0 ? e.to : e.from;
    else if (t == 1.0)
      at = e.to;
    else
      at = geodesic_eval(shortest_geodesic(s, e.from, e.to), t);
    acc[at] += e.mass;
  }
  ProbMeasure out;
  for (const auto& [p, v] : acc) {
    out.support.push_back(p);
    out.mass.push_back(v);
  }
  return out;
}

DynamicalPlan lift_to_dynamical_plan(const DiscreteMMSpace& s, const TransportPlan& plan) {
  DynamicalPlan out;
  for (const auto& e : plan.entries)
    out.atoms.emplace_back(
        e.from == e.to ? constant_geodesic(e.from) : shortest_geodesic(s, e.from, e.to), e.mass);
  return out;
}

W2GeodesicReport w2_geodesic_check(const DiscreteMMSpace& s, const TransportPlan& plan,
                                   const std::vector<double>& t_list) {
  W2GeodesicReport rep;
  rep.w2_total = std::sqrt(std::max(0.0, plan.cost));
  for (std::size_t ia = 0; ia < t_list.size(); ++ia)
    for (std::size_t ib = ia + 1; ib < t_list.size(); ++ib) {
      double ts = std::min(t_list[ia], t_list[ib]);
      double tt = std::max(t_list[ia], t_list[ib]);
      double w;
      if (ts == tt)
        w = 0.0;
      else
        w = solve_ot(s, displacement_interpolation(s, plan, ts),
                     displacement_interpolation(s, plan, tt))
                .w2;
      double defect = std::fabs(w - (tt - ts) * rep.w2_total);
      rep.rows.push_back({ts, tt, w, defect});
      rep.max_defect = std::max(rep.max_defect, defect);
    }
  return rep;
}

PlanGradientReport plan_represents_gradient_defect(const DiscreteMMSpace& s,
                                                   const DynamicalPlan& plan,
                                                   const ScalarField& g,
                                                   const std::vector<double>& t_list,
                                                   double compression_bound, double scale) {
  if (plan.atoms.empty()) throw std::invalid_argument("empty dynamical plan");
  if (g.size() != s.size()) throw std::invalid_argument("field size mismatch");
  if (t_list.empty()) throw std::invalid_argument("empty t grid");
  double rs = scale > 0.0 ? scale : default_scale(s);

  // bounded-compression check of the interpolants away from t = 1
  for (double t : t_list) {
    if (t > 0.9 + 1e-12) continue;
    std::map<PointId, double> att;
    for (const auto& [geo, mass] : plan.atoms) att[geodesic_eval(geo, t)] += mass;
    for (const auto& [z, massv] : att) {
      double density = massv / s.measure[z];
      if (density > compression_bound + 1e-9)
        throw CompressionViolation("density " + format_double(density) + " at t " +
                                   format_double(t) + " exceeds bound " +
                                   format_double(compression_bound));
    }
  }

  PlanGradientReport rep;
  std::map<PointId, double> lip_cache;
  for (const auto& [geo, mass] : plan.atoms) {
    rep.action += mass * geo.speed * geo.speed;
    auto it = lip_cache.find(geo.start());
    if (it == lip_cache.end()) it = lip_cache.emplace(geo.start(), lip(s, g, geo.start(), rs)).first;
    rep.target += 0.5 * mass * it->second * it->second;
  }
  rep.target += 0.5 * rep.action;

  std::vector<double> ts = t_list;
  std::sort(ts.begin(), ts.end(), std::greater<>());
  for (double t : ts) {
    double quo = 0.0;
    for (const auto& [geo, mass] : plan.atoms) {
      if (geo.speed <= 0.0) continue;
      // snap to the first vertex at least, so every moving atom reads its
      // smallest available difference quotient
      std::size_t idx = std::max<std::size_t>(geodesic_eval_index(geo, t), 1);
      double tr = geo.cumlen[idx] / geo.speed;
      quo += mass * (g[geo.vertices[idx]] - g[geo.start()]) / tr;
    }
    rep.readings.emplace_back(t, quo);
  }
  rep.defect = rep.target - rep.readings.back().second;
  return rep;
}

namespace {

// shared assembly for the measure-averaged angle readings: numerator terms
// per support point with bracket widths, L2(eta) denominators
AngleValue assemble_measure_angle(const std::vector<double>& weights,
                                  const std::vector<double>& mids,
                                  const std::vector<double>& widths, double den, double param) {
  double num = 0.0, lo = 0.0, hi = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    num += weights[i] * mids[i];
    lo += weights[i] * (mids[i] - 0.5 * widths[i]);
    hi += weights[i] * (mids[i] + 0.5 * widths[i]);
  }
  if (den <= 1e-12) throw ZeroDenominator("vanishing lip norm in measure angle");
  AngleValue out;
  out.estimate.value = num / den;
  out.estimate.lower = std::min(lo, hi) / den;
  out.estimate.upper = std::max(lo, hi) / den;
  out.estimate.samples = {{param, num / den}};
  out.estimate.tol = 0.25;
  out.estimate.converged = out.estimate.upper - out.estimate.lower <= out.estimate.tol;
  out.cosine = clamp_unit(out.estimate.value, &out.clamp);
  out.unreliable = out.clamp > 0.05;
  out.radians = std::acos(out.cosine);
  return out;
}

}  // namespace

AngleValue wasserstein_angle(const DiscreteMMSpace& s, const ScalarField& phi1,
                             const ScalarField& phi2, const ProbMeasure& eta, double eps,
                             double scale) {
  validate_measure(s, eta);
  if (phi1.size() != s.size() || phi2.size() != s.size())
    throw std::invalid_argument("potential size mismatch");
  if (!(eps > 0.0)) throw std::invalid_argument("need eps > 0");
  double rs = scale > 0.0 ? scale : default_scale(s);

  std::vector<double> mids, widths;
  double n1 = 0.0, n2 = 0.0;
  for (std::size_t i = 0; i < eta.support.size(); ++i) {
    PointId x = eta.support[i];
    auto [mid, width] = inner_product_at(s, phi1, phi2, x, eps, rs);
    mids.push_back(mid);
    widths.push_back(width);
    double l1 = lip(s, phi1, x, rs), l2 = lip(s, phi2, x, rs);
    n1 += eta.mass[i] * l1 * l1;
    n2 += eta.mass[i] * l2 * l2;
  }
  return assemble_measure_angle(eta.mass, mids, widths, std::sqrt(n1) * std::sqrt(n2), eps);
}

std::vector<ShrinkingBallReading> shrinking_ball_angle(const DiscreteMMSpace& s, PointId p,
                                                       PointId q, PointId x,
                                                       const std::vector<double>& radii,
                                                       double eps, double scale) {
  s.check_point(p, "pole p");
  s.check_point(q, "pole q");
  s.check_point(x, "center");
  if (radii.empty()) throw std::invalid_argument("need at least one radius");
  for (std::size_t i = 1; i < radii.size(); ++i)
    if (!(radii[i] < radii[i - 1])) throw std::invalid_argument("radii must strictly decrease");
  if (!(radii.back() > 0.0)) throw std::invalid_argument("radii must be positive");
  if (s.dist(x, p) <= radii.front() || s.dist(x, q) <= radii.front())
    throw std::invalid_argument("poles must lie outside every ball");
  double rs = scale > 0.0 ? scale : default_scale(s);
  if (!(eps > 0.0)) throw std::invalid_argument("need eps > 0");

  ScalarField rp = distance_field(s, p), rq = distance_field(s, q);
  std::vector<ShrinkingBallReading> out;
  for (double R : radii) {
    Ball B = ball(s, x, R);
    ProbMeasure eta = restrict_measure(s, B);
    ShrinkingBallReading reading;
    reading.radius = R;
    reading.ball_size = B.members.size();
    reading.gap_p = solve_ot(s, eta, dirac(p)).pot.gap;
    reading.gap_q = solve_ot(s, eta, dirac(q)).pot.gap;

    std::vector<double> mids, widths;
    double np = 0.0, nq = 0.0;
    for (std::size_t i = 0; i < eta.support.size(); ++i) {
      PointId z = eta.support[i];
      auto [mid, width] = inner_product_at(s, rp, rq, z, eps, rs);
      mids.push_back(rp[z] * rq[z] * mid);
      widths.push_back(rp[z] * rq[z] * width);
      double lp = lip(s, rp, z, rs), lq = lip(s, rq, z, rs);
      np += eta.mass[i] * rp[z] * rp[z] * lp * lp;
      nq += eta.mass[i] * rq[z] * rq[z] * lq * lq;
    }
    reading.angle =
        assemble_measure_angle(eta.mass, mids, widths, std::sqrt(np) * std::sqrt(nq), R);
    out.push_back(std::move(reading));
  }
  return out;
}

PlanwiseReport planwise_angle_validation(const DiscreteMMSpace& s, const TransportPlan& plan1,
                                         const TransportPlan& plan2, const ScalarField& phi1,
                                         const ScalarField& phi2, std::size_t max_starts,
                                         double eps, double scale) {
  if (phi1.size() != s.size() || phi2.size() != s.size())
    throw std::invalid_argument("potential size mismatch");
  double rs = scale > 0.0 ? scale : default_scale(s);

  // unique moving target per start, or the start is excluded
  auto targets = [](const TransportPlan& plan) {
    std::map<PointId, std::pair<PointId, int>> t;  // from -> (to, entry count)
    for (const auto& e : plan.entries) {
      auto [it, fresh] = t.emplace(e.from, std::pair<PointId, int>(e.to, 1));
      if (!fresh) ++it->second.second;
    }
    return t;
  };
  auto t1 = targets(plan1), t2 = targets(plan2);

  PlanwiseReport rep;
  std::vector<double> diffs;
  for (const auto& [x, tc1] : t1) {
    if (rep.rows.size() >= max_starts) break;
    auto it2 = t2.find(x);
    if (it2 == t2.end()) continue;
    const auto& tc2 = it2->second;
    if (tc1.second != 1 || tc2.second != 1 || tc1.first == x || tc2.first == x) {
      ++rep.excluded;
      continue;
    }
    try {
      DiscreteGeodesic g1 = shortest_geodesic(s, x, tc1.first);
      DiscreteGeodesic g2 = shortest_geodesic(s, x, tc2.first);
      std::vector<double> grid = make_t_grid(std::min(g1.speed, g2.speed), s.h);
      double geo = angle_two_geodesics(s, g1, g2, nullptr, grid, rs).radians;
      auto [mid, width] = inner_product_at(s, phi1, phi2, x, eps, rs);
      (void)width;
      double l1 = lip(s, phi1, x, rs), l2 = lip(s, phi2, x, rs);
      if (l1 * l2 <= 1e-12) {
        ++rep.excluded;
        continue;
      }
      double field = std::acos(clamp_unit(mid / (l1 * l2)));
      rep.rows.push_back({x, geo, field});
      diffs.push_back(std::fabs(geo - field));
    } catch (const std::exception&) {
      ++rep.excluded;
    }
  }
  if (!diffs.empty()) {
    rep.median_abs_diff = median_of(diffs);
    rep.max_abs_diff = *std::max_element(diffs.begin(), diffs.end());
  }
  return rep;
}

}  // namespace mmangle
