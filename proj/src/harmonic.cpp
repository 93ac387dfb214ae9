#include "mmangle/harmonic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "mmangle/util.hpp"

namespace mmangle {

std::size_t GraphLaplacian::local_of(PointId p) const {
  auto it = std::lower_bound(verts.begin(), verts.end(), p);
  if (it == verts.end() || *it != p) throw std::invalid_argument("point outside the domain ball");
  return std::size_t(it - verts.begin());
}

double GraphLaplacian::apply_local(const std::vector<double>& u, std::size_t li) const {
  double acc = 0.0;
  for (std::size_t e = off[li]; e < off[li + 1]; ++e) acc += w[e] * (u[adj[e]] - u[li]);
  return kappa * acc / mass[li];
}

std::vector<double> GraphLaplacian::localize(const ScalarField& f) const {
  std::vector<double> out(verts.size());
  for (std::size_t i = 0; i < verts.size(); ++i) out[i] = f[verts[i]];
  return out;
}

GraphLaplacian build_laplacian(const DiscreteMMSpace& s, const Ball& B, double model_N) {
  if (!(model_N >= 1.0) || !std::isfinite(model_N))
    throw std::invalid_argument("finite model dimension >= 1 required");
  GraphLaplacian L;
  L.domain = B;
  L.kernel_radius = s.h;
  L.model_N = model_N;
  L.verts = B.members;
  std::sort(L.verts.begin(), L.verts.end());
  std::size_t n = L.verts.size();
  if (n < 3) throw SingularSystem("ball too small for a Dirichlet system");

  L.mass.resize(n);
  L.boundary.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    L.mass[i] = s.measure[L.verts[i]];
    if (s.dist(B.center, L.verts[i]) >= B.radius - s.h) L.boundary[i] = 1;
  }
  for (std::size_t i = 0; i < n; ++i)
    if (!L.boundary[i]) L.interior.push_back(i);
  if (L.interior.empty()) throw SingularSystem("no interior vertices at this radius");
  if (L.interior.size() == n) throw SingularSystem("no boundary layer at this radius");

  double h2 = s.h * s.h;
  L.off.assign(n + 1, 0);
  std::vector<std::vector<std::pair<std::uint32_t, double>>> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto [y, d] : s.neighbors_within(L.verts[i], s.h)) {
      (void)d;
      auto it = std::lower_bound(L.verts.begin(), L.verts.end(), y);
      if (it == L.verts.end() || *it != y) continue;
      std::size_t j = std::size_t(it - L.verts.begin());
      rows[i].push_back({std::uint32_t(j), L.mass[i] * L.mass[j] / h2});
    }
    L.off[i + 1] = L.off[i] + rows[i].size();
  }
  for (std::size_t i = 0; i < n; ++i)
    for (auto [j, wij] : rows[i]) {
      L.adj.push_back(j);
      L.w.push_back(wij);
    }

  // every interior vertex must reach the boundary layer through the kernel
  // graph, else the conditioned system is singular
  std::vector<char> reached(n, 0);
  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < n; ++i)
    if (L.boundary[i]) {
      reached[i] = 1;
      stack.push_back(i);
    }
  while (!stack.empty()) {
    std::size_t x = stack.back();
    stack.pop_back();
    for (std::size_t e = L.off[x]; e < L.off[x + 1]; ++e)
      if (!reached[L.adj[e]]) {
        reached[L.adj[e]] = 1;
        stack.push_back(L.adj[e]);
      }
  }
  for (std::size_t li : L.interior)
    if (!reached[li]) throw SingularSystem("interior component sealed off from the boundary");

  // calibrate kappa on the reference field d(center,.)^2 / 2
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) {
    double d = s.dist(B.center, L.verts[i]);
    g[i] = 0.5 * d * d;
  }
  L.kappa = 1.0;
  std::vector<double> readings;
  for (std::size_t li : L.interior) readings.push_back(L.apply_local(g, li));
  double med = median_of(readings);
  if (!(med > 0.0)) throw SingularSystem("kernel too sparse to calibrate");
  L.kappa = model_N / med;
  return L;
}

double dirichlet_energy(const GraphLaplacian& L, const ScalarField& u) {
  std::vector<double> ul = L.localize(u);
  double acc = 0.0;  // directed sum = 2x the pair sum
  for (std::size_t i = 0; i < L.verts.size(); ++i)
    for (std::size_t e = L.off[i]; e < L.off[i + 1]; ++e) {
      double d = ul[i] - ul[L.adj[e]];
      acc += L.w[e] * d * d;
    }
  return 0.25 * L.kappa * acc;
}

ScalarField dirichlet_solve(const DiscreteMMSpace& s, const GraphLaplacian& L,
                            const ScalarField& boundary_data, const ScalarField& rhs) {
  if (boundary_data.size() != s.size())
    throw std::invalid_argument("boundary data must be a full-space field");
  if (!rhs.empty() && rhs.size() != s.size())
    throw std::invalid_argument("rhs must be empty or a full-space field");
  std::size_t n = L.verts.size();
  std::size_t ni = L.interior.size();
  std::vector<std::ptrdiff_t> unknown(n, -1);
  for (std::size_t t = 0; t < ni; ++t) unknown[L.interior[t]] = std::ptrdiff_t(t);

  // (kappa/m_x) sum_y w (u_y - u_x) = rhs_x  becomes the SPD system
  // D u_x - sum_{y interior} w u_y = sum_{y boundary} w g_y - m_x rhs_x / kappa
  Eigen::VectorXd b = Eigen::VectorXd::Zero(std::ptrdiff_t(ni));
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t t = 0; t < ni; ++t) {
    std::size_t li = L.interior[t];
    double diag = 0.0;
    for (std::size_t e = L.off[li]; e < L.off[li + 1]; ++e) {
      std::size_t lj = L.adj[e];
      diag += L.w[e];
      if (unknown[lj] >= 0)
        trip.emplace_back(std::ptrdiff_t(t), unknown[lj], -L.w[e]);
      else
        b[std::ptrdiff_t(t)] += L.w[e] * boundary_data[L.verts[lj]];
    }
    if (diag <= 0.0) throw SingularSystem("isolated interior vertex");
    trip.emplace_back(std::ptrdiff_t(t), std::ptrdiff_t(t), diag);
    if (!rhs.empty()) b[std::ptrdiff_t(t)] -= L.mass[li] * rhs[L.verts[li]] / L.kappa;
  }
  const Eigen::Index dim = Eigen::Index(ni);
  Eigen::SparseMatrix<double> A(dim, dim);
  A.setFromTriplets(trip.begin(), trip.end());

  Eigen::VectorXd x;
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
  cg.setTolerance(1e-13);
  cg.setMaxIterations(Eigen::Index(40 * ni + 200));
  cg.compute(A);
  x = cg.solve(b);
  bool ok = cg.info() == Eigen::Success;

  auto assemble = [&](const Eigen::VectorXd& sol) {
    ScalarField u(s.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      if (L.boundary[i]) u[L.verts[i]] = boundary_data[L.verts[i]];
    for (std::size_t t = 0; t < ni; ++t) u[L.verts[L.interior[t]]] = sol[std::ptrdiff_t(t)];
    return u;
  };
  auto residual_of = [&](const ScalarField& u) {
    std::vector<double> ul = L.localize(u);
    double worst = 0.0;
    for (std::size_t li : L.interior) {
      double want = rhs.empty() ? 0.0 : rhs[L.verts[li]];
      worst = std::max(worst, std::fabs(L.apply_local(ul, li) - want));
    }
    return worst;
  };
  double rhs_scale = 1.0;
  for (std::size_t li : L.interior)
    if (!rhs.empty()) rhs_scale = std::max(rhs_scale, std::fabs(rhs[L.verts[li]]));

  ScalarField u;
  double res = std::numeric_limits<double>::infinity();
  if (ok) {
    u = assemble(x);
    res = residual_of(u);
  }
  if (!ok || res > 1e-8 * rhs_scale) {
    if (ni >= 5000)
      throw NoConvergence("iterative solve stalled on a system too large for the fallback");
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
    if (ldlt.info() != Eigen::Success) throw SingularSystem("Cholesky factorization failed");
    u = assemble(ldlt.solve(b));
    res = residual_of(u);
    if (res > 1e-8 * rhs_scale)
      throw NoConvergence("residual " + format_double(res) + " after direct solve");
  }
  return u;
}

PoissonG bounded_poisson_G(const DiscreteMMSpace& s, const GraphLaplacian& L) {
  ScalarField zero(s.size(), 0.0), one(s.size(), 1.0);
  ScalarField u = dirichlet_solve(s, L, zero, one);
  PoissonG out;
  double mn = std::numeric_limits<double>::infinity(), mx = -mn;
  for (PointId v : L.verts) {
    mn = std::min(mn, u[v]);
    mx = std::max(mx, u[v]);
  }
  out.G = std::move(u);
  for (PointId v : L.verts) out.G[v] -= mn;
  out.C = mx - mn;
  std::vector<double> gl = L.localize(out.G);
  for (std::size_t li : L.interior)
    out.residual = std::max(out.residual, std::fabs(L.apply_local(gl, li) - 1.0));
  return out;
}

HarmonicApproxReport harmonic_approximation(const DiscreteMMSpace& s, PointId x0, PointId p,
                                            double model_N, double radius) {
  s.check_point(x0, "center");
  s.check_point(p, "pole");
  if (!(radius > 0.0)) throw std::invalid_argument("radius must be positive");
  if (s.dist(x0, p) < 2.0 * radius)
    throw std::invalid_argument("pole must be at least two radii from the center");
  Ball B = ball(s, x0, radius);
  GraphLaplacian L = build_laplacian(s, B, model_N);

  HarmonicApproxReport rep;
  rep.ball_size = B.members.size();
  ScalarField rp = distance_field(s, p);
  rep.b_p.assign(s.size(), 0.0);
  for (std::size_t z = 0; z < s.size(); ++z) rep.b_p[z] = rp[z] - rp[x0];
  rep.harmonic_b_p = dirichlet_solve(s, L, rep.b_p);

  ScalarField diff(s.size(), 0.0);
  for (PointId v : L.verts) {
    diff[v] = rep.harmonic_b_p[v] - rep.b_p[v];
    rep.sup_dev = std::max(rep.sup_dev, std::fabs(diff[v]));
  }
  double mass = 0.0;
  for (double m : L.mass) mass += m;
  rep.energy_dev = dirichlet_energy(L, diff) / mass;
  std::vector<double> ul = L.localize(rep.harmonic_b_p);
  for (std::size_t li : L.interior)
    rep.residual = std::max(rep.residual, std::fabs(L.apply_local(ul, li)));
  return rep;
}

double sigma_tilde(double K, double N, double theta) {
  if (K == 0.0) return 1.0;
  double x = theta * std::sqrt(std::fabs(K) / N);
  if (x == 0.0) return 1.0;
  if (K > 0.0) return x / std::tan(x);
  return x / std::tanh(x);
}

ComparisonReport laplacian_comparison_check(const DiscreteMMSpace& s, PointId x0,
                                            const GraphLaplacian& L, double K, double N,
                                            double smooth_radius, double abs_slack,
                                            double rel_slack) {
  s.check_point(x0, "reference point");
  for (PointId v : L.verts)
    if (s.dist(x0, v) <= 1e-12)
      throw std::invalid_argument("comparison ball must avoid the reference point");
  if (smooth_radius <= 0.0) smooth_radius = 2.0 * s.h;

  ScalarField f = distance_field(s, x0);
  std::vector<double> fl = L.localize(f);
  std::size_t n = L.verts.size();
  std::vector<double> raw(n, 0.0);
  std::vector<char> is_interior(n, 0);
  for (std::size_t li : L.interior) {
    raw[li] = L.apply_local(fl, li);
    is_interior[li] = 1;
  }

  ComparisonReport rep;
  for (std::size_t li : L.interior) {
    PointId v = L.verts[li];
    double sm = raw[li] * L.mass[li], wm = L.mass[li];
    for (auto [y, d] : s.neighbors_within(v, smooth_radius)) {
      (void)d;
      auto it = std::lower_bound(L.verts.begin(), L.verts.end(), y);
      if (it == L.verts.end() || *it != y) continue;
      std::size_t lj = std::size_t(it - L.verts.begin());
      if (!is_interior[lj]) continue;
      sm += raw[lj] * L.mass[lj];
      wm += L.mass[lj];
    }
    double smoothed = sm / wm;
    double d = fl[li];
    double bound = (N * sigma_tilde(K, N, d) - 1.0) / d;
    bool bad = smoothed > bound + abs_slack + rel_slack * std::fabs(bound);
    rep.rows.push_back({v, d, raw[li], smoothed, bound, bad});
    ++rep.checked;
    if (bad) ++rep.violations;
  }
  rep.fraction = rep.checked ? double(rep.violations) / double(rep.checked) : 0.0;
  return rep;
}

bool maximum_principle_check(const GraphLaplacian& L, const ScalarField& u) {
  double bmax = -std::numeric_limits<double>::infinity(), bmin = -bmax;
  double imax = bmax, imin = bmin;
  for (std::size_t i = 0; i < L.verts.size(); ++i) {
    double v = u[L.verts[i]];
    if (L.boundary[i]) {
      bmax = std::max(bmax, v);
      bmin = std::min(bmin, v);
    } else {
      imax = std::max(imax, v);
      imin = std::min(imin, v);
    }
  }
  if (L.interior.empty()) return true;
  return imax <= bmax + 1e-10 && imin >= bmin - 1e-10;
}

}  // namespace mmangle
