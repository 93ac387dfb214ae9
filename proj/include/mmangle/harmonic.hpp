#pragma once

#include "mmangle/core_space.hpp"

namespace mmangle {

struct SingularSystem : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NoConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Kernel Laplacian on a metric ball: weights w_xy = m_x m_y / h^2 between
// distinct ball members at distance <= h, boundary layer = members within h
// of the rim. The operator is
//   (L u)(x) = (kappa / m_x) * sum_y w_xy (u(y) - u(x)),
// with kappa calibrated per instance so that L applied to d(center,.)^2 / 2
// reads the declared model dimension N at interior points (median match).
// Constants are annihilated before boundary conditioning by construction.
class GraphLaplacian {
 public:
  Ball domain;
  double kernel_radius = 0.0;
  double kappa = 1.0;
  double model_N = 0.0;
  std::vector<PointId> verts;       // ascending
  std::vector<double> mass;         // per vert
  std::vector<char> boundary;      // per vert, 1 on the boundary layer
  std::vector<std::size_t> interior;  // local indices, ascending
  // symmetric kernel adjacency among verts (both directions stored)
  std::vector<std::size_t> off;
  std::vector<std::uint32_t> adj;
  std::vector<double> w;

  std::size_t local_of(PointId p) const;
  // (L u)(vert li) for a field indexed by local vertex
  double apply_local(const std::vector<double>& u, std::size_t li) const;
  // restrict a full-space field to the local vertex order
  std::vector<double> localize(const ScalarField& f) const;
};

GraphLaplacian build_laplacian(const DiscreteMMSpace& s, const Ball& B, double model_N);

// Dirichlet energy (kappa/2) sum_pairs w (u_x - u_y)^2 over the kernel graph.
double dirichlet_energy(const GraphLaplacian& L, const ScalarField& u);

// Solves L u = rhs on the interior with u = boundary_data on the boundary
// layer. rhs may be empty (harmonic). Conjugate gradient with diagonal
// preconditioning, direct Cholesky fallback below 5000 unknowns; the
// residual max_interior |L u - rhs| must reach 1e-8 or NoConvergence is
// thrown. Returns a full-space field, zero outside the ball.
ScalarField dirichlet_solve(const DiscreteMMSpace& s, const GraphLaplacian& L,
                            const ScalarField& boundary_data, const ScalarField& rhs = {});

// L G = 1 on the interior, G = 0 on the boundary, shifted so min G = 0.
// C = max G over the ball.
struct PoissonG {
  ScalarField G;
  double C = 0.0;
  double residual = 0.0;
};
PoissonG bounded_poisson_G(const DiscreteMMSpace& s, const GraphLaplacian& L);

// Harmonic replacement of the normalized distance field
// b_p = d(p,.) - d(p, x0) on the radius-`radius` ball at x0 (pole at least
// two radii away), with the sup and normalized-energy deviations between
// the field and its replacement.
struct HarmonicApproxReport {
  ScalarField b_p, harmonic_b_p;
  double sup_dev = 0.0;
  double energy_dev = 0.0;
  double residual = 0.0;
  std::size_t ball_size = 0;
};
HarmonicApproxReport harmonic_approximation(const DiscreteMMSpace& s, PointId x0, PointId p,
                                            double model_N, double radius = 1.0);

// Distortion coefficient of the comparison bound: theta sqrt(K/N)
// cot(theta sqrt(K/N)) for K > 0, 1 at K = 0, the cotanh analog for K < 0.
double sigma_tilde(double K, double N, double theta);

// Compares kernel-Laplacian readings of d(x0,.) on a ball avoiding x0
// against (N sigma_tilde(K,N,d) - 1)/d. Raw readings are averaged over
// interior neighbors within smooth_radius before the check (the bound is
// tight in flat space, so pointwise kernel noise must be averaged out),
// and a violation needs to clear an absolute plus relative slack.
struct ComparisonRow {
  PointId vert;
  double d, reading, smoothed, bound;
  bool violating;
};
struct ComparisonReport {
  std::vector<ComparisonRow> rows;
  std::size_t checked = 0, violations = 0;
  double fraction = 0.0;
};
ComparisonReport laplacian_comparison_check(const DiscreteMMSpace& s, PointId x0,
                                            const GraphLaplacian& L, double K, double N,
                                            double smooth_radius = 0.0, double abs_slack = 0.1,
                                            double rel_slack = 0.1);

// True iff both extrema of u over the ball are attained on the boundary
// layer within 1e-10.
bool maximum_principle_check(const GraphLaplacian& L, const ScalarField& u);

}  // namespace mmangle
