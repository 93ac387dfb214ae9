#pragma once

#include "mmangle/angles.hpp"
#include "mmangle/geodesics.hpp"

namespace mmangle {

struct SolverFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CompressionViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ZeroDenominator : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Sparse probability measure: support ascending and unique, masses positive,
// total mass 1 within 1e-12.
struct ProbMeasure {
  std::vector<PointId> support;
  std::vector<double> mass;
};

ProbMeasure dirac(PointId p);
ProbMeasure uniform_on(std::vector<PointId> pts);
// Ambient measure restricted to the ball and renormalized to mass 1.
ProbMeasure restrict_measure(const DiscreteMMSpace& s, const Ball& B);
void validate_measure(const DiscreteMMSpace& s, const ProbMeasure& mu);

struct PlanEntry {
  PointId from, to;
  double mass;
};

// Optimal coupling; cost carries d^2 weights, so cost = squared quadratic
// transport distance (the solver's internal objective is d^2/2).
struct TransportPlan {
  std::vector<PlanEntry> entries;  // sorted by (from, to), masses > 0
  double cost = 0.0;
};

// Dual potentials for cost c = d^2/2, extended from the supports to the
// whole space by c-transform (the extension agrees with the solver values
// on the supports). gap = primal cost - dual objective of the c = d^2/2
// program. The optimal plan displaces along the gradient of -phi.
struct PotentialPair {
  ScalarField phi, psi;
  double dual_value = 0.0;
  double gap = 0.0;
};

struct OTResult {
  TransportPlan plan;
  PotentialPair pot;
  double w2 = 0.0;
};

// Exact solve by the transportation simplex with a dual optimality
// certificate. Throws SolverFailure on size overflow or lost convergence.
OTResult solve_ot(const DiscreteMMSpace& s, const ProbMeasure& mu, const ProbMeasure& nu);

// Largest marginal violation of the plan against (mu, nu).
double plan_marginal_defect(const TransportPlan& plan, const ProbMeasure& mu,
                            const ProbMeasure& nu);

// Pushforward of the plan under the time-t geodesic map.
ProbMeasure displacement_interpolation(const DiscreteMMSpace& s, const TransportPlan& plan,
                                       double t);

// Plan entries routed along deterministic shortest geodesics.
struct DynamicalPlan {
  std::vector<std::pair<DiscreteGeodesic, double>> atoms;
};
DynamicalPlan lift_to_dynamical_plan(const DiscreteMMSpace& s, const TransportPlan& plan);

// Checks W2(mu_s, mu_t) = |s-t| W2(mu_0, mu_1) along the displacement
// interpolation with fresh solves.
struct W2GeodesicReport {
  struct Row {
    double s, t, w2, defect;
  };
  double w2_total = 0.0;
  std::vector<Row> rows;
  double max_defect = 0.0;
};
W2GeodesicReport w2_geodesic_check(const DiscreteMMSpace& s, const TransportPlan& plan,
                                   const std::vector<double>& t_list);

// Signed defect of the representing-gradient inequality for a dynamical
// plan: (1/2 sum m lip(g, start)^2 + 1/2 sum m speed^2) minus the smallest-t
// estimate of sum m (g(atom_t) - g(atom_0)) / t. Compression of the
// interpolants against the ambient measure is checked on t <= 0.9 (Dirac
// endpoints are exempt by design).
struct PlanGradientReport {
  double defect = 0.0;
  double target = 0.0;   // 1/2 lip^2 mass-average + 1/2 action
  double action = 0.0;   // sum mass * speed^2
  std::vector<std::pair<double, double>> readings;  // (t, quotient)
};
PlanGradientReport plan_represents_gradient_defect(const DiscreteMMSpace& s,
                                                   const DynamicalPlan& plan,
                                                   const ScalarField& g,
                                                   const std::vector<double>& t_list,
                                                   double compression_bound, double scale = 0.0);

// Angle between two transport directions out of the measure eta, given the
// potentials whose (negated) gradients drive the two plans:
// cos = sum eta * ip(phi1, phi2) / (L2(eta) norms of lip phi1, lip phi2).
AngleValue wasserstein_angle(const DiscreteMMSpace& s, const ScalarField& phi1,
                             const ScalarField& phi2, const ProbMeasure& eta, double eps,
                             double scale = 0.0);

// Angle at x between p and q through transport of the normalized ball
// measure toward each pole, one reading per radius. Every solve's duality
// gap is recorded. The integrand uses the chain-rule form
// r_p r_q ip(r_p, r_q) with matching L2 denominators, which is exact for
// the 1/2 r^2 potentials in the model cases and avoids differencing
// curvature of quadratic fields at scale h.
struct ShrinkingBallReading {
  double radius = 0.0;
  AngleValue angle;
  double gap_p = 0.0, gap_q = 0.0;
  std::size_t ball_size = 0;
};
std::vector<ShrinkingBallReading> shrinking_ball_angle(const DiscreteMMSpace& s, PointId p,
                                                       PointId q, PointId x,
                                                       const std::vector<double>& radii,
                                                       double eps, double scale = 0.0);

// Per-start comparison of the geodesic angle against the normalized
// potential inner product (the plan-wise a.e. identity). Starts whose atom
// in either plan is split or stationary are excluded and counted.
struct PlanwiseReport {
  struct Row {
    PointId x;
    double geodesic_angle, field_angle;
  };
  std::vector<Row> rows;
  std::size_t excluded = 0;
  double median_abs_diff = 0.0;
  double max_abs_diff = 0.0;
};
PlanwiseReport planwise_angle_validation(const DiscreteMMSpace& s, const TransportPlan& plan1,
                                         const TransportPlan& plan2, const ScalarField& phi1,
                                         const ScalarField& phi2, std::size_t max_starts,
                                         double eps, double scale = 0.0);

}  // namespace mmangle
