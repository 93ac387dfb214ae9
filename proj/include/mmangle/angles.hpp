#pragma once

#include "mmangle/core_space.hpp"
#include "mmangle/geodesics.hpp"

namespace mmangle {

struct EmptyNeighborhood : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegenerateLip : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NotRepresenting : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ZeroSpeed : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConeViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A one-sided/two-sided limit estimated from finitely many readings.
// samples holds (parameter, reading) pairs in the order probed,
// lower <= value <= upper, converged iff upper - lower <= tol.
struct LimitEstimate {
  double value = 0.0;
  std::vector<std::pair<double, double>> samples;
  double lower = 0.0;
  double upper = 0.0;
  bool converged = false;
  double tol = 0.0;
};

// An angle with its cosine and the limit it came from. cosine is clamped to
// [-1, 1] before arccos; clamp records how far the raw value overshot.
// Overshoots beyond 0.05 mark the reading unreliable.
struct AngleValue {
  double radians = 0.0;
  double cosine = 1.0;
  LimitEstimate estimate;
  double clamp = 0.0;
  bool unreliable = false;
};

// Pointwise slope scale: sup |f(y)-f(x)| / d(x,y) over the punctured open
// ball of the given radius. Throws EmptyNeighborhood when x has no neighbor
// below that radius.
double lip(const DiscreteMMSpace& s, const ScalarField& f, PointId x, double scale);

// lip readings over a decreasing list of scales; value = last reading,
// converged iff the last two agree within tol.
LimitEstimate lip_extrapolated(const DiscreteMMSpace& s, const ScalarField& f, PointId x,
                               const std::vector<double>& scales, double tol);

// Neighborhood radius used by ops that take no explicit scale.
double default_scale(const DiscreteMMSpace& s);

// Parameter grid t0*rho^k (t0 = 1) kept while t*speed >= floor_mult*h,
// descending; never empty (falls back to the single coarsest usable t).
std::vector<double> make_t_grid(double speed, double h, double floor_mult = 4.0,
                                double rho = 0.5);

// Arc-length grid for the metric cosine formulas, same stopping rule.
std::vector<double> make_arc_grid(double speed_a, double speed_b, double h,
                                  double floor_mult = 4.0, double rho = 0.5);

// Angle at x between the poles p and q, via the one-sided difference
// quotients F_eps = [lip(r_p + eps r_q)^2 - lip(r_p)^2] / (2 eps) evaluated
// at +-eps for each eps in eps_list. F is non-decreasing in eps on each side
// of 0 (convexity of eps -> lip^2), so the readings at the smallest +-eps
// bracket the two one-sided limits; value = bracket midpoint. p == q returns
// the exact zero angle. Throws DegenerateLip when lip r_p or lip r_q
// vanishes at x.
AngleValue angle_three_points(const DiscreteMMSpace& s, PointId p, PointId x, PointId q,
                              const std::vector<double>& eps_list, double scale = 0.0,
                              double tol = 0.25);

// Signed defect of the upper-gradient inequality along g:
// (lip(f)^2/2 + speed^2/2) - [difference-quotient estimate of
// (f(g_t) - f(g_0))/t at the smallest usable t]. Nonpositive (up to
// discretization) iff g represents the gradient of f at its start.
double represents_gradient_defect(const DiscreteMMSpace& s, const ScalarField& f,
                                  const DiscreteGeodesic& g, const std::vector<double>& t_list,
                                  double scale = 0.0);

// Angle at the common start of gamma and eta through a function f whose
// gradient gamma represents: cosine readings
// (f(eta_t) - f(eta_0)) / (t |gamma'| |eta'|) over t_list. With the default
// f = -|gamma'| d(gamma_1, .) (which always represents) each reading also
// gets the second-order comparison correction c + s(1-c^2)/(2|gamma'|),
// evaluated at the realized arc s; the correction vanishes in the t -> 0
// limit and is exact on model spaces. A user-supplied f must pass the
// represents_gradient_defect test within slack (auto when slack = 0),
// else NotRepresenting.
AngleValue angle_two_geodesics(const DiscreteMMSpace& s, const DiscreteGeodesic& gamma,
                               const DiscreteGeodesic& eta, const ScalarField* f,
                               const std::vector<double>& t_list, double scale = 0.0,
                               double slack = 0.0, double tol = 0.25);

// Midpoint field x -> (F_{+eps} + F_{-eps})/2 for the pair (f, g), with the
// bracket width F_{+eps} - F_{-eps} kept as a diagnostic. Points with no
// neighbor inside scale get value 0 and width 0.
struct InnerProductField {
  ScalarField value;
  ScalarField bracket_width;
};

InnerProductField inner_product_field(const DiscreteMMSpace& s, const ScalarField& f,
                                      const ScalarField& g, double eps, double scale = 0.0);

// Single-point version; returns {midpoint, width}.
std::pair<double, double> inner_product_at(const DiscreteMMSpace& s, const ScalarField& f,
                                           const ScalarField& g, PointId x, double eps,
                                           double scale = 0.0);

// Metric cosine formula along two geodesics from a common start:
// reading(t) = arccos((s*^2 + t*^2 - d(gamma_s*, eta_t*)^2) / (2 s* t*))
// where s*, t* are the realized vertex arc-lengths nearest the nominal arc
// t on each curve (so d(x, gamma_s*) = s* exactly). t_list is in arc units.
AngleValue cosine_formula_angle(const DiscreteMMSpace& s, const DiscreteGeodesic& gamma,
                                const DiscreteGeodesic& eta, const std::vector<double>& t_list,
                                double tol = 0.25);

// Two-parameter probe arccos((s^2 + t^2 - d(gamma_s, eta_t)^2)/(2 s t))
// under the cone constraint 1/C <= s/t <= C. Reports the spread of the
// readings; convergence is deliberately never asserted.
struct ProbePoint {
  double s = 0.0, t = 0.0, radians = 0.0;
};
struct ProbeReport {
  std::vector<ProbePoint> readings;
  double min_radians = 0.0, max_radians = 0.0, median_radians = 0.0, spread = 0.0;
};

ProbeReport two_variable_cosine_probe(const DiscreteMMSpace& s, const DiscreteGeodesic& gamma,
                                      const DiscreteGeodesic& eta,
                                      const std::vector<std::pair<double, double>>& st_pairs,
                                      double C = 4.0);

}  // namespace mmangle
