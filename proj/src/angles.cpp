#include "mmangle/angles.hpp"

#include <algorithm>
#include <cmath>

#include "mmangle/util.hpp"

namespace mmangle {

namespace {

double clamp_cos(double v, double* excess) {
  if (v > 1.0) {
    if (excess) *excess = v - 1.0;
    return 1.0;
  }
  if (v < -1.0) {
    if (excess) *excess = -1.0 - v;
    return -1.0;
  }
  if (excess) *excess = 0.0;
  return v;
}

using NeighborList = std::vector<std::pair<PointId, double>>;

// slope over an explicit neighbor list; 0 when the list is empty
double lip_over(const ScalarField& f, PointId x, const NeighborList& nb) {
  double best = 0.0;
  const double fx = f[x];
  for (const auto& [y, d] : nb) best = std::max(best, std::abs(f[y] - fx) / d);
  return best;
}

NeighborList open_ball_neighbors(const DiscreteMMSpace& s, PointId x, double scale) {
  auto nb = s.neighbors_within(x, scale);
  std::erase_if(nb, [scale](const auto& e) { return !(e.second < scale); });
  return nb;
}

double resolve_scale(const DiscreteMMSpace& s, double scale) {
  return scale > 0.0 ? scale : default_scale(s);
}

// one-sided quotient readings for the pair (f, g) at x over a given eps;
// base2 = lip(f)^2 precomputed
std::pair<double, double> f_brackets(const ScalarField& f, const ScalarField& g, PointId x,
                                     const NeighborList& nb, double eps, double base2) {
  const double fx = f[x];
  const double gx = g[x];
  double lp = 0.0, lm = 0.0;
  for (const auto& [y, d] : nb) {
    const double df = f[y] - fx;
    const double dg = g[y] - gx;
    lp = std::max(lp, std::abs(df + eps * dg) / d);
    lm = std::max(lm, std::abs(df - eps * dg) / d);
  }
  const double fplus = (lp * lp - base2) / (2.0 * eps);
  const double fminus = (base2 - lm * lm) / (2.0 * eps);
  return {fplus, fminus};
}

}  // namespace

double default_scale(const DiscreteMMSpace& s) { return 3.0 * s.h; }

double lip(const DiscreteMMSpace& s, const ScalarField& f, PointId x, double scale) {
  s.check_point(x, "lip");
  if (f.size() != s.size()) throw std::invalid_argument("lip: field size mismatch");
  const double r = resolve_scale(s, scale);
  auto nb = open_ball_neighbors(s, x, r);
  if (nb.empty()) throw EmptyNeighborhood("lip: no neighbor inside scale");
  return lip_over(f, x, nb);
}

LimitEstimate lip_extrapolated(const DiscreteMMSpace& s, const ScalarField& f, PointId x,
                               const std::vector<double>& scales, double tol) {
  if (scales.empty()) throw std::invalid_argument("lip_extrapolated: empty scale list");
  LimitEstimate est;
  est.tol = tol;
  for (double r : scales) est.samples.emplace_back(r, lip(s, f, x, r));
  est.value = est.samples.back().second;
  const double prev =
      est.samples.size() > 1 ? est.samples[est.samples.size() - 2].second : est.value;
  est.lower = std::min(est.value, prev);
  est.upper = std::max(est.value, prev);
  est.converged = (est.upper - est.lower) <= tol;
  return est;
}

std::vector<double> make_t_grid(double speed, double h, double floor_mult, double rho) {
  std::vector<double> out;
  if (speed <= 0.0) return out;
  const double floor_arc = floor_mult * h;
  for (double t = 1.0; t * speed >= floor_arc && out.size() < 40; t *= rho) out.push_back(t);
  if (out.empty()) out.push_back(std::min(1.0, floor_arc / speed));
  return out;
}

std::vector<double> make_arc_grid(double speed_a, double speed_b, double h, double floor_mult,
                                  double rho) {
  std::vector<double> out;
  const double top = std::min(speed_a, speed_b);
  if (top <= 0.0) return out;
  for (double a = top; a >= floor_mult * h && out.size() < 40; a *= rho) out.push_back(a);
  if (out.empty()) out.push_back(top);
  return out;
}

AngleValue angle_three_points(const DiscreteMMSpace& s, PointId p, PointId x, PointId q,
                              const std::vector<double>& eps_list, double scale, double tol) {
  s.check_point(p, "angle_three_points");
  s.check_point(x, "angle_three_points");
  s.check_point(q, "angle_three_points");
  if (p == x || q == x) throw std::invalid_argument("angle_three_points: pole equals vertex");
  if (eps_list.empty()) throw std::invalid_argument("angle_three_points: empty eps list");

  AngleValue out;
  out.estimate.tol = tol;
  if (p == q) {
    // coincident poles: the limit is 0 on any length space; return it exactly
    out.radians = 0.0;
    out.cosine = 1.0;
    out.estimate.value = 1.0;
    out.estimate.lower = 1.0;
    out.estimate.upper = 1.0;
    out.estimate.converged = true;
    return out;
  }

  const double r = resolve_scale(s, scale);
  auto nb = open_ball_neighbors(s, x, r);
  if (nb.empty()) throw EmptyNeighborhood("angle_three_points: no neighbor inside scale");

  const ScalarField rp = distance_field(s, p);
  const ScalarField rq = distance_field(s, q);
  const double lp = lip_over(rp, x, nb);
  const double lq = lip_over(rq, x, nb);
  if (lp <= 1e-12 || lq <= 1e-12)
    throw DegenerateLip("angle_three_points: distance field has vanishing slope at x");

  std::vector<double> eps(eps_list);
  std::sort(eps.begin(), eps.end(), std::greater<>());
  eps.erase(std::unique(eps.begin(), eps.end()), eps.end());
  if (eps.back() <= 0.0) throw std::invalid_argument("angle_three_points: eps must be positive");

  const double base2 = lp * lp;
  double lower = 0.0, upper = 0.0;
  std::vector<std::pair<double, double>> side_neg, side_pos;
  for (double e : eps) {
    const auto [fplus, fminus] = f_brackets(rp, rq, x, nb, e, base2);
    side_pos.emplace_back(e, fplus);
    side_neg.emplace_back(-e, fminus);
    lower = fminus;  // reading at the negative eps closest to 0
    upper = fplus;   // reading at the positive eps closest to 0
  }
  // samples ascending in eps: negatives from farthest to closest, then positives
  out.estimate.samples = std::move(side_neg);
  for (auto it = side_pos.rbegin(); it != side_pos.rend(); ++it)
    out.estimate.samples.push_back(*it);

  out.estimate.lower = lower;
  out.estimate.upper = upper;
  out.estimate.value = 0.5 * (lower + upper);
  out.estimate.converged = (upper - lower) <= tol;
  out.cosine = clamp_cos(out.estimate.value, &out.clamp);
  out.unreliable = out.clamp > 0.05;
  out.radians = std::acos(out.cosine);
  return out;
}

double represents_gradient_defect(const DiscreteMMSpace& s, const ScalarField& f,
                                  const DiscreteGeodesic& g, const std::vector<double>& t_list,
                                  double scale) {
  if (f.size() != s.size())
    throw std::invalid_argument("represents_gradient_defect: field size mismatch");
  if (g.speed <= 0.0) throw ZeroSpeed("represents_gradient_defect: constant geodesic");
  if (t_list.empty()) throw std::invalid_argument("represents_gradient_defect: empty t list");

  const PointId x = g.start();
  const double lf = lip(s, f, x, resolve_scale(s, scale));
  const double target = 0.5 * lf * lf + 0.5 * g.speed * g.speed;

  std::vector<double> ts(t_list);
  std::sort(ts.begin(), ts.end(), std::greater<>());
  double reading = 0.0;
  bool have = false;
  std::size_t last_idx = g.vertices.size();
  for (double t : ts) {
    const std::size_t idx = geodesic_eval_index(g, t);
    if (idx == 0 || idx == last_idx) continue;
    last_idx = idx;
    const double tstar = g.cumlen[idx] / g.speed;
    reading = (f[g.vertices[idx]] - f[x]) / tstar;
    have = true;
  }
  if (!have) throw std::invalid_argument("represents_gradient_defect: no usable t in list");
  return target - reading;
}

AngleValue angle_two_geodesics(const DiscreteMMSpace& s, const DiscreteGeodesic& gamma,
                               const DiscreteGeodesic& eta, const ScalarField* f,
                               const std::vector<double>& t_list, double scale, double slack,
                               double tol) {
  if (gamma.start() != eta.start())
    throw std::invalid_argument("angle_two_geodesics: geodesics start at different points");
  if (gamma.speed <= 0.0 || eta.speed <= 0.0)
    throw ZeroSpeed("angle_two_geodesics: constant geodesic");
  if (t_list.empty()) throw std::invalid_argument("angle_two_geodesics: empty t list");

  const PointId x = gamma.start();
  const double sg = gamma.speed;
  const double se = eta.speed;

  ScalarField default_f;
  const bool using_default = (f == nullptr);
  if (using_default) {
    default_f = distance_field(s, gamma.end());
    for (double& v : default_f) v *= -sg;
    f = &default_f;
  } else {
    if (f->size() != s.size())
      throw std::invalid_argument("angle_two_geodesics: field size mismatch");
    const double defect = represents_gradient_defect(s, *f, gamma, t_list, scale);
    if (slack <= 0.0) {
      const double lf = lip(s, *f, x, resolve_scale(s, scale));
      slack = 0.05 * (0.5 * lf * lf + 0.5 * sg * sg) + 2.0 * s.h * sg;
    }
    if (defect > slack)
      throw NotRepresenting("angle_two_geodesics: f fails the gradient-representation test");
  }

  AngleValue out;
  out.estimate.tol = tol;
  std::vector<double> ts(t_list);
  std::sort(ts.begin(), ts.end(), std::greater<>());
  std::size_t last_idx = eta.vertices.size();
  const double fx = (*f)[x];
  for (double t : ts) {
    const std::size_t idx = geodesic_eval_index(eta, t);
    if (idx == 0 || idx == last_idx) continue;
    last_idx = idx;
    const double arc = eta.cumlen[idx];
    const double tstar = arc / se;
    double c = ((*f)[eta.vertices[idx]] - fx) / (tstar * sg * se);
    c = clamp_cos(c, nullptr);
    if (using_default) c = c + arc * (1.0 - c * c) / (2.0 * sg);
    out.estimate.samples.emplace_back(tstar, c);
  }
  if (out.estimate.samples.empty())
    throw std::invalid_argument("angle_two_geodesics: no usable t in list");

  const auto& smp = out.estimate.samples;
  out.estimate.value = smp.back().second;
  const double prev = smp.size() > 1 ? smp[smp.size() - 2].second : smp.back().second;
  out.estimate.lower = std::min(smp.back().second, prev);
  out.estimate.upper = std::max(smp.back().second, prev);
  out.estimate.converged = (out.estimate.upper - out.estimate.lower) <= tol;
  out.cosine = clamp_cos(out.estimate.value, &out.clamp);
  out.unreliable = out.clamp > 0.05;
  out.radians = std::acos(out.cosine);
  return out;
}

std::pair<double, double> inner_product_at(const DiscreteMMSpace& s, const ScalarField& f,
                                           const ScalarField& g, PointId x, double eps,
                                           double scale) {
  const double r = resolve_scale(s, scale);
  auto nb = open_ball_neighbors(s, x, r);
  if (nb.empty()) return {0.0, 0.0};
  const double l0 = lip_over(f, x, nb);
  const auto [fplus, fminus] = f_brackets(f, g, x, nb, eps, l0 * l0);
  return {0.5 * (fplus + fminus), fplus - fminus};
}

InnerProductField inner_product_field(const DiscreteMMSpace& s, const ScalarField& f,
                                      const ScalarField& g, double eps, double scale) {
  if (f.size() != s.size() || g.size() != s.size())
    throw std::invalid_argument("inner_product_field: field size mismatch");
  if (!(eps > 0.0)) throw std::invalid_argument("inner_product_field: eps must be positive");
  InnerProductField out;
  out.value.resize(s.size());
  out.bracket_width.resize(s.size());
  parallel_for(s.size(), [&](std::size_t i) {
    const auto [v, w] = inner_product_at(s, f, g, static_cast<PointId>(i), eps, scale);
    out.value[i] = v;
    out.bracket_width[i] = w;
  });
  return out;
}

AngleValue cosine_formula_angle(const DiscreteMMSpace& s, const DiscreteGeodesic& gamma,
                                const DiscreteGeodesic& eta, const std::vector<double>& t_list,
                                double tol) {
  if (gamma.start() != eta.start())
    throw std::invalid_argument("cosine_formula_angle: geodesics start at different points");
  if (gamma.speed <= 0.0 || eta.speed <= 0.0)
    throw ZeroSpeed("cosine_formula_angle: constant geodesic");
  if (t_list.empty()) throw std::invalid_argument("cosine_formula_angle: empty t list");

  AngleValue out;
  out.estimate.tol = tol;
  std::vector<double> ts(t_list);
  std::sort(ts.begin(), ts.end(), std::greater<>());
  std::pair<std::size_t, std::size_t> last{gamma.vertices.size(), eta.vertices.size()};
  double last_arg = 1.0;
  double max_excess = 0.0;
  for (double t : ts) {
    const std::size_t ig = geodesic_eval_index(gamma, t / gamma.speed);
    const std::size_t ie = geodesic_eval_index(eta, t / eta.speed);
    if (ig == 0 || ie == 0) continue;
    if (std::pair{ig, ie} == last) continue;
    last = {ig, ie};
    const double sa = gamma.cumlen[ig];
    const double ta = eta.cumlen[ie];
    const double d = s.dist(gamma.vertices[ig], eta.vertices[ie]);
    double excess = 0.0;
    const double arg = clamp_cos((sa * sa + ta * ta - d * d) / (2.0 * sa * ta), &excess);
    max_excess = std::max(max_excess, excess);
    last_arg = arg;
    out.estimate.samples.emplace_back(t, std::acos(arg));
  }
  if (out.estimate.samples.empty())
    throw std::invalid_argument("cosine_formula_angle: no usable t in list");

  const auto& smp = out.estimate.samples;
  out.estimate.value = smp.back().second;
  const double prev = smp.size() > 1 ? smp[smp.size() - 2].second : smp.back().second;
  out.estimate.lower = std::min(smp.back().second, prev);
  out.estimate.upper = std::max(smp.back().second, prev);
  out.estimate.converged = (out.estimate.upper - out.estimate.lower) <= tol;
  out.radians = out.estimate.value;
  out.cosine = last_arg;
  out.clamp = max_excess;
  out.unreliable = max_excess > 0.05;
  return out;
}

ProbeReport two_variable_cosine_probe(const DiscreteMMSpace& s, const DiscreteGeodesic& gamma,
                                      const DiscreteGeodesic& eta,
                                      const std::vector<std::pair<double, double>>& st_pairs,
                                      double C) {
  if (gamma.start() != eta.start())
    throw std::invalid_argument("two_variable_cosine_probe: different start points");
  if (gamma.speed <= 0.0 || eta.speed <= 0.0)
    throw ZeroSpeed("two_variable_cosine_probe: constant geodesic");
  if (!(C >= 1.0)) throw std::invalid_argument("two_variable_cosine_probe: C must be >= 1");

  for (const auto& [a, b] : st_pairs) {
    if (!(a > 0.0) || !(b > 0.0))
      throw std::invalid_argument("two_variable_cosine_probe: parameters must be positive");
    const double ratio = a / b;
    if (ratio < 1.0 / C - 1e-12 || ratio > C + 1e-12)
      throw ConeViolation("two_variable_cosine_probe: s/t outside [1/C, C]");
  }

  ProbeReport rep;
  std::vector<double> radians;
  for (const auto& [a, b] : st_pairs) {
    const std::size_t ig = geodesic_eval_index(gamma, a / gamma.speed);
    const std::size_t ie = geodesic_eval_index(eta, b / eta.speed);
    if (ig == 0 || ie == 0) continue;
    const double sa = gamma.cumlen[ig];
    const double ta = eta.cumlen[ie];
    const double d = s.dist(gamma.vertices[ig], eta.vertices[ie]);
    const double arg = clamp_cos((sa * sa + ta * ta - d * d) / (2.0 * sa * ta), nullptr);
    rep.readings.push_back(ProbePoint{sa, ta, std::acos(arg)});
    radians.push_back(rep.readings.back().radians);
  }
  if (radians.empty())
    throw std::invalid_argument("two_variable_cosine_probe: no usable (s, t) pair");
  rep.min_radians = *std::min_element(radians.begin(), radians.end());
  rep.max_radians = *std::max_element(radians.begin(), radians.end());
  rep.median_radians = median_of(radians);
  rep.spread = rep.max_radians - rep.min_radians;
  return rep;
}

}  // namespace mmangle
