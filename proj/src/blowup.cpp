#include "mmangle/blowup.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mmangle/util.hpp"

namespace mmangle {

namespace {

double betweenness_defect(const DiscreteMMSpace& s, PointId hat, PointId x, PointId pole) {
  return s.dist(hat, x) + s.dist(x, pole) - s.dist(hat, pole);
}

ScalarField direction_field(const DiscreteMMSpace& s, PointId pole, PointId x, double r) {
  ScalarField b = distance_field(s, pole);
  double at_x = b[x];
  for (double& v : b) v = (v - at_x) / r;
  return b;
}

}  // namespace

BlowupSequence build_blowup(const DiscreteMMSpace& s, PointId x, PointId p, PointId q,
                            PointId phat, PointId qhat, const std::vector<double>& radii,
                            std::size_t min_stage_points) {
  for (PointId pt : {x, p, q, phat, qhat}) s.check_point(pt, "blow-up point");
  if (radii.empty()) throw std::invalid_argument("need at least one radius");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0)) throw std::invalid_argument("radii must be positive");
    if (i > 0 && !(radii[i] < radii[i - 1]))
      throw std::invalid_argument("radii must strictly decrease");
  }

  BlowupSequence seq;
  seq.base = s;
  seq.x = x;
  seq.p = p;
  seq.q = q;
  seq.phat = phat;
  seq.qhat = qhat;
  seq.defect_p = betweenness_defect(s, phat, x, p);
  seq.defect_q = betweenness_defect(s, qhat, x, q);
  if (seq.defect_p > s.h)
    throw NotExtendable("x is not h-between phat and p: defect " + format_double(seq.defect_p));
  if (seq.defect_q > s.h)
    throw NotExtendable("x is not h-between qhat and q: defect " + format_double(seq.defect_q));

  for (double r : radii) {
    BlowupStage st;
    st.r = r;
    st.space = rescale(s, x, r);
    st.unit_ball = ball(st.space, x, 1.0);
    st.b_p = direction_field(s, p, x, r);
    st.b_q = direction_field(s, q, x, r);
    st.b_phat = direction_field(s, phat, x, r);
    st.b_qhat = direction_field(s, qhat, x, r);
    if (st.unit_ball.members.size() < min_stage_points) {
      st.dropped = true;
      seq.warnings.push_back("stage r=" + format_double(r) + " dropped: only " +
                             std::to_string(st.unit_ball.members.size()) +
                             " points in the unit ball");
    }
    seq.stages.push_back(std::move(st));
  }
  return seq;
}

double busemann_pair_defect(const BlowupSequence& seq, std::size_t stage, bool q_pole) {
  if (stage >= seq.stages.size()) throw std::invalid_argument("stage out of range");
  const BlowupStage& st = seq.stages[stage];
  const ScalarField& b = q_pole ? st.b_q : st.b_p;
  const ScalarField& bh = q_pole ? st.b_qhat : st.b_phat;
  double cert = (q_pole ? seq.defect_q : seq.defect_p) / st.r;
  double sup = -std::numeric_limits<double>::infinity();
  for (PointId y : st.unit_ball.members) sup = std::max(sup, b[y] + bh[y]);
  if (sup < -cert - 1e-12)
    throw std::logic_error("pair defect below its triangle-inequality floor");
  return sup;
}

BlowupAngleReport angle_stability_across_scales(const BlowupSequence& seq, double eps,
                                                double rho) {
  if (!(eps > 0.0) || !(rho > 0.0) || rho > 1.0)
    throw std::invalid_argument("need eps > 0 and rho in (0, 1]");
  BlowupAngleReport rep;
  rep.base_angle =
      angle_three_points(seq.base, seq.p, seq.x, seq.q, {0.4, 0.2, 0.1}).radians;

  for (const BlowupStage& st : seq.stages) {
    BlowupAngleRow row;
    row.r = st.r;
    row.dropped = st.dropped;
    Ball avg_ball = ball(st.space, seq.x, rho);
    row.n_avg = avg_ball.members.size();
    double num = 0.0, wsum = 0.0;
    for (PointId y : avg_ball.members) {
      double m = st.space.measure[y];
      auto [mid, width] = inner_product_at(st.space, st.b_p, st.b_q, y, eps);
      (void)width;
      num += m * mid;
      double lp = lip(st.space, st.b_p, y, default_scale(st.space));
      double lq = lip(st.space, st.b_q, y, default_scale(st.space));
      row.lip_p_norm2 += m * lp * lp;
      row.lip_q_norm2 += m * lq * lq;
      wsum += m;
    }
    (void)wsum;
    double den = std::sqrt(row.lip_p_norm2) * std::sqrt(row.lip_q_norm2);
    row.cosine = den > 1e-12 ? std::min(1.0, std::max(-1.0, num / den)) : 1.0;
    row.radians = std::acos(row.cosine);
    rep.rows.push_back(row);
    if (!st.dropped) {
      rep.final_radians = row.radians;
      rep.final_abs_diff = std::fabs(row.radians - rep.base_angle);
    }
  }
  return rep;
}

}  // namespace mmangle
