#pragma once

#include "mmangle/angles.hpp"
#include "mmangle/core_space.hpp"
#include "mmangle/geodesics.hpp"

namespace mmangle {

struct NotExtendable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One rescaled stage: the view of the base space at scale r around x,
// with the normalized direction fields toward the four poles.
// b fields are (d(pole, .) - d(pole, x)) / r, exactly 1-Lipschitz in the
// stage metric and zero at x.
struct BlowupStage {
  double r = 0.0;
  DiscreteMMSpace space;  // shares the base metric core
  Ball unit_ball;         // radius 1 at x in the stage metric
  ScalarField b_p, b_q, b_phat, b_qhat;
  bool dropped = false;  // too few unit-ball points to read anything off
};

struct BlowupSequence {
  DiscreteMMSpace base;
  PointId x = 0, p = 0, q = 0, phat = 0, qhat = 0;
  // betweenness defects d(hat,x) + d(x,pole) - d(hat,pole), both <= base h
  double defect_p = 0.0, defect_q = 0.0;
  std::vector<BlowupStage> stages;
  std::vector<std::string> warnings;
};

// Requires x to be h-approximately between phat and p, and between qhat and
// q (NotExtendable otherwise); radii strictly decreasing. Stages whose unit
// ball holds fewer than 200 points are kept but marked dropped, with a
// warning.
BlowupSequence build_blowup(const DiscreteMMSpace& s, PointId x, PointId p, PointId q,
                            PointId phat, PointId qhat, const std::vector<double>& radii,
                            std::size_t min_stage_points = 200);

// sup over the stage's unit ball of b_p + b_phat (or the q pair), the
// antipodality defect. Bounded below by -defect/r exactly, by the triangle
// inequality through x.
double busemann_pair_defect(const BlowupSequence& seq, std::size_t stage, bool q_pole = false);

// Measure-averaged normalized inner product of b_p and b_q over the
// rho-ball of each stage, against the three-point angle at x in the base.
struct BlowupAngleRow {
  double r = 0.0;
  double cosine = 0.0, radians = 0.0;
  double lip_p_norm2 = 0.0, lip_q_norm2 = 0.0;  // per-scale energy diagnostics
  std::size_t n_avg = 0;
  bool dropped = false;
};
struct BlowupAngleReport {
  std::vector<BlowupAngleRow> rows;
  double base_angle = 0.0;
  double final_radians = 0.0;
  double final_abs_diff = 0.0;
};
BlowupAngleReport angle_stability_across_scales(const BlowupSequence& seq, double eps = 0.2,
                                                double rho = 0.5);

}  // namespace mmangle
