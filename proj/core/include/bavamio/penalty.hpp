#pragma once

#include <Eigen/Dense>

namespace bavamio {

enum class NormKind { l0, l1, l2, linf };

// l0 counts entries that are bitwise nonzero.
double norm(const Eigen::VectorXd& v, NormKind kind);

// Smoothed support count for one coordinate:
//   log(1 + |v|/tau3) / log(1 + 1/tau3).
// Tends to the 0/1 indicator as tau3 -> 0 and to |v| as tau3 -> infinity.
double logsum_scalar(double v, double tau3);

// Sum of logsum_scalar over all coordinates.
double logsum(const Eigen::VectorXd& v, double tau3);

// Weight of the linearized penalty at beta_j:
//   phi_j = 1 / (log(1 + 1/tau3) * (|beta_j| + tau3)),  always > 0.
Eigen::VectorXd mm_weights(const Eigen::VectorXd& beta, double tau3);

// phi at beta_j = 0, the largest possible weight.
double mm_weight_at_zero(double tau3);

// Convex upper bound of logsum(beta) that is tangent at beta == anchor:
//   sum_j [ log(1+|anchor_j|/tau3) + (|beta_j|+tau3)/(|anchor_j|+tau3) - 1 ]
//     / log(1 + 1/tau3).
double majorizer(const Eigen::VectorXd& beta, const Eigen::VectorXd& anchor, double tau3);

// ST(a, b) = sign(a) * max(|a| - b, 0), b >= 0.
double soft_threshold(double a, double b);

// Penalty multiplier for one fit. rho is kept nonnegative: tuning is
// parametrized by the threshold psi >= 0 and rho recovered from it, so a
// negative value never reaches the solver.
struct PenaltySpec {
  double rho = 0.0;
  double tau3 = 1e-6;

  // rho such that the coordinate threshold at beta = 0 equals psi:
  // rho = 2 * psi / phi(0). Negative psi is clamped to the null penalty.
  static PenaltySpec from_threshold(double psi, double tau3);

  // 1 / log(1 + 1/tau3), the normalizer shared by logsum and its majorizer.
  double log_scale() const;
};

}  // namespace bavamio
