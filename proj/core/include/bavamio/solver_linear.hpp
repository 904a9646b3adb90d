#pragma once

#include <Eigen/Dense>

#include "bavamio/dataset.hpp"

namespace bavamio {

struct SolverConfig {
  double cd_tol = 1e-7;    // max coefficient change over a full sweep
  double mm_tol = 1e-8;    // relative objective decrease between reweightings
  double outer_tol = 1e-6; // relative sigma^2 change
  int max_cd_sweeps = 1000;
  int max_mm_iters = 100;
  int max_outer_iters = 50;
  int max_irls_iters = 100;  // GLM working-response refreshes per reweighting

  void validate() const;
};

// Penalized least-squares objective (additive constant dropped):
//   ||y - X beta||^2 + lambda ||beta||^2 + rho * logsum(beta, tau3).
double objective(const Eigen::VectorXd& beta, const Dataset& d, double lambda, double rho,
                 double tau3);

// One exact coordinate minimization of the weighted-l1 subproblem:
//   (sum_i x_ij^2 + lambda)^{-1} ST(sum_i x_ij r_i,-j, rho*phi_j/2)
// where r_i,-j is the residual with coordinate j removed.
double coordinate_update(Eigen::Index j, const Eigen::VectorXd& beta, const Dataset& d,
                         double lambda, double rho, double phi_j);

struct WeightedLassoResult {
  Eigen::VectorXd beta;
  int sweeps = 0;
  bool converged = true;  // false when the sweep cap was exhausted
};

// Cyclic coordinate descent for
//   ||y - X beta||^2 + lambda ||beta||^2 + rho * sum_j phi_j |beta_j|,
// run until the largest coefficient change in a sweep drops below cd_tol.
WeightedLassoResult inner_weighted_lasso(const Dataset& d, double lambda, double rho,
                                         const Eigen::VectorXd& phi,
                                         const Eigen::VectorXd& beta_init,
                                         const SolverConfig& cfg);

// Largest per-coordinate optimality violation of the weighted-l1 subproblem,
// measured on the coefficient scale (distance to the coordinate fixed point).
double weighted_lasso_kkt_residual(const Dataset& d, const Eigen::VectorXd& beta, double lambda,
                                   double rho, const Eigen::VectorXd& phi);

struct MmResult {
  Eigen::VectorXd beta;
  int mm_iters = 0;
  int cd_sweeps = 0;
  bool cd_converged = true;
};

// Reweighting loop: phi <- mm_weights(beta), beta <- inner_weighted_lasso,
// until the relative decrease of objective() falls below mm_tol. The
// objective sequence is checked to be non-increasing (InternalError if it
// rises by more than 1e-10).
MmResult mm_solve(const Dataset& d, double lambda, double rho, double tau3,
                  const Eigen::VectorXd& beta_init, const SolverConfig& cfg);

// Posterior update of the noise variance:
//   [ ||y - X (gamma.*beta)||^2 + lambda sum_j gamma_j beta_j^2 + 2 tau2 ]
//     / [ n + sum_j gamma_j + 2 tau1 + 2 ].
double sigma2_update(const Eigen::VectorXd& beta, const Eigen::VectorXi& gamma, const Dataset& d,
                     double lambda, double tau1, double tau2);

// Full MAP fit at threshold psi: alternates the sigma^2 update with the
// reweighted solve (rho = 2*psi/phi(0), fixed for the whole fit) until the
// relative sigma^2 change drops below outer_tol. Throws SolverDivergence if
// sigma^2 exceeds 1e12 * var(y).
FitState fit_map(const Dataset& d, const Hyperparameters& h, double psi, const SolverConfig& cfg,
                 const Eigen::VectorXd* warm_start = nullptr);

// Closed-form ridge solution (X^T X + lambda I)^{-1} X^T y via a
// positive-definite factorization; lambda = 0 requires nonsingular X^T X.
Eigen::VectorXd ridge_solve(const Dataset& d, double lambda);

}  // namespace bavamio
