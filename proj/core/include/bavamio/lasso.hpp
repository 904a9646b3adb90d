#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "bavamio/dataset.hpp"
#include "bavamio/solver_linear.hpp"

namespace bavamio {

// Warm-started coordinate-descent path for the comparison baseline
//   ||y - X beta||^2 + lambda ||beta||_1          (linear)
//   deviance(beta) + lambda ||beta||_1            (logistic)
// The loss is un-halved, so thresholds carry lambda/2 and the all-zero
// solution holds for lambda >= 2 max_j |sum_i x_ij y_i|.
struct LassoPath {
  Eigen::VectorXd lambda_values;  // descending
  std::vector<Eigen::VectorXd> coefficients;
  Eigen::VectorXd cv_mean;   // empty unless a CV variant filled them
  Eigen::VectorXd cv_se;
  int selected = -1;
};

// Default grid: `size` log-spaced values from the null-model ceiling
// 2 max_j |x_j^T y| down to ceiling * 1e-4.
Eigen::VectorXd lasso_lambda_grid(const Dataset& d, int size);

// Logistic ceiling: 2 max_j |x_j^T (y - 1/2)| (stationarity of beta = 0).
Eigen::VectorXd lasso_logistic_lambda_grid(const Dataset& d, int size);

LassoPath fit_lasso(const Dataset& d, const Eigen::VectorXd& lambda_grid,
                    const SolverConfig& cfg);

LassoPath fit_lasso_logistic(const Dataset& d, const Eigen::VectorXd& lambda_grid,
                             const SolverConfig& cfg);

// Largest optimality violation across coordinates, in inner-product units
// normalized by the column curvature: 0 at an exact solution.
double kkt_residual(const Dataset& d, const Eigen::VectorXd& beta, double lambda);

// K-fold tuned variants; selection follows the one-standard-error rule
// (sparsest grid point within one SE of the best mean error).
LassoPath fit_lasso_cv(const Dataset& d, const Eigen::VectorXd& lambda_grid, int k_folds,
                       std::uint64_t seed, const SolverConfig& cfg);
LassoPath fit_lasso_logistic_cv(const Dataset& d, const Eigen::VectorXd& lambda_grid,
                                int k_folds, std::uint64_t seed, const SolverConfig& cfg);

}  // namespace bavamio
