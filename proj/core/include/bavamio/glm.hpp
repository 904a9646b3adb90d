#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "bavamio/dataset.hpp"
#include "bavamio/solver_linear.hpp"

namespace bavamio {

// Exponential-family description used by the IRLS solver. Only the logistic
// family ships; the struct is the extension point for further families.
struct GlmFamily {
  const char* name = "logistic";
  double varphi = 1.0;  // dispersion, fixed (no prior is placed on it)

  double (*mean)(double eta);              // nu = b'(theta(eta))
  double (*variance)(double nu);           // b''(theta) as a function of nu
  double (*link)(double nu);               // eta(nu)
  double (*link_deriv)(double nu);         // eta'(nu)
  double (*log_partition)(double eta);     // b(theta(eta)), canonical link

  static GlmFamily logistic();
};

// Saturation guards: the mean is kept inside [kNuClamp, 1-kNuClamp] and the
// IRLS weights are floored, otherwise the working response is unbounded.
inline constexpr double kNuClamp = 1e-10;
inline constexpr double kWeightFloor = 1e-5;

struct WorkingQuantities {
  Eigen::VectorXd nu;  // fitted means, clamped
  Eigen::VectorXd w;   // IRLS weights 1/(eta'(nu)^2 b''), floored
  Eigen::VectorXd r;   // working residuals (y - nu) eta'(nu)
  Eigen::VectorXd z;   // working response eta + r
};

WorkingQuantities working_quantities(const GlmFamily& family, const Eigen::VectorXd& eta_lin,
                                     const Eigen::VectorXd& y);

struct IrlsState {
  Eigen::VectorXd beta;
  Eigen::VectorXd eta;
  Eigen::VectorXd z;
  Eigen::VectorXd w;
  Eigen::VectorXd mm_weights;
};

// One coordinate of the weighted subproblem:
//   (sum_i w_i x_ij^2 + lambda)^{-1} ST(sum_i x_ij w_i v_i,-j, rho * phi_j)
// with v_i,-j the working residual excluding coordinate j. Note the
// threshold is rho*phi_j, not rho*phi_j/2: the GLM loss carries a 1/2.
double glm_coordinate_update(Eigen::Index j, const IrlsState& state, const Dataset& d,
                             double lambda, double rho, double phi_j);

// Penalized negative log-likelihood with the smoothed support penalty:
//   -sum_i [y_i theta_i - b(theta_i)] + lambda/2 ||beta||^2 + rho logsum(beta).
double glm_objective(const Eigen::VectorXd& beta, const Dataset& d, const GlmFamily& family,
                     double lambda, double rho, double tau3);

double glm_negative_loglik(const Eigen::VectorXd& beta, const Dataset& d,
                           const GlmFamily& family);

// Score of the log-likelihood at beta, X^T W r (equals X^T (y - nu) under
// the canonical link).
Eigen::VectorXd glm_score(const Eigen::VectorXd& beta, const Dataset& d,
                          const GlmFamily& family);

// MAP fit at fixed penalty multiplier rho: reweighting loop outside, IRLS
// refresh + coordinate descent inside, with step-halving whenever an IRLS
// step raises the fixed-weight objective. The smoothed objective must not
// increase across reweightings (slack 1e-8), else InternalError with the
// step history. The returned FitState carries rho in `threshold` and the
// dispersion in `sigma2`.
FitState fit_glm_map(const Dataset& d, const GlmFamily& family, double lambda, double rho,
                     double tau3, const SolverConfig& cfg,
                     const Eigen::VectorXd* warm_start = nullptr);

// Descending penalty grid for GLM tuning. The ceiling makes the null model
// exactly stationary: rho_max = max_j |sum_i x_ij w0_i z0_i| / phi(0)
// evaluated at beta = 0. Floor is 0 when lambda > 0, else rho_max * 1e-4.
Eigen::VectorXd glm_rho_grid(const Dataset& d, const GlmFamily& family, double tau3,
                             int grid_size, double lambda);

// Warm-started fits along a descending rho grid.
std::vector<FitState> fit_glm_path(const Dataset& d, const GlmFamily& family, double lambda,
                                   const Eigen::VectorXd& rho_grid, double tau3,
                                   const SolverConfig& cfg);

// Mean binomial deviance, -2 [y log nu + (1-y) log(1-nu)] averaged over
// observations, with nu clamped.
double binomial_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& nu);

struct GlmCvResult {
  Eigen::MatrixXd fold_deviance;  // K x G
  Eigen::VectorXd mean_deviance;
  Eigen::VectorXd std_error;
  int selected = -1;  // one-standard-error rule, sparsest within reach
};

GlmCvResult glm_cross_validate(const Dataset& d, const GlmFamily& family, double lambda,
                               const Eigen::VectorXd& rho_grid, double tau3, int k_folds,
                               std::uint64_t seed, const SolverConfig& cfg);

}  // namespace bavamio
