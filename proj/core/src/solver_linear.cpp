#include "bavamio/solver_linear.hpp"

#include <cmath>
#include <sstream>

#include "bavamio/errors.hpp"
#include "bavamio/penalty.hpp"

namespace bavamio {

namespace {

constexpr int kResidualRefreshSweeps = 50;  // bound incremental-update drift

void check_columns_usable(const Eigen::VectorXd& col_sq, double lambda) {
  if (lambda > 0.0) return;
  for (Eigen::Index j = 0; j < col_sq.size(); ++j)
    if (col_sq[j] == 0.0)
      throw DataError("column " + std::to_string(j + 1) +
                      " is identically zero and lambda = 0 gives a zero denominator");
}

// Core CD loop on a maintained residual. beta and residual are updated in
// place; returns the number of sweeps used.
int cd_sweeps(const Dataset& d, double lambda, double rho, const Eigen::VectorXd& phi,
              const Eigen::VectorXd& col_sq, Eigen::VectorXd& beta, Eigen::VectorXd& residual,
              const SolverConfig& cfg, bool& converged) {
  const auto p = d.n_covariates();
  converged = false;
  int sweep = 0;
  for (; sweep < cfg.max_cd_sweeps; ++sweep) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      double denom = col_sq[j] + lambda;
      if (denom == 0.0) continue;  // all-zero column, coefficient stays 0
      double inner = d.x.col(j).dot(residual) + col_sq[j] * beta[j];
      double updated = soft_threshold(inner, 0.5 * rho * phi[j]) / denom;
      double delta = updated - beta[j];
      if (delta != 0.0) {
        residual.noalias() -= d.x.col(j) * delta;
        beta[j] = updated;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    if ((sweep + 1) % kResidualRefreshSweeps == 0)
      residual = d.y - d.x * beta;
    if (max_change < cfg.cd_tol) {
      ++sweep;
      converged = true;
      break;
    }
  }
  return sweep;
}

}  // namespace

void SolverConfig::validate() const {
  if (!(cd_tol > 0.0 && mm_tol > 0.0 && outer_tol > 0.0))
    throw DataError("solver tolerances must be > 0");
  if (max_cd_sweeps < 1 || max_mm_iters < 1 || max_outer_iters < 1 || max_irls_iters < 1)
    throw DataError("solver iteration caps must be >= 1");
}

double objective(const Eigen::VectorXd& beta, const Dataset& d, double lambda, double rho,
                 double tau3) {
  double rss = (d.y - d.x * beta).squaredNorm();
  double ridge = lambda * beta.squaredNorm();
  double penalty = rho == 0.0 ? 0.0 : rho * logsum(beta, tau3);
  return rss + ridge + penalty;
}

double coordinate_update(Eigen::Index j, const Eigen::VectorXd& beta, const Dataset& d,
                         double lambda, double rho, double phi_j) {
  if (!(phi_j > 0.0)) throw DataError("coordinate_update requires phi_j > 0");
  double col_sq = d.x.col(j).squaredNorm();
  double denom = col_sq + lambda;
  if (denom == 0.0)
    throw DataError("column " + std::to_string(j + 1) + " is zero and lambda = 0");
  Eigen::VectorXd partial = d.y - d.x * beta + d.x.col(j) * beta[j];
  return soft_threshold(d.x.col(j).dot(partial), 0.5 * rho * phi_j) / denom;
}

WeightedLassoResult inner_weighted_lasso(const Dataset& d, double lambda, double rho,
                                         const Eigen::VectorXd& phi,
                                         const Eigen::VectorXd& beta_init,
                                         const SolverConfig& cfg) {
  cfg.validate();
  if ((phi.array() <= 0.0).any()) throw DataError("inner_weighted_lasso requires phi > 0");
  Eigen::VectorXd col_sq = d.x.colwise().squaredNorm();
  check_columns_usable(col_sq, lambda);

  WeightedLassoResult result;
  result.beta = beta_init;
  Eigen::VectorXd residual = d.y - d.x * result.beta;
  result.sweeps =
      cd_sweeps(d, lambda, rho, phi, col_sq, result.beta, residual, cfg, result.converged);
  return result;
}

double weighted_lasso_kkt_residual(const Dataset& d, const Eigen::VectorXd& beta, double lambda,
                                   double rho, const Eigen::VectorXd& phi) {
  Eigen::VectorXd residual = d.y - d.x * beta;
  double worst = 0.0;
  for (Eigen::Index j = 0; j < d.n_covariates(); ++j) {
    double col_sq = d.x.col(j).squaredNorm();
    double denom = col_sq + lambda;
    if (denom == 0.0) continue;
    double inner = d.x.col(j).dot(residual) + col_sq * beta[j];
    double fixed_point = soft_threshold(inner, 0.5 * rho * phi[j]) / denom;
    worst = std::max(worst, std::abs(beta[j] - fixed_point));
  }
  return worst;
}

MmResult mm_solve(const Dataset& d, double lambda, double rho, double tau3,
                  const Eigen::VectorXd& beta_init, const SolverConfig& cfg) {
  cfg.validate();
  if (!(tau3 > 0.0)) throw DataError("mm_solve requires tau3 > 0");
  Eigen::VectorXd col_sq = d.x.colwise().squaredNorm();
  check_columns_usable(col_sq, lambda);

  MmResult result;
  result.beta = beta_init;
  double current = objective(result.beta, d, lambda, rho, tau3);
  for (int iter = 0; iter < cfg.max_mm_iters; ++iter) {
    Eigen::VectorXd phi = mm_weights(result.beta, tau3);
    Eigen::VectorXd residual = d.y - d.x * result.beta;
    bool converged = false;
    result.cd_sweeps +=
        cd_sweeps(d, lambda, rho, phi, col_sq, result.beta, residual, cfg, converged);
    result.cd_converged = result.cd_converged && converged;
    ++result.mm_iters;

    double next = objective(result.beta, d, lambda, rho, tau3);
    if (next > current + 1e-10) {
      std::ostringstream msg;
      msg << "majorize-minimize objective increased from " << current << " to " << next
          << " at reweighting " << iter + 1;
      throw InternalError(msg.str());
    }
    double decrease = current - next;
    current = next;
    if (decrease < cfg.mm_tol * std::max(std::abs(current), 1.0)) break;
  }
  return result;
}

double sigma2_update(const Eigen::VectorXd& beta, const Eigen::VectorXi& gamma, const Dataset& d,
                     double lambda, double tau1, double tau2) {
  if (beta.size() != gamma.size() || beta.size() != d.n_covariates())
    throw DataError("sigma2_update: dimension mismatch");
  Eigen::VectorXd masked = beta;
  for (Eigen::Index j = 0; j < beta.size(); ++j)
    if (gamma[j] == 0) masked[j] = 0.0;
  double rss = (d.y - d.x * masked).squaredNorm();
  double ridge = lambda * masked.squaredNorm();
  double support = static_cast<double>(gamma.sum());
  double n = static_cast<double>(d.n_samples());
  return (rss + ridge + 2.0 * tau2) / (n + support + 2.0 * tau1 + 2.0);
}

FitState fit_map(const Dataset& d, const Hyperparameters& h, double psi, const SolverConfig& cfg,
                 const Eigen::VectorXd* warm_start) {
  d.validate();
  h.validate();
  cfg.validate();
  if (!(psi >= 0.0)) throw DataError("fit_map requires psi >= 0");

  const auto p = d.n_covariates();
  const double rho = PenaltySpec::from_threshold(psi, h.tau3).rho;
  const double n = static_cast<double>(d.n_samples());
  const double y_mean = d.y.mean();
  const double var_y = (d.y.array() - y_mean).square().sum() / std::max(n - 1.0, 1.0);
  const double sigma2_cap = 1e12 * std::max(var_y, 1e-300);

  FitState state;
  state.beta = warm_start ? *warm_start : Eigen::VectorXd::Zero(p);
  state.gamma = support_indicator(state.beta);
  state.threshold = psi;
  state.sigma2 = sigma2_update(state.beta, state.gamma, d, h.lambda, h.tau1, h.tau2);

  for (int outer = 0; outer < cfg.max_outer_iters; ++outer) {
    MmResult mm = mm_solve(d, h.lambda, rho, h.tau3, state.beta, cfg);
    state.beta = std::move(mm.beta);
    state.gamma = support_indicator(state.beta);
    state.iterations.mm += mm.mm_iters;
    state.iterations.cd_sweeps += mm.cd_sweeps;
    state.cd_converged = state.cd_converged && mm.cd_converged;
    ++state.iterations.outer;

    double sigma2_next = sigma2_update(state.beta, state.gamma, d, h.lambda, h.tau1, h.tau2);
    if (sigma2_next > sigma2_cap) {
      std::ostringstream msg;
      msg << "sigma^2 diverged (" << sigma2_next << " > 1e12 * var(y) = " << sigma2_cap
          << ") at threshold psi = " << psi;
      throw SolverDivergence(msg.str());
    }
    double rel_change = std::abs(sigma2_next - state.sigma2) / std::max(state.sigma2, 1e-300);
    state.sigma2 = sigma2_next;
    if (rel_change < cfg.outer_tol) break;
  }
  state.mm_weights = mm_weights(state.beta, h.tau3);
  return state;
}

Eigen::VectorXd ridge_solve(const Dataset& d, double lambda) {
  if (!(lambda >= 0.0)) throw DataError("ridge_solve requires lambda >= 0");
  const auto p = d.n_covariates();
  Eigen::MatrixXd gram = d.x.transpose() * d.x;
  gram.diagonal().array() += lambda;
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success)
    throw DataError(lambda == 0.0 ? "ridge_solve: X^T X is singular at lambda = 0"
                                  : "ridge_solve: factorization failed");
  Eigen::VectorXd rhs = d.x.transpose() * d.y;
  Eigen::VectorXd beta = llt.solve(rhs);
  if (!beta.allFinite() || p != beta.size())
    throw DataError("ridge_solve produced a non-finite solution");
  return beta;
}

}  // namespace bavamio
