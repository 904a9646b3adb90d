#include "bavamio/glm.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bavamio/errors.hpp"
#include "bavamio/model_selection.hpp"
#include "bavamio/parallel.hpp"
#include "bavamio/penalty.hpp"

namespace bavamio {

namespace {

double logistic_mean(double eta) { return 1.0 / (1.0 + std::exp(-eta)); }
double logistic_variance(double nu) { return nu * (1.0 - nu); }
double logistic_link(double nu) { return std::log(nu / (1.0 - nu)); }
double logistic_link_deriv(double nu) { return 1.0 / (nu * (1.0 - nu)); }
// log(1 + e^eta), overflow-safe.
double logistic_log_partition(double eta) {
  return std::max(eta, 0.0) + std::log1p(std::exp(-std::abs(eta)));
}

void check_binary_response(const Eigen::VectorXd& y) {
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (y[i] != 0.0 && y[i] != 1.0)
      throw DataError("logistic response must be 0 or 1; row " + std::to_string(i + 1) +
                      " has value " + std::to_string(y[i]));
}

// Fixed-weight objective the IRLS safeguard monitors:
//   -loglik + lambda/2 ||beta||^2 + rho sum_j phi_j |beta_j|.
double irls_objective(const Eigen::VectorXd& beta, const Dataset& d, const GlmFamily& family,
                      double lambda, double rho, const Eigen::VectorXd& phi) {
  double value = glm_negative_loglik(beta, d, family) + 0.5 * lambda * beta.squaredNorm();
  for (Eigen::Index j = 0; j < beta.size(); ++j) value += rho * phi[j] * std::abs(beta[j]);
  return value;
}

// Weighted coordinate descent on 1/2 sum w (z - X beta)^2 + lambda/2 ||beta||^2
// + rho sum phi |beta|, maintaining the working residual s = z - X beta.
void weighted_cd(const Dataset& d, const Eigen::VectorXd& w, double lambda, double rho,
                 const Eigen::VectorXd& phi, Eigen::VectorXd& beta, Eigen::VectorXd& s,
                 const SolverConfig& cfg, int& sweeps_used, bool& converged) {
  const auto p = d.n_covariates();
  Eigen::VectorXd w_col_sq(p);
  for (Eigen::Index j = 0; j < p; ++j)
    w_col_sq[j] = (d.x.col(j).array().square() * w.array()).sum();

  converged = false;
  int sweep = 0;
  for (; sweep < cfg.max_cd_sweeps; ++sweep) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      double denom = w_col_sq[j] + lambda;
      if (denom == 0.0) continue;
      double inner = (d.x.col(j).array() * w.array() * s.array()).sum() + w_col_sq[j] * beta[j];
      double updated = soft_threshold(inner, rho * phi[j]) / denom;
      double delta = updated - beta[j];
      if (delta != 0.0) {
        s.noalias() -= d.x.col(j) * delta;
        beta[j] = updated;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    if (max_change < cfg.cd_tol) {
      ++sweep;
      converged = true;
      break;
    }
  }
  sweeps_used += sweep;
}

}  // namespace

GlmFamily GlmFamily::logistic() {
  GlmFamily f;
  f.name = "logistic";
  f.varphi = 1.0;
  f.mean = logistic_mean;
  f.variance = logistic_variance;
  f.link = logistic_link;
  f.link_deriv = logistic_link_deriv;
  f.log_partition = logistic_log_partition;
  return f;
}

WorkingQuantities working_quantities(const GlmFamily& family, const Eigen::VectorXd& eta_lin,
                                     const Eigen::VectorXd& y) {
  if (eta_lin.size() != y.size()) throw DataError("working_quantities: length mismatch");
  const auto n = y.size();
  WorkingQuantities q;
  q.nu.resize(n);
  q.w.resize(n);
  q.r.resize(n);
  q.z.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double nu = std::clamp(family.mean(eta_lin[i]), kNuClamp, 1.0 - kNuClamp);
    double deriv = family.link_deriv(nu);
    q.nu[i] = nu;
    q.w[i] = std::max(1.0 / (deriv * deriv * family.variance(nu)), kWeightFloor);
    q.r[i] = (y[i] - nu) * deriv;
    q.z[i] = eta_lin[i] + q.r[i];
  }
  return q;
}

double glm_coordinate_update(Eigen::Index j, const IrlsState& state, const Dataset& d,
                             double lambda, double rho, double phi_j) {
  if (!(phi_j > 0.0)) throw DataError("glm_coordinate_update requires phi_j > 0");
  double w_col_sq = (d.x.col(j).array().square() * state.w.array()).sum();
  double denom = w_col_sq + lambda;
  if (denom == 0.0) throw DataError("glm_coordinate_update: zero denominator");
  Eigen::VectorXd partial = state.z - d.x * state.beta + d.x.col(j) * state.beta[j];
  double inner = (d.x.col(j).array() * state.w.array() * partial.array()).sum();
  return soft_threshold(inner, rho * phi_j) / denom;
}

double glm_negative_loglik(const Eigen::VectorXd& beta, const Dataset& d,
                           const GlmFamily& family) {
  Eigen::VectorXd eta = d.x * beta;
  double value = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i)
    value -= d.y[i] * eta[i] - family.log_partition(eta[i]);
  return value;
}

double glm_objective(const Eigen::VectorXd& beta, const Dataset& d, const GlmFamily& family,
                     double lambda, double rho, double tau3) {
  double value = glm_negative_loglik(beta, d, family) + 0.5 * lambda * beta.squaredNorm();
  if (rho != 0.0) value += rho * logsum(beta, tau3);
  return value;
}

Eigen::VectorXd glm_score(const Eigen::VectorXd& beta, const Dataset& d,
                          const GlmFamily& family) {
  WorkingQuantities q = working_quantities(family, d.x * beta, d.y);
  return d.x.transpose() * (q.w.array() * q.r.array()).matrix();
}

FitState fit_glm_map(const Dataset& d, const GlmFamily& family, double lambda, double rho,
                     double tau3, const SolverConfig& cfg, const Eigen::VectorXd* warm_start) {
  d.validate();
  cfg.validate();
  if (!(rho >= 0.0)) throw DataError("fit_glm_map requires rho >= 0");
  if (!(tau3 > 0.0)) throw DataError("fit_glm_map requires tau3 > 0");
  check_binary_response(d.y);

  const auto p = d.n_covariates();
  FitState state;
  state.beta = warm_start ? *warm_start : Eigen::VectorXd::Zero(p);
  state.threshold = rho;
  state.sigma2 = family.varphi;

  double current = glm_objective(state.beta, d, family, lambda, rho, tau3);
  std::vector<double> history{current};

  for (int mm = 0; mm < cfg.max_mm_iters; ++mm) {
    Eigen::VectorXd phi = mm_weights(state.beta, tau3);
    double irls_current = irls_objective(state.beta, d, family, lambda, rho, phi);

    for (int irls = 0; irls < cfg.max_irls_iters; ++irls) {
      WorkingQuantities q = working_quantities(family, d.x * state.beta, d.y);
      Eigen::VectorXd candidate = state.beta;
      Eigen::VectorXd s = q.z - d.x * candidate;
      bool converged = false;
      weighted_cd(d, q.w, lambda, rho, phi, candidate, s, cfg, state.iterations.cd_sweeps,
                  converged);
      state.cd_converged = state.cd_converged && converged;

      // The working-response step has no global guarantee; back off toward
      // the previous iterate until the fixed-weight objective stops rising.
      double value = irls_objective(candidate, d, family, lambda, rho, phi);
      int halvings = 0;
      while (value > irls_current && halvings < 10) {
        candidate = 0.5 * (candidate + state.beta);
        value = irls_objective(candidate, d, family, lambda, rho, phi);
        ++halvings;
      }
      if (value > irls_current) break;  // keep the previous iterate

      double step = (candidate - state.beta).lpNorm<Eigen::Infinity>();
      state.beta = std::move(candidate);
      irls_current = value;
      if (step < cfg.cd_tol) break;
    }

    ++state.iterations.mm;
    double next = glm_objective(state.beta, d, family, lambda, rho, tau3);
    history.push_back(next);
    if (next > current + 1e-8) {
      std::ostringstream msg;
      msg << "GLM objective increased across reweightings:";
      for (double v : history) msg << ' ' << v;
      throw InternalError(msg.str());
    }
    double decrease = current - next;
    current = next;
    if (decrease < cfg.mm_tol * std::max(std::abs(current), 1.0)) break;
  }

  state.gamma = support_indicator(state.beta);
  state.mm_weights = mm_weights(state.beta, tau3);
  ++state.iterations.outer;
  return state;
}

Eigen::VectorXd glm_rho_grid(const Dataset& d, const GlmFamily& family, double tau3,
                             int grid_size, double lambda) {
  if (grid_size < 2) throw DataError("glm_rho_grid requires at least 2 grid points");
  check_binary_response(d.y);
  WorkingQuantities q =
      working_quantities(family, Eigen::VectorXd::Zero(d.n_samples()), d.y);
  Eigen::VectorXd wz = (q.w.array() * q.z.array()).matrix();
  double ceiling = (d.x.transpose() * wz).cwiseAbs().maxCoeff() / mm_weight_at_zero(tau3);
  if (ceiling == 0.0) return Eigen::VectorXd::Zero(1);
  double floor = lambda > 0.0 ? 0.0 : ceiling * 1e-4;
  Eigen::VectorXd grid(grid_size);
  double step = (ceiling - floor) / static_cast<double>(grid_size - 1);
  for (int g = 0; g < grid_size; ++g) grid[g] = ceiling - step * static_cast<double>(g);
  grid[grid_size - 1] = floor;
  return grid;
}

std::vector<FitState> fit_glm_path(const Dataset& d, const GlmFamily& family, double lambda,
                                   const Eigen::VectorXd& rho_grid, double tau3,
                                   const SolverConfig& cfg) {
  std::vector<FitState> path;
  path.reserve(static_cast<std::size_t>(rho_grid.size()));
  Eigen::VectorXd warm = Eigen::VectorXd::Zero(d.n_covariates());
  for (Eigen::Index g = 0; g < rho_grid.size(); ++g) {
    path.push_back(fit_glm_map(d, family, lambda, rho_grid[g], tau3, cfg, &warm));
    warm = path.back().beta;
  }
  return path;
}

double binomial_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& nu) {
  if (y.size() != nu.size()) throw DataError("binomial_deviance: length mismatch");
  double total = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    double v = std::clamp(nu[i], kNuClamp, 1.0 - kNuClamp);
    total += -2.0 * (y[i] * std::log(v) + (1.0 - y[i]) * std::log1p(-v));
  }
  return total / static_cast<double>(y.size());
}

GlmCvResult glm_cross_validate(const Dataset& d, const GlmFamily& family, double lambda,
                               const Eigen::VectorXd& rho_grid, double tau3, int k_folds,
                               std::uint64_t seed, const SolverConfig& cfg) {
  d.validate();
  check_binary_response(d.y);
  const auto n = d.n_samples();
  const auto n_grid = rho_grid.size();
  auto folds = cv_fold_assignment(n, k_folds, seed);

  GlmCvResult result;
  result.fold_deviance.resize(k_folds, n_grid);

  parallel_for(static_cast<std::size_t>(k_folds), [&](std::size_t k) {
    const auto fold_label = static_cast<int>(k);
    Eigen::Index held = 0;
    for (int f : folds) held += (f == fold_label);
    Dataset train;
    train.x.resize(n - held, d.n_covariates());
    train.y.resize(n - held);
    Eigen::MatrixXd x_test(held, d.n_covariates());
    Eigen::VectorXd y_test(held);
    Eigen::Index it = 0, iv = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (folds[static_cast<std::size_t>(i)] == fold_label) {
        x_test.row(iv) = d.x.row(i);
        y_test[iv++] = d.y[i];
      } else {
        train.x.row(it) = d.x.row(i);
        train.y[it++] = d.y[i];
      }
    }
    Eigen::VectorXd warm = Eigen::VectorXd::Zero(d.n_covariates());
    for (Eigen::Index g = 0; g < n_grid; ++g) {
      FitState fit = fit_glm_map(train, family, lambda, rho_grid[g], tau3, cfg, &warm);
      warm = fit.beta;
      Eigen::VectorXd eta = x_test * fit.beta;
      Eigen::VectorXd nu(held);
      for (Eigen::Index i = 0; i < held; ++i) nu[i] = family.mean(eta[i]);
      result.fold_deviance(static_cast<Eigen::Index>(k), g) = binomial_deviance(y_test, nu);
    }
  });

  result.mean_deviance = result.fold_deviance.colwise().mean();
  result.std_error.resize(n_grid);
  for (Eigen::Index g = 0; g < n_grid; ++g) {
    double mean = result.mean_deviance[g];
    double ss = (result.fold_deviance.col(g).array() - mean).square().sum();
    result.std_error[g] =
        k_folds > 1
            ? std::sqrt(ss / static_cast<double>(k_folds - 1) / static_cast<double>(k_folds))
            : 0.0;
  }
  result.selected = 0;
  for (Eigen::Index g = 1; g < n_grid; ++g)
    if (result.mean_deviance[g] < result.mean_deviance[result.selected])
      result.selected = static_cast<int>(g);
  double reach = result.mean_deviance[result.selected] + result.std_error[result.selected];
  for (Eigen::Index g = 0; g <= result.selected; ++g) {
    if (result.mean_deviance[g] <= reach) {
      result.selected = static_cast<int>(g);
      break;
    }
  }
  return result;
}

}  // namespace bavamio
