#include "bavamio/lasso.hpp"

#include <algorithm>
#include <cmath>

#include "bavamio/errors.hpp"
#include "bavamio/glm.hpp"
#include "bavamio/model_selection.hpp"
#include "bavamio/parallel.hpp"
#include "bavamio/penalty.hpp"

namespace bavamio {

namespace {

void check_descending(const Eigen::VectorXd& grid) {
  if (grid.size() == 0) throw DataError("lasso grid is empty");
  for (Eigen::Index g = 1; g < grid.size(); ++g)
    if (!(grid[g] < grid[g - 1])) throw DataError("lasso grid must be strictly descending");
  if (grid[grid.size() - 1] < 0.0) throw DataError("lasso grid must be nonnegative");
}

Eigen::VectorXd log_spaced_grid(double ceiling, int size) {
  if (size < 2) throw DataError("lasso grid needs at least 2 values");
  if (ceiling <= 0.0) throw DataError("lasso grid ceiling is zero (response orthogonal to X)");
  Eigen::VectorXd grid(size);
  double log_top = std::log(ceiling);
  double log_bottom = std::log(ceiling * 1e-4);
  for (int g = 0; g < size; ++g)
    grid[g] = std::exp(log_top + (log_bottom - log_top) * static_cast<double>(g) /
                                     static_cast<double>(size - 1));
  return grid;
}

// Plain l1 coordinate descent on a maintained residual.
void lasso_cd(const Dataset& d, double lambda, const Eigen::VectorXd& col_sq,
              Eigen::VectorXd& beta, Eigen::VectorXd& residual, const SolverConfig& cfg) {
  for (int sweep = 0; sweep < cfg.max_cd_sweeps; ++sweep) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < d.n_covariates(); ++j) {
      if (col_sq[j] == 0.0) continue;
      double inner = d.x.col(j).dot(residual) + col_sq[j] * beta[j];
      double updated = soft_threshold(inner, 0.5 * lambda) / col_sq[j];
      double delta = updated - beta[j];
      if (delta != 0.0) {
        residual.noalias() -= d.x.col(j) * delta;
        beta[j] = updated;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    if (max_change < cfg.cd_tol) break;
  }
}

double logistic_l1_objective(const Eigen::VectorXd& beta, const Dataset& d,
                             const GlmFamily& family, double lambda) {
  return 2.0 * glm_negative_loglik(beta, d, family) + lambda * beta.lpNorm<1>();
}

// IRLS + l1 coordinate descent for one lambda, warm-started from beta.
void lasso_logistic_fit(const Dataset& d, const GlmFamily& family, double lambda,
                        Eigen::VectorXd& beta, const SolverConfig& cfg) {
  double current = logistic_l1_objective(beta, d, family, lambda);
  for (int irls = 0; irls < cfg.max_irls_iters; ++irls) {
    WorkingQuantities q = working_quantities(family, d.x * beta, d.y);
    Eigen::VectorXd candidate = beta;
    Eigen::VectorXd s = q.z - d.x * candidate;

    Eigen::VectorXd w_col_sq(d.n_covariates());
    for (Eigen::Index j = 0; j < d.n_covariates(); ++j)
      w_col_sq[j] = (d.x.col(j).array().square() * q.w.array()).sum();
    for (int sweep = 0; sweep < cfg.max_cd_sweeps; ++sweep) {
      double max_change = 0.0;
      for (Eigen::Index j = 0; j < d.n_covariates(); ++j) {
        if (w_col_sq[j] == 0.0) continue;
        double inner =
            (d.x.col(j).array() * q.w.array() * s.array()).sum() + w_col_sq[j] * candidate[j];
        double updated = soft_threshold(inner, 0.5 * lambda) / w_col_sq[j];
        double delta = updated - candidate[j];
        if (delta != 0.0) {
          s.noalias() -= d.x.col(j) * delta;
          candidate[j] = updated;
          max_change = std::max(max_change, std::abs(delta));
        }
      }
      if (max_change < cfg.cd_tol) break;
    }

    double value = logistic_l1_objective(candidate, d, family, lambda);
    int halvings = 0;
    while (value > current && halvings < 10) {
      candidate = 0.5 * (candidate + beta);
      value = logistic_l1_objective(candidate, d, family, lambda);
      ++halvings;
    }
    if (value > current) break;

    double step = (candidate - beta).lpNorm<Eigen::Infinity>();
    beta = std::move(candidate);
    current = value;
    if (step < cfg.cd_tol) break;
  }
}

int select_one_se(const Eigen::VectorXd& mean, const Eigen::VectorXd& se) {
  int best = 0;
  for (int g = 1; g < mean.size(); ++g)
    if (mean[g] < mean[best]) best = g;
  double reach = mean[best] + se[best];
  for (int g = 0; g <= best; ++g)
    if (mean[g] <= reach) return g;
  return best;
}

}  // namespace

Eigen::VectorXd lasso_lambda_grid(const Dataset& d, int size) {
  double ceiling = 2.0 * (d.x.transpose() * d.y).cwiseAbs().maxCoeff();
  return log_spaced_grid(ceiling, size);
}

Eigen::VectorXd lasso_logistic_lambda_grid(const Dataset& d, int size) {
  Eigen::VectorXd centered = d.y.array() - 0.5;
  double ceiling = 2.0 * (d.x.transpose() * centered).cwiseAbs().maxCoeff();
  return log_spaced_grid(ceiling, size);
}

LassoPath fit_lasso(const Dataset& d, const Eigen::VectorXd& lambda_grid,
                    const SolverConfig& cfg) {
  d.validate();
  cfg.validate();
  check_descending(lambda_grid);
  Eigen::VectorXd col_sq = d.x.colwise().squaredNorm();

  LassoPath path;
  path.lambda_values = lambda_grid;
  path.coefficients.reserve(static_cast<std::size_t>(lambda_grid.size()));
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(d.n_covariates());
  Eigen::VectorXd residual = d.y;
  for (Eigen::Index g = 0; g < lambda_grid.size(); ++g) {
    lasso_cd(d, lambda_grid[g], col_sq, beta, residual, cfg);
    residual = d.y - d.x * beta;  // clear incremental drift between grid points
    path.coefficients.push_back(beta);
  }
  return path;
}

LassoPath fit_lasso_logistic(const Dataset& d, const Eigen::VectorXd& lambda_grid,
                             const SolverConfig& cfg) {
  d.validate();
  cfg.validate();
  check_descending(lambda_grid);
  GlmFamily family = GlmFamily::logistic();

  LassoPath path;
  path.lambda_values = lambda_grid;
  path.coefficients.reserve(static_cast<std::size_t>(lambda_grid.size()));
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(d.n_covariates());
  for (Eigen::Index g = 0; g < lambda_grid.size(); ++g) {
    lasso_logistic_fit(d, family, lambda_grid[g], beta, cfg);
    path.coefficients.push_back(beta);
  }
  return path;
}

double kkt_residual(const Dataset& d, const Eigen::VectorXd& beta, double lambda) {
  if (beta.size() != d.n_covariates()) throw DataError("kkt_residual: dimension mismatch");
  Eigen::VectorXd residual = d.y - d.x * beta;
  double worst = 0.0;
  for (Eigen::Index j = 0; j < d.n_covariates(); ++j) {
    double col_sq = d.x.col(j).squaredNorm();
    if (col_sq == 0.0) continue;
    double inner = d.x.col(j).dot(residual);
    double violation = beta[j] == 0.0
                           ? std::max(0.0, std::abs(inner) - 0.5 * lambda)
                           : std::abs(inner - sign(beta[j]) * 0.5 * lambda);
    worst = std::max(worst, violation / col_sq);
  }
  return worst;
}

LassoPath fit_lasso_cv(const Dataset& d, const Eigen::VectorXd& lambda_grid, int k_folds,
                       std::uint64_t seed, const SolverConfig& cfg) {
  LassoPath path = fit_lasso(d, lambda_grid, cfg);
  const auto n = d.n_samples();
  const auto n_grid = lambda_grid.size();
  auto folds = cv_fold_assignment(n, k_folds, seed);

  Eigen::MatrixXd fold_errors(k_folds, n_grid);
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
    LassoPath fold_path = fit_lasso(train, lambda_grid, cfg);
    for (Eigen::Index g = 0; g < n_grid; ++g)
      fold_errors(static_cast<Eigen::Index>(k), g) =
          (y_test - x_test * fold_path.coefficients[static_cast<std::size_t>(g)]).squaredNorm() /
          static_cast<double>(held);
  });

  path.cv_mean = fold_errors.colwise().mean();
  path.cv_se.resize(n_grid);
  for (Eigen::Index g = 0; g < n_grid; ++g) {
    double ss = (fold_errors.col(g).array() - path.cv_mean[g]).square().sum();
    path.cv_se[g] = std::sqrt(ss / static_cast<double>(k_folds - 1) /
                              static_cast<double>(k_folds));
  }
  path.selected = select_one_se(path.cv_mean, path.cv_se);
  return path;
}

LassoPath fit_lasso_logistic_cv(const Dataset& d, const Eigen::VectorXd& lambda_grid,
                                int k_folds, std::uint64_t seed, const SolverConfig& cfg) {
  LassoPath path = fit_lasso_logistic(d, lambda_grid, cfg);
  GlmFamily family = GlmFamily::logistic();
  const auto n = d.n_samples();
  const auto n_grid = lambda_grid.size();
  auto folds = cv_fold_assignment(n, k_folds, seed);

  Eigen::MatrixXd fold_errors(k_folds, n_grid);
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
    LassoPath fold_path = fit_lasso_logistic(train, lambda_grid, cfg);
    for (Eigen::Index g = 0; g < n_grid; ++g) {
      Eigen::VectorXd eta = x_test * fold_path.coefficients[static_cast<std::size_t>(g)];
      Eigen::VectorXd nu(held);
      for (Eigen::Index i = 0; i < held; ++i) nu[i] = family.mean(eta[i]);
      fold_errors(static_cast<Eigen::Index>(k), g) = binomial_deviance(y_test, nu);
    }
  });

  path.cv_mean = fold_errors.colwise().mean();
  path.cv_se.resize(n_grid);
  for (Eigen::Index g = 0; g < n_grid; ++g) {
    double ss = (fold_errors.col(g).array() - path.cv_mean[g]).square().sum();
    path.cv_se[g] = std::sqrt(ss / static_cast<double>(k_folds - 1) /
                              static_cast<double>(k_folds));
  }
  path.selected = select_one_se(path.cv_mean, path.cv_se);
  return path;
}

}  // namespace bavamio
