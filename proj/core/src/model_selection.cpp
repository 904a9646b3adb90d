#include "bavamio/model_selection.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "bavamio/errors.hpp"
#include "bavamio/parallel.hpp"
#include "bavamio/penalty.hpp"
#include "bavamio/rng.hpp"

namespace bavamio {

namespace {

Eigen::MatrixXd selected_columns(const Dataset& d, const Eigen::VectorXi& gamma,
                                 Eigen::Index support) {
  Eigen::MatrixXd xs(d.n_samples(), support);
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < gamma.size(); ++j)
    if (gamma[j] != 0) xs.col(k++) = d.x.col(j);
  return xs;
}

double log_marginal_from_parts(double n, double tau1, double tau2, double log_det,
                               double quad_form) {
  return -0.5 * n * std::log(std::numbers::pi) - 0.5 * log_det + tau1 * std::log(2.0 * tau2) -
         std::lgamma(tau1) + std::lgamma(0.5 * (n + 2.0 * tau1)) -
         0.5 * (n + 2.0 * tau1) * std::log(quad_form + 2.0 * tau2);
}

void check_marginal_inputs(const Dataset& d, const Eigen::VectorXi& gamma,
                           const Hyperparameters& h) {
  if (gamma.size() != d.n_covariates())
    throw DataError("marginal likelihood: gamma length does not match covariate count");
  if (!(h.lambda > 0.0 && h.tau1 > 0.0 && h.tau2 > 0.0))
    throw DataError("marginal likelihood requires lambda, tau1, tau2 > 0");
}

int select_one_se(const Eigen::VectorXd& mean_error, const Eigen::VectorXd& std_error) {
  int best = 0;
  for (int g = 1; g < mean_error.size(); ++g)
    if (mean_error[g] < mean_error[best]) best = g;
  double reach = mean_error[best] + std_error[best];
  // Grid is descending in psi, so the smallest index within reach is the
  // sparsest admissible fit.
  for (int g = 0; g <= best; ++g)
    if (mean_error[g] <= reach) return g;
  return best;
}

}  // namespace

TuningGrid build_grid(const Dataset& d, int grid_size, double lambda) {
  d.validate();
  if (grid_size < 2) throw DataError("build_grid requires at least 2 grid points");
  TuningGrid grid;
  grid.c_star = (d.x.transpose() * d.y).cwiseAbs().maxCoeff();
  if (grid.c_star == 0.0) {
    grid.psi_values = Eigen::VectorXd::Zero(1);
    return grid;
  }
  double floor = lambda > 0.0 ? 0.0 : grid.c_star * 1e-4;
  grid.psi_values.resize(grid_size);
  double step = (grid.c_star - floor) / static_cast<double>(grid_size - 1);
  for (int g = 0; g < grid_size; ++g)
    grid.psi_values[g] = grid.c_star - step * static_cast<double>(g);
  grid.psi_values[grid_size - 1] = floor;  // avoid round-off residue at the floor
  return grid;
}

double psi_threshold(double kappa, double sigma2, double lambda, double phi0) {
  if (!(kappa > 0.0 && kappa < 1.0)) throw DataError("psi_threshold requires kappa in (0,1)");
  if (!(sigma2 > 0.0 && lambda > 0.0 && phi0 > 0.0))
    throw DataError("psi_threshold requires sigma2, lambda, phi0 > 0");
  double ratio = (1.0 - kappa) / kappa;
  return 0.5 * sigma2 * std::log(2.0 * std::numbers::pi * sigma2 / lambda * ratio * ratio) * phi0;
}

double kappa_from_threshold(double c_star_point, double sigma2, double lambda, double phi0) {
  if (!(sigma2 > 0.0 && lambda > 0.0 && phi0 > 0.0))
    throw DataError("kappa_from_threshold requires sigma2, lambda, phi0 > 0");
  if (!(c_star_point >= 0.0)) throw DataError("kappa_from_threshold requires c* >= 0");
  double c_2 = 2.0 * c_star_point / (sigma2 * phi0) -
               std::log(2.0 * std::numbers::pi * sigma2 / lambda);
  return 1.0 / (1.0 + std::exp(0.5 * c_2));
}

namespace detail {

double log_marginal_small_support(const Dataset& d, const Eigen::VectorXi& gamma,
                                  const Hyperparameters& h) {
  check_marginal_inputs(d, gamma, h);
  const double n = static_cast<double>(d.n_samples());
  const Eigen::Index support = gamma.cast<Eigen::Index>().sum();
  if (support == 0)
    return log_marginal_from_parts(n, h.tau1, h.tau2, 0.0, d.y.squaredNorm());

  Eigen::MatrixXd xs = selected_columns(d, gamma, support);
  Eigen::MatrixXd gram = xs.transpose() * xs;  // |S| x |S|
  // Quadratic form via the matrix-inversion identity:
  //   y^T (I + lambda^{-1} X_S X_S^T)^{-1} y
  //     = y^T y - y^T X_S (X_S^T X_S + lambda I)^{-1} X_S^T y.
  Eigen::MatrixXd shifted = gram;
  shifted.diagonal().array() += h.lambda;
  Eigen::LLT<Eigen::MatrixXd> llt(shifted);
  if (llt.info() != Eigen::Success)
    throw DataError("marginal likelihood: factorization failed on the support block");
  Eigen::VectorXd xty = xs.transpose() * d.y;
  double quad = d.y.squaredNorm() - xty.dot(llt.solve(xty));

  // log|I + lambda^{-1} X_S^T X_S| = log|X_S^T X_S + lambda I| - |S| log lambda.
  double log_det = -static_cast<double>(support) * std::log(h.lambda);
  for (Eigen::Index k = 0; k < support; ++k)
    log_det += 2.0 * std::log(llt.matrixLLT()(k, k));
  return log_marginal_from_parts(n, h.tau1, h.tau2, log_det, quad);
}

double log_marginal_direct(const Dataset& d, const Eigen::VectorXi& gamma,
                           const Hyperparameters& h) {
  check_marginal_inputs(d, gamma, h);
  const auto n = d.n_samples();
  const Eigen::Index support = gamma.cast<Eigen::Index>().sum();
  if (support == 0)
    return log_marginal_from_parts(static_cast<double>(n), h.tau1, h.tau2, 0.0,
                                   d.y.squaredNorm());

  Eigen::MatrixXd xs = selected_columns(d, gamma, support);
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n);
  m.noalias() += xs * xs.transpose() / h.lambda;
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    throw DataError("marginal likelihood: factorization failed on the n x n form");
  double quad = d.y.dot(llt.solve(d.y));
  double log_det = 0.0;  // |I_n + lambda^{-1} X_S X_S^T| equals the |S| x |S| determinant
  for (Eigen::Index k = 0; k < n; ++k) log_det += 2.0 * std::log(llt.matrixLLT()(k, k));
  return log_marginal_from_parts(static_cast<double>(n), h.tau1, h.tau2, log_det, quad);
}

}  // namespace detail

double log_marginal_likelihood(const Dataset& d, const Eigen::VectorXi& gamma,
                               const Hyperparameters& h) {
  const Eigen::Index support = gamma.cast<Eigen::Index>().sum();
  return support < d.n_samples() ? detail::log_marginal_small_support(d, gamma, h)
                                 : detail::log_marginal_direct(d, gamma, h);
}

double log_bayes_factor(const Dataset& d, const Eigen::VectorXi& gamma_a,
                        const Eigen::VectorXi& gamma_b, const Hyperparameters& h) {
  return log_marginal_likelihood(d, gamma_a, h) - log_marginal_likelihood(d, gamma_b, h);
}

std::vector<int> cv_fold_assignment(Eigen::Index n, int k_folds, std::uint64_t seed) {
  if (k_folds < 2) throw DataError("cross validation requires K >= 2");
  if (k_folds > n) throw DataError("cross validation requires K <= n");
  Rng rng(seed);
  auto perm = random_permutation(rng, n);
  std::vector<int> fold(static_cast<std::size_t>(n));
  Eigen::Index base = n / k_folds;
  Eigen::Index remainder = n % k_folds;
  Eigen::Index pos = 0;
  for (int k = 0; k < k_folds; ++k) {
    Eigen::Index size = base + (k < remainder ? 1 : 0);
    for (Eigen::Index i = 0; i < size; ++i) fold[static_cast<std::size_t>(perm[pos++])] = k;
  }
  return fold;
}

CvResult cross_validate_with_folds(const Dataset& d, const Hyperparameters& h,
                                   const TuningGrid& grid, const std::vector<int>& folds,
                                   const SolverConfig& cfg) {
  d.validate();
  h.validate();
  const auto n = d.n_samples();
  if (static_cast<Eigen::Index>(folds.size()) != n)
    throw DataError("fold assignment length does not match sample count");
  int k_folds = 0;
  for (int f : folds) k_folds = std::max(k_folds, f + 1);
  std::vector<Eigen::Index> fold_sizes(static_cast<std::size_t>(k_folds), 0);
  for (int f : folds) {
    if (f < 0) throw DataError("negative fold label");
    ++fold_sizes[static_cast<std::size_t>(f)];
  }
  for (auto size : fold_sizes)
    if (size < 2) throw DataError("cross validation fold with fewer than 2 observations");

  const auto n_grid = grid.psi_values.size();
  CvResult result;
  result.fold_errors.resize(k_folds, n_grid);

  parallel_for(static_cast<std::size_t>(k_folds), [&](std::size_t k) {
    const auto fold_label = static_cast<int>(k);
    const auto held = fold_sizes[k];
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
      FitState fit = fit_map(train, h, grid.psi_values[g], cfg, &warm);
      warm = fit.beta;
      result.fold_errors(static_cast<Eigen::Index>(k), g) =
          (y_test - x_test * fit.beta).squaredNorm() / static_cast<double>(held);
    }
  });

  result.mean_error = result.fold_errors.colwise().mean();
  result.std_error.resize(n_grid);
  for (Eigen::Index g = 0; g < n_grid; ++g) {
    double mean = result.mean_error[g];
    double ss = (result.fold_errors.col(g).array() - mean).square().sum();
    result.std_error[g] =
        k_folds > 1 ? std::sqrt(ss / static_cast<double>(k_folds - 1) /
                                static_cast<double>(k_folds))
                    : 0.0;
  }
  result.selected = select_one_se(result.mean_error, result.std_error);
  return result;
}

CvResult cross_validate(const Dataset& d, const Hyperparameters& h, const TuningGrid& grid,
                        int k_folds, std::uint64_t seed, const SolverConfig& cfg) {
  return cross_validate_with_folds(d, h, grid, cv_fold_assignment(d.n_samples(), k_folds, seed),
                                   cfg);
}

PathResult fit_path(const Dataset& d, const Hyperparameters& h, const TuningGrid& grid,
                    const PathOptions& options, const SolverConfig& cfg) {
  d.validate();
  h.validate();
  if (grid.psi_values.size() == 0) throw DataError("fit_path requires a nonempty grid");

  PathResult path;
  path.c_star = grid.c_star;
  const auto n_grid = grid.psi_values.size();
  path.points.resize(static_cast<std::size_t>(n_grid));

  const double phi0 = mm_weight_at_zero(h.tau3);
  const Eigen::VectorXi null_gamma = Eigen::VectorXi::Zero(d.n_covariates());
  const double null_marginal =
      options.with_bayes_factor ? log_marginal_likelihood(d, null_gamma, h) : 0.0;

  Eigen::VectorXd warm = Eigen::VectorXd::Zero(d.n_covariates());
  for (Eigen::Index g = 0; g < n_grid; ++g) {
    auto& point = path.points[static_cast<std::size_t>(g)];
    point.psi = grid.psi_values[g];
    try {
      point.fit = fit_map(d, h, point.psi, cfg, &warm);
    } catch (const SolverDivergence& e) {
      std::ostringstream msg;
      msg << "grid point " << g + 1 << " of " << n_grid << " (psi = " << point.psi
          << "): " << e.what();
      throw SolverDivergence(msg.str());
    }
    warm = point.fit.beta;
    point.kappa_star = kappa_from_threshold(point.psi, point.fit.sigma2, h.lambda, phi0);
    if (options.with_bayes_factor) {
      point.log_marginal = log_marginal_likelihood(d, point.fit.gamma, h);
      point.log_bf_null = point.log_marginal - null_marginal;
    }
  }

  if (options.with_bayes_factor) {
    path.selected_bf = 0;
    for (Eigen::Index g = 1; g < n_grid; ++g)
      if (path.points[static_cast<std::size_t>(g)].log_bf_null >
          path.points[static_cast<std::size_t>(path.selected_bf)].log_bf_null)
        path.selected_bf = static_cast<int>(g);
  }

  if (options.with_cv) {
    CvResult cv = cross_validate(d, h, grid, options.cv_folds, options.seed, cfg);
    for (Eigen::Index g = 0; g < n_grid; ++g) {
      path.points[static_cast<std::size_t>(g)].cv_mean = cv.mean_error[g];
      path.points[static_cast<std::size_t>(g)].cv_se = cv.std_error[g];
    }
    path.selected_cv = cv.selected;
  }
  return path;
}

}  // namespace bavamio
