#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bavamio/dataset.hpp"
#include "bavamio/rng.hpp"
#include "bavamio/solver_linear.hpp"

namespace bavamio {

struct CovarianceSpec {
  enum class Kind { identity, equicorrelated, toeplitz, wishart };
  Kind kind = Kind::identity;
  double r = 0.0;  // equicorrelated / toeplitz parameter

  // Accepts "identity", "equi:R", "toeplitz:R", "wishart".
  static CovarianceSpec parse(const std::string& token);
  std::string to_string() const;
};

// Deterministic covariance for fixed (spec, p, seed). The Wishart case draws
// scale-identity with p degrees of freedom through the Bartlett
// factorization; the fixed structures ignore the seed.
Eigen::MatrixXd sample_covariance(const CovarianceSpec& spec, Eigen::Index p,
                                  std::uint64_t seed);

// n rows i.i.d. MVN(0, sigma) as Z L^T with L the lower Cholesky factor.
Eigen::MatrixXd sample_design(const Eigen::MatrixXd& sigma, Eigen::Index n,
                              std::uint64_t seed);
Eigen::MatrixXd sample_design(const Eigen::MatrixXd& chol_lower, Eigen::Index n, Rng& rng);

// sqrt(beta^T Sigma beta / sigma_y2) for a fixed coefficient vector.
double snr(const Eigen::VectorXd& beta, const Eigen::MatrixXd& sigma, double sigma_y2);

// 1 - ||X_{S^c}^T X_S (X_S^T X_S)^{-1} sign_beta||_inf. The design condition
// is considered violated when the statistic is negative.
double irr_stat(const Eigen::MatrixXd& x, const std::vector<Eigen::Index>& support,
                const Eigen::VectorXi& sign_beta);

struct IrrStatDetail {
  double stat = 0.0;
  Eigen::VectorXd contributions;     // one per inactive column, in column order
  Eigen::Index argmax_column = -1;   // inactive column attaining the norm (1-based)
};
IrrStatDetail irr_stat_detail(const Eigen::MatrixXd& x,
                              const std::vector<Eigen::Index>& support,
                              const Eigen::VectorXi& sign_beta);

struct TrueModel {
  Eigen::VectorXd beta_true;
  std::vector<Eigen::Index> support;  // indices of nonzero entries
  double sigma_y2 = 1.0;
};

struct Metrics {
  double l2_dis = 0.0;  // ||bhat - b|| / ||b||
  double pmse = 0.0;    // ||X_test (bhat - b)||^2 / n_test
  double s_fpr = 0.0;   // selected coordinates whose sign disagrees; 0 if none selected
  int n_selected = 0;
};

Metrics compute_metrics(const Eigen::VectorXd& beta_hat, const TrueModel& truth,
                        const Eigen::MatrixXd& x_test);

enum class Estimator { bmio_bf, bmio_cv, lasso_cv };
const char* estimator_name(Estimator e);
Estimator parse_estimator(const std::string& name);

enum class HyperRecipe { defaults, snr1 };

// Hyperparameters for the low-signal recipe, driven by the average of the
// top-decile absolute response/covariate correlations.
Hyperparameters snr1_recipe(const Dataset& d);

struct SimulationConfig {
  Eigen::Index n = 100;
  Eigen::Index p = 120;
  int n_test_multiplier = 10;
  CovarianceSpec covariance;
  std::optional<double> sigma_y2;    // explicit noise variance, or
  std::optional<double> snr_target;  // resolved through the protocol
  int s0 = 10;                       // leading active coefficients
  int replicates = 1;
  int pairs = 30;                    // (Sigma, beta) pairs, design-condition study only
  std::uint64_t base_seed = 0;
  std::vector<Estimator> estimators{Estimator::bmio_bf, Estimator::bmio_cv,
                                    Estimator::lasso_cv};
  HyperRecipe recipe = HyperRecipe::defaults;
  int grid_size = 100;
  int cv_folds = 10;
  Eigen::Index irr_design_rows = 1000;
  SolverConfig solver;

  void validate() const;
};

struct ReplicateRecord {
  int replicate = 0;
  Estimator estimator = Estimator::bmio_bf;
  Metrics metrics;
  double realized_snr = 0.0;
  bool failed = false;
  std::string error;
};

struct AggregateRecord {
  Estimator estimator = Estimator::bmio_bf;
  Metrics mean;
  Metrics std_error;
  double mean_n_selected = 0.0;  // fractional mean of |S-hat|
  double se_n_selected = 0.0;
  int n_ok = 0;
  int n_failed = 0;
};

struct StudyOneReport {
  std::string study = "one";
  SimulationConfig config;
  double resolved_sigma_y2 = 0.0;  // 0 for the GLM study
  std::vector<ReplicateRecord> rows;
  std::vector<AggregateRecord> aggregates;
};

// Per replicate: fresh (beta, X, eps, y), one fit per requested estimator,
// metrics on an independent test design of n * multiplier rows. Replicate r
// uses seed base_seed + r. Fit failures are recorded, not fatal.
StudyOneReport run_study_one(const SimulationConfig& cfg);

// Logistic analogue: y ~ Bernoulli(mean(X beta)), estimators BMIO-CV and
// logistic Lasso-CV, lambda = 1/sqrt(n).
StudyOneReport run_study_glm(const SimulationConfig& cfg);

struct PairRecord {
  int pair = 0;
  double irr_stat = 0.0;
  double sigma_y2 = 0.0;
  std::map<std::string, double> probability;  // estimator -> P(path carries the true signs)
};

struct StudyTwoReport {
  SimulationConfig config;
  std::vector<PairRecord> pairs;
  // pair -> estimator -> per-replicate success flags
  std::vector<std::map<std::string, std::vector<int>>> successes;
  std::map<std::string, double> kendall_tau_squared;
};

// Per pair: Sigma ~ Wishart, beta with s0 leading N(0,1) entries, the
// statistic from one large design draw; per replicate a fresh (X, eps, y)
// and a success flag when some point of the estimator's path matches
// sign(beta_true) exactly. Reports squared Kendall tau between the pair
// probabilities and the statistics.
StudyTwoReport run_study_two(const SimulationConfig& cfg);

// Kendall tau-b (tie-corrected).
double kendall_tau_b(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// CSV emission (schemas documented in the README): replicates.csv and
// aggregate.csv for study one/glm; replicates.csv, irrstat.csv and
// aggregate.csv for study two.
void write_study_one_csvs(const StudyOneReport& report, const std::string& out_dir);
void write_study_two_csvs(const StudyTwoReport& report, const std::string& out_dir);

}  // namespace bavamio
