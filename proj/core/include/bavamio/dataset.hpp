#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bavamio/errors.hpp"

namespace bavamio {

// Sign with an exact zero branch: 1 for x > 0, -1 for x < 0, 0 for x == 0.
inline int sign(double x) { return (x > 0.0) - (x < 0.0); }

struct StandardizeRecord {
  Eigen::VectorXd column_means;   // length p
  Eigen::VectorXd column_scales;  // length p, strictly positive
  double response_center = 0.0;
  bool response_centered = false;
};

// A regression problem: dense n x p design (column-major, coordinate descent
// streams whole columns) plus the length-n response. Immutable once built;
// concurrent fits may share one Dataset freely.
struct Dataset {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  std::vector<std::string> column_names;  // empty when unnamed
  bool standardized = false;
  std::optional<StandardizeRecord> standardize_record;

  Eigen::Index n_samples() const { return x.rows(); }
  Eigen::Index n_covariates() const { return x.cols(); }

  // Throws DataError on shape mismatch, non-finite entries, or a
  // non-positive recorded scale.
  void validate() const;
};

// Reads a CSV file (header row required, comma delimited, '.' decimal,
// no missing values). The response column may be given by name or as a
// 1-based column index; all remaining columns become covariates in file
// order. Errors name the offending cell.
Dataset load_dataset(const std::string& path, const std::string& response_column);

// Reads a headered all-numeric CSV as a plain matrix (no response split).
Eigen::MatrixXd load_matrix_csv(const std::string& path,
                                std::vector<std::string>* names = nullptr);

struct StandardizeOptions {
  bool center_response = true;
  // With skip_constant, a zero-variance column is left centered at zero
  // (scale recorded as 1) rather than raising an error; any solver then
  // keeps its coefficient at exactly 0.
  bool skip_constant = false;
};

// Rescales every covariate column to sample mean 0 and unbiased (n-1)
// sample variance 1, optionally centering the response. The returned record
// inverts the transform exactly.
std::pair<Dataset, StandardizeRecord> standardize(const Dataset& d,
                                                  StandardizeOptions opt = {});

// Exact inverse of standardize (for round-trip checks).
Dataset unstandardize(const Dataset& d, const StandardizeRecord& rec);

struct OriginalScaleFit {
  Eigen::VectorXd beta;
  double intercept = 0.0;
};

// Maps coefficients fitted on standardized data back to the original scale;
// the intercept absorbs the column means and response center.
OriginalScaleFit to_original_scale(const Eigen::VectorXd& beta_standardized,
                                   const StandardizeRecord& rec);

// Hyperparameters of the spike-and-slab model: ridge weight lambda, the
// inverse-gamma pair (tau1, tau2) on the noise variance, the log-sum
// smoothing constant tau3, and the threshold-grid size.
struct Hyperparameters {
  double lambda = 0.0;
  double tau1 = 1.0;
  double tau2 = 1.0;
  double tau3 = 1e-6;
  int grid_size = 100;

  void validate() const;

  // Sample-size driven defaults: lambda = 1/sqrt(n),
  // tau1 = p*log(p)/sqrt(n) + 1, tau2 = tau1 - 1.
  static Hyperparameters defaults_for(Eigen::Index n, Eigen::Index p);
};

struct IterationCounters {
  int outer = 0;
  int mm = 0;
  int cd_sweeps = 0;
};

// Result of one MAP fit. gamma is always recomputed from beta
// (gamma[j] = 1 exactly when beta[j] != 0), never mutated independently.
struct FitState {
  Eigen::VectorXd beta;
  Eigen::VectorXi gamma;
  double sigma2 = 1.0;
  Eigen::VectorXd mm_weights;
  double threshold = 0.0;  // the active psi (rho grid value for GLM fits)
  IterationCounters iterations;
  bool cd_converged = true;
};

Eigen::VectorXi support_indicator(const Eigen::VectorXd& beta);
std::vector<Eigen::Index> support_set(const Eigen::VectorXd& beta);

}  // namespace bavamio
