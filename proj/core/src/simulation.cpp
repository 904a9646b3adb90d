#include "bavamio/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "bavamio/csv.hpp"
#include "bavamio/errors.hpp"
#include "bavamio/glm.hpp"
#include "bavamio/lasso.hpp"
#include "bavamio/model_selection.hpp"
#include "bavamio/parallel.hpp"

namespace bavamio {

namespace {

Eigen::MatrixXd wishart_bartlett(Eigen::Index p, Rng& rng) {
  // Scale identity, p degrees of freedom: W = A A^T with A lower triangular,
  // A_ii^2 ~ chi^2(p - i), A_ij ~ N(0,1) below the diagonal.
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    a(i, i) = std::sqrt(rng.chi_squared(static_cast<int>(p - i)));
    for (Eigen::Index j = 0; j < i; ++j) a(i, j) = rng.normal();
  }
  return a * a.transpose();
}

Eigen::MatrixXd cholesky_lower(const Eigen::MatrixXd& sigma, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw DataError(std::string(what) + ": covariance is not positive definite");
  return llt.matrixL();
}

bool sign_match(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth) {
  for (Eigen::Index j = 0; j < truth.size(); ++j)
    if (sign(estimate[j]) != sign(truth[j])) return false;
  return true;
}

std::string sanitize(const std::string& s) {
  std::string out = s;
  for (char& c : out)
    if (c == ',' || c == '\n' || c == '\r') c = ' ';
  return out;
}

double resolved_sigma_y2(const SimulationConfig& cfg) {
  if (cfg.sigma_y2) return *cfg.sigma_y2;
  if (cfg.snr_target) {
    // Protocol targeting: active coefficients are standard normal, so the
    // expected signal energy is s0 and sigma_y2 = s0 / SNR^2.
    return static_cast<double>(cfg.s0) / (*cfg.snr_target * *cfg.snr_target);
  }
  return 1.0;
}

struct Slot {
  Metrics metrics;
  double realized_snr = 0.0;
  bool failed = false;
  std::string error;
};

std::vector<AggregateRecord> aggregate(const std::vector<Estimator>& estimators,
                                       const std::vector<ReplicateRecord>& rows) {
  std::vector<AggregateRecord> out;
  for (Estimator e : estimators) {
    AggregateRecord agg;
    agg.estimator = e;
    std::vector<Metrics> ok;
    for (const auto& row : rows) {
      if (row.estimator != e) continue;
      if (row.failed) {
        ++agg.n_failed;
      } else {
        ok.push_back(row.metrics);
      }
    }
    agg.n_ok = static_cast<int>(ok.size());
    if (!ok.empty()) {
      auto accumulate = [&](auto get) {
        double mean = 0.0;
        for (const auto& m : ok) mean += get(m);
        mean /= static_cast<double>(ok.size());
        double ss = 0.0;
        for (const auto& m : ok) ss += (get(m) - mean) * (get(m) - mean);
        double se = ok.size() > 1 ? std::sqrt(ss / static_cast<double>(ok.size() - 1) /
                                              static_cast<double>(ok.size()))
                                  : 0.0;
        return std::pair(mean, se);
      };
      std::tie(agg.mean.l2_dis, agg.std_error.l2_dis) =
          accumulate([](const Metrics& m) { return m.l2_dis; });
      std::tie(agg.mean.pmse, agg.std_error.pmse) =
          accumulate([](const Metrics& m) { return m.pmse; });
      std::tie(agg.mean.s_fpr, agg.std_error.s_fpr) =
          accumulate([](const Metrics& m) { return m.s_fpr; });
      std::tie(agg.mean_n_selected, agg.se_n_selected) =
          accumulate([](const Metrics& m) { return static_cast<double>(m.n_selected); });
      agg.mean.n_selected = static_cast<int>(std::lround(agg.mean_n_selected));
    }
    out.push_back(agg);
  }
  return out;
}

}  // namespace

CovarianceSpec CovarianceSpec::parse(const std::string& token) {
  CovarianceSpec spec;
  if (token == "identity") {
    spec.kind = Kind::identity;
    return spec;
  }
  if (token == "wishart") {
    spec.kind = Kind::wishart;
    return spec;
  }
  auto colon = token.find(':');
  if (colon != std::string::npos) {
    std::string head = token.substr(0, colon);
    std::string tail = token.substr(colon + 1);
    try {
      spec.r = std::stod(tail);
    } catch (...) {
      throw DataError("covariance token '" + token + "' has a non-numeric parameter");
    }
    if (head == "equi") {
      spec.kind = Kind::equicorrelated;
      return spec;
    }
    if (head == "toeplitz") {
      spec.kind = Kind::toeplitz;
      return spec;
    }
  }
  throw DataError("unknown covariance token '" + token +
                  "' (expected identity, equi:R, toeplitz:R, or wishart)");
}

std::string CovarianceSpec::to_string() const {
  switch (kind) {
    case Kind::identity:
      return "identity";
    case Kind::equicorrelated:
      return "equi:" + csv_double(r);
    case Kind::toeplitz:
      return "toeplitz:" + csv_double(r);
    case Kind::wishart:
      return "wishart";
  }
  return "?";
}

Eigen::MatrixXd sample_covariance(const CovarianceSpec& spec, Eigen::Index p,
                                  std::uint64_t seed) {
  if (p < 1) throw DataError("covariance dimension must be positive");
  Eigen::MatrixXd sigma;
  switch (spec.kind) {
    case CovarianceSpec::Kind::identity:
      sigma = Eigen::MatrixXd::Identity(p, p);
      break;
    case CovarianceSpec::Kind::equicorrelated: {
      if (!(spec.r > -1.0 / static_cast<double>(p - 1) && spec.r < 1.0))
        throw DataError("equicorrelated parameter outside (-1/(p-1), 1)");
      sigma = Eigen::MatrixXd::Constant(p, p, spec.r);
      sigma.diagonal().setOnes();
      break;
    }
    case CovarianceSpec::Kind::toeplitz: {
      if (!(spec.r > -1.0 && spec.r < 1.0))
        throw DataError("toeplitz parameter outside (-1, 1)");
      sigma.resize(p, p);
      for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = 0; j < p; ++j)
          sigma(i, j) = std::pow(spec.r, std::abs(static_cast<double>(i - j)));
      break;
    }
    case CovarianceSpec::Kind::wishart: {
      Rng rng(seed);
      sigma = wishart_bartlett(p, rng);
      break;
    }
  }
  cholesky_lower(sigma, "sample_covariance");  // positive-definiteness check
  return sigma;
}

Eigen::MatrixXd sample_design(const Eigen::MatrixXd& sigma, Eigen::Index n,
                              std::uint64_t seed) {
  Eigen::MatrixXd chol = cholesky_lower(sigma, "sample_design");
  Rng rng(seed);
  return sample_design(chol, n, rng);
}

Eigen::MatrixXd sample_design(const Eigen::MatrixXd& chol_lower, Eigen::Index n, Rng& rng) {
  Eigen::MatrixXd z = normal_matrix(rng, n, chol_lower.rows());
  return z * chol_lower.transpose();
}

double snr(const Eigen::VectorXd& beta, const Eigen::MatrixXd& sigma, double sigma_y2) {
  if (!(sigma_y2 > 0.0)) throw DataError("snr requires sigma_y2 > 0");
  return std::sqrt(beta.dot(sigma * beta) / sigma_y2);
}

IrrStatDetail irr_stat_detail(const Eigen::MatrixXd& x,
                              const std::vector<Eigen::Index>& support,
                              const Eigen::VectorXi& sign_beta) {
  const auto p = x.cols();
  if (support.empty() || static_cast<Eigen::Index>(support.size()) >= p)
    throw DataError("irr_stat requires a nonempty, proper support");
  if (static_cast<Eigen::Index>(support.size()) != sign_beta.size())
    throw DataError("irr_stat: sign vector length does not match support");

  std::vector<bool> active(static_cast<std::size_t>(p), false);
  for (auto j : support) {
    if (j < 0 || j >= p) throw DataError("irr_stat: support index out of range");
    active[static_cast<std::size_t>(j)] = true;
  }

  const auto q = static_cast<Eigen::Index>(support.size());
  Eigen::MatrixXd xs(x.rows(), q);
  for (Eigen::Index k = 0; k < q; ++k) xs.col(k) = x.col(support[static_cast<std::size_t>(k)]);

  Eigen::LLT<Eigen::MatrixXd> llt(xs.transpose() * xs);
  if (llt.info() != Eigen::Success)
    throw DataError("irr_stat: active-column Gram block is singular");
  Eigen::VectorXd solved = llt.solve(sign_beta.cast<double>());

  IrrStatDetail detail;
  detail.contributions.resize(p - q);
  Eigen::VectorXd xs_solved = xs * solved;
  double worst = -1.0;
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < p; ++j) {
    if (active[static_cast<std::size_t>(j)]) continue;
    double value = std::abs(x.col(j).dot(xs_solved));
    detail.contributions[k++] = value;
    if (value > worst) {
      worst = value;
      detail.argmax_column = j + 1;
    }
  }
  detail.stat = 1.0 - worst;
  return detail;
}

double irr_stat(const Eigen::MatrixXd& x, const std::vector<Eigen::Index>& support,
                const Eigen::VectorXi& sign_beta) {
  return irr_stat_detail(x, support, sign_beta).stat;
}

Metrics compute_metrics(const Eigen::VectorXd& beta_hat, const TrueModel& truth,
                        const Eigen::MatrixXd& x_test) {
  if (beta_hat.size() != truth.beta_true.size())
    throw DataError("compute_metrics: coefficient length mismatch");
  double truth_energy = truth.beta_true.squaredNorm();
  if (truth_energy == 0.0) throw DataError("compute_metrics: beta_true is identically zero");

  Metrics m;
  m.l2_dis = std::sqrt((beta_hat - truth.beta_true).squaredNorm() / truth_energy);
  m.pmse = (x_test * (beta_hat - truth.beta_true)).squaredNorm() /
           static_cast<double>(x_test.rows());
  int mismatched = 0;
  for (Eigen::Index j = 0; j < beta_hat.size(); ++j) {
    if (beta_hat[j] == 0.0) continue;
    ++m.n_selected;
    if (sign(beta_hat[j]) != sign(truth.beta_true[j])) ++mismatched;
  }
  m.s_fpr = m.n_selected == 0
                ? 0.0
                : static_cast<double>(mismatched) / static_cast<double>(m.n_selected);
  return m;
}

const char* estimator_name(Estimator e) {
  switch (e) {
    case Estimator::bmio_bf:
      return "bmio-bf";
    case Estimator::bmio_cv:
      return "bmio-cv";
    case Estimator::lasso_cv:
      return "lasso-cv";
  }
  return "?";
}

Estimator parse_estimator(const std::string& name) {
  if (name == "bmio-bf") return Estimator::bmio_bf;
  if (name == "bmio-cv") return Estimator::bmio_cv;
  if (name == "lasso-cv") return Estimator::lasso_cv;
  throw DataError("unknown estimator '" + name + "' (expected bmio-bf, bmio-cv, lasso-cv)");
}

Hyperparameters snr1_recipe(const Dataset& d) {
  const auto n = d.n_samples();
  const auto p = d.n_covariates();
  double y_mean = d.y.mean();
  double y_sd = std::sqrt((d.y.array() - y_mean).square().sum());
  std::vector<double> corr(static_cast<std::size_t>(p), 0.0);
  for (Eigen::Index j = 0; j < p; ++j) {
    double x_mean = d.x.col(j).mean();
    double x_sd = std::sqrt((d.x.col(j).array() - x_mean).square().sum());
    if (x_sd > 0.0 && y_sd > 0.0) {
      double cov = ((d.x.col(j).array() - x_mean) * (d.y.array() - y_mean)).sum();
      corr[static_cast<std::size_t>(j)] = std::abs(cov / (x_sd * y_sd));
    }
  }
  std::sort(corr.begin(), corr.end(), std::greater<>());
  auto top = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(0.1 * p)));
  double corr_hat = 0.0;
  for (std::size_t k = 0; k < top; ++k) corr_hat += corr[k];
  corr_hat /= static_cast<double>(top);
  // The recipe degenerates at corr_hat in {0, 1}; keep it in a sane band.
  corr_hat = std::clamp(corr_hat, 0.01, 0.99);

  double dn = static_cast<double>(n);
  double dp = static_cast<double>(p);
  double ratio = (1.0 - corr_hat) / corr_hat;
  Hyperparameters h;
  h.lambda = ratio * ratio * std::sqrt(dp / dn) * std::log(dp);
  h.tau1 = (corr_hat / (1.0 - corr_hat)) *
               std::pow(dp * std::log(dp) / std::sqrt(dn), corr_hat / std::log(dn)) +
           1.0;
  h.tau2 = (1.0 / std::sqrt(dn)) *
           std::pow(dp * std::log(dp) / std::sqrt(dn), 1.0 + corr_hat / std::log(dn));
  return h;
}

void SimulationConfig::validate() const {
  if (n < 2 || p < 1) throw DataError("simulation sizes must be positive (n >= 2, p >= 1)");
  if (s0 < 1 || s0 > p) throw DataError("active coefficient count must lie in [1, p]");
  if (replicates < 1) throw DataError("replicate count must be >= 1");
  if (pairs < 1) throw DataError("pair count must be >= 1");
  if (n_test_multiplier < 1) throw DataError("test multiplier must be >= 1");
  if (estimators.empty()) throw DataError("at least one estimator is required");
  if (sigma_y2 && !(*sigma_y2 > 0.0)) throw DataError("sigma_y2 must be > 0");
  if (snr_target && !(*snr_target > 0.0)) throw DataError("snr target must be > 0");
  solver.validate();
}

StudyOneReport run_study_one(const SimulationConfig& cfg) {
  cfg.validate();
  StudyOneReport report;
  report.study = "one";
  report.config = cfg;
  report.resolved_sigma_y2 = resolved_sigma_y2(cfg);

  const Eigen::MatrixXd sigma = sample_covariance(cfg.covariance, cfg.p, cfg.base_seed);
  const Eigen::MatrixXd chol = cholesky_lower(sigma, "run_study_one");
  const double sigma_y = std::sqrt(report.resolved_sigma_y2);

  const bool want_bf =
      std::count(cfg.estimators.begin(), cfg.estimators.end(), Estimator::bmio_bf) > 0;
  const bool want_bmio_cv =
      std::count(cfg.estimators.begin(), cfg.estimators.end(), Estimator::bmio_cv) > 0;
  const bool want_lasso =
      std::count(cfg.estimators.begin(), cfg.estimators.end(), Estimator::lasso_cv) > 0;

  const auto n_estimators = cfg.estimators.size();
  std::vector<Slot> slots(static_cast<std::size_t>(cfg.replicates) * n_estimators);

  parallel_for(static_cast<std::size_t>(cfg.replicates), [&](std::size_t r) {
    const std::uint64_t seed = cfg.base_seed + static_cast<std::uint64_t>(r);
    Rng rng(seed);

    TrueModel truth;
    truth.beta_true = Eigen::VectorXd::Zero(cfg.p);
    for (int j = 0; j < cfg.s0; ++j) {
      truth.beta_true[j] = rng.normal();
      truth.support.push_back(j);
    }
    truth.sigma_y2 = report.resolved_sigma_y2;

    Dataset d;
    d.x = sample_design(chol, cfg.n, rng);
    Eigen::VectorXd eps = normal_vector(rng, cfg.n) * sigma_y;
    d.y = d.x * truth.beta_true + eps;
    Eigen::MatrixXd x_test = sample_design(chol, cfg.n * cfg.n_test_multiplier, rng);
    double realized = snr(truth.beta_true, sigma, truth.sigma_y2);

    auto slot_for = [&](Estimator e) -> Slot& {
      auto it = std::find(cfg.estimators.begin(), cfg.estimators.end(), e);
      auto offset = static_cast<std::size_t>(it - cfg.estimators.begin());
      return slots[r * n_estimators + offset];
    };

    if (want_bf || want_bmio_cv) {
      Hyperparameters h = cfg.recipe == HyperRecipe::snr1
                              ? snr1_recipe(d)
                              : Hyperparameters::defaults_for(cfg.n, cfg.p);
      h.grid_size = cfg.grid_size;
      try {
        TuningGrid grid = build_grid(d, cfg.grid_size, h.lambda);
        PathOptions options;
        options.with_bayes_factor = want_bf;
        options.with_cv = want_bmio_cv;
        options.cv_folds = cfg.cv_folds;
        options.seed = seed;
        PathResult path = fit_path(d, h, grid, options, cfg.solver);
        if (want_bf) {
          Slot& s = slot_for(Estimator::bmio_bf);
          s.metrics = compute_metrics(
              path.points[static_cast<std::size_t>(path.selected_bf)].fit.beta, truth, x_test);
          s.realized_snr = realized;
        }
        if (want_bmio_cv) {
          Slot& s = slot_for(Estimator::bmio_cv);
          s.metrics = compute_metrics(
              path.points[static_cast<std::size_t>(path.selected_cv)].fit.beta, truth, x_test);
          s.realized_snr = realized;
        }
      } catch (const std::exception& e) {
        for (Estimator est : {Estimator::bmio_bf, Estimator::bmio_cv}) {
          if ((est == Estimator::bmio_bf && !want_bf) ||
              (est == Estimator::bmio_cv && !want_bmio_cv))
            continue;
          Slot& s = slot_for(est);
          s.failed = true;
          s.error = e.what();
          s.realized_snr = realized;
        }
      }
    }

    if (want_lasso) {
      Slot& s = slot_for(Estimator::lasso_cv);
      s.realized_snr = realized;
      try {
        Eigen::VectorXd grid = lasso_lambda_grid(d, cfg.grid_size);
        LassoPath path = fit_lasso_cv(d, grid, cfg.cv_folds, seed, cfg.solver);
        s.metrics = compute_metrics(
            path.coefficients[static_cast<std::size_t>(path.selected)], truth, x_test);
      } catch (const std::exception& e) {
        s.failed = true;
        s.error = e.what();
      }
    }
  });

  for (int r = 0; r < cfg.replicates; ++r) {
    for (std::size_t e = 0; e < n_estimators; ++e) {
      const Slot& s = slots[static_cast<std::size_t>(r) * n_estimators + e];
      ReplicateRecord row;
      row.replicate = r;
      row.estimator = cfg.estimators[e];
      row.metrics = s.metrics;
      row.realized_snr = s.realized_snr;
      row.failed = s.failed;
      row.error = s.error;
      report.rows.push_back(std::move(row));
    }
  }
  report.aggregates = aggregate(cfg.estimators, report.rows);
  return report;
}

StudyOneReport run_study_glm(const SimulationConfig& cfg) {
  cfg.validate();
  for (Estimator e : cfg.estimators)
    if (e == Estimator::bmio_bf)
      throw DataError("the logistic study has no closed-form Bayes factor; "
                      "use bmio-cv and/or lasso-cv");

  StudyOneReport report;
  report.study = "glm";
  report.config = cfg;
  report.resolved_sigma_y2 = 0.0;

  const Eigen::MatrixXd sigma = sample_covariance(cfg.covariance, cfg.p, cfg.base_seed);
  const Eigen::MatrixXd chol = cholesky_lower(sigma, "run_study_glm");
  const GlmFamily family = GlmFamily::logistic();
  const double lambda = 1.0 / std::sqrt(static_cast<double>(cfg.n));

  const bool want_bmio_cv =
      std::count(cfg.estimators.begin(), cfg.estimators.end(), Estimator::bmio_cv) > 0;
  const bool want_lasso =
      std::count(cfg.estimators.begin(), cfg.estimators.end(), Estimator::lasso_cv) > 0;

  const auto n_estimators = cfg.estimators.size();
  std::vector<Slot> slots(static_cast<std::size_t>(cfg.replicates) * n_estimators);

  parallel_for(static_cast<std::size_t>(cfg.replicates), [&](std::size_t r) {
    const std::uint64_t seed = cfg.base_seed + static_cast<std::uint64_t>(r);
    Rng rng(seed);

    TrueModel truth;
    truth.beta_true = Eigen::VectorXd::Zero(cfg.p);
    for (int j = 0; j < cfg.s0; ++j) {
      truth.beta_true[j] = rng.normal();
      truth.support.push_back(j);
    }
    truth.sigma_y2 = 1.0;

    Dataset d;
    d.x = sample_design(chol, cfg.n, rng);
    Eigen::VectorXd eta = d.x * truth.beta_true;
    d.y.resize(cfg.n);
    for (Eigen::Index i = 0; i < cfg.n; ++i)
      d.y[i] = rng.uniform() < family.mean(eta[i]) ? 1.0 : 0.0;
    Eigen::MatrixXd x_test = sample_design(chol, cfg.n * cfg.n_test_multiplier, rng);

    auto slot_for = [&](Estimator e) -> Slot& {
      auto it = std::find(cfg.estimators.begin(), cfg.estimators.end(), e);
      auto offset = static_cast<std::size_t>(it - cfg.estimators.begin());
      return slots[r * n_estimators + offset];
    };

    if (want_bmio_cv) {
      Slot& s = slot_for(Estimator::bmio_cv);
      try {
        Eigen::VectorXd rho_grid =
            glm_rho_grid(d, family, Hyperparameters{}.tau3, cfg.grid_size, lambda);
        GlmCvResult cv = glm_cross_validate(d, family, lambda, rho_grid,
                                            Hyperparameters{}.tau3, cfg.cv_folds, seed,
                                            cfg.solver);
        auto path = fit_glm_path(d, family, lambda, rho_grid, Hyperparameters{}.tau3,
                                 cfg.solver);
        s.metrics = compute_metrics(path[static_cast<std::size_t>(cv.selected)].beta, truth,
                                    x_test);
      } catch (const std::exception& e) {
        s.failed = true;
        s.error = e.what();
      }
    }

    if (want_lasso) {
      Slot& s = slot_for(Estimator::lasso_cv);
      try {
        Eigen::VectorXd grid = lasso_logistic_lambda_grid(d, cfg.grid_size);
        LassoPath path = fit_lasso_logistic_cv(d, grid, cfg.cv_folds, seed, cfg.solver);
        s.metrics = compute_metrics(
            path.coefficients[static_cast<std::size_t>(path.selected)], truth, x_test);
      } catch (const std::exception& e) {
        s.failed = true;
        s.error = e.what();
      }
    }
  });

  for (int r = 0; r < cfg.replicates; ++r) {
    for (std::size_t e = 0; e < n_estimators; ++e) {
      const Slot& s = slots[static_cast<std::size_t>(r) * n_estimators + e];
      ReplicateRecord row;
      row.replicate = r;
      row.estimator = cfg.estimators[e];
      row.metrics = s.metrics;
      row.realized_snr = s.realized_snr;
      row.failed = s.failed;
      row.error = s.error;
      report.rows.push_back(std::move(row));
    }
  }
  report.aggregates = aggregate(cfg.estimators, report.rows);
  return report;
}

StudyTwoReport run_study_two(const SimulationConfig& cfg) {
  cfg.validate();
  StudyTwoReport report;
  report.config = cfg;
  report.pairs.resize(static_cast<std::size_t>(cfg.pairs));
  report.successes.resize(static_cast<std::size_t>(cfg.pairs));

  const auto reps = static_cast<std::uint64_t>(cfg.replicates);

  parallel_for(static_cast<std::size_t>(cfg.pairs), [&](std::size_t k) {
    // Disjoint seed blocks: pair k owns [base + k(R+1), base + (k+1)(R+1)).
    const std::uint64_t pair_seed = cfg.base_seed + static_cast<std::uint64_t>(k) * (reps + 1);
    Rng pair_rng(pair_seed);

    Eigen::MatrixXd sigma = cfg.covariance.kind == CovarianceSpec::Kind::wishart
                                ? wishart_bartlett(cfg.p, pair_rng)
                                : sample_covariance(cfg.covariance, cfg.p, pair_seed);
    Eigen::MatrixXd chol = cholesky_lower(sigma, "run_study_two");

    TrueModel truth;
    truth.beta_true = Eigen::VectorXd::Zero(cfg.p);
    Eigen::VectorXi signs(cfg.s0);
    for (int j = 0; j < cfg.s0; ++j) {
      truth.beta_true[j] = pair_rng.normal();
      truth.support.push_back(j);
      signs[j] = sign(truth.beta_true[j]);
    }

    Eigen::MatrixXd x_irr = sample_design(chol, cfg.irr_design_rows, pair_rng);
    PairRecord& pair = report.pairs[k];
    pair.pair = static_cast<int>(k);
    pair.irr_stat = irr_stat(x_irr, truth.support, signs);

    double signal = truth.beta_true.dot(sigma * truth.beta_true);
    pair.sigma_y2 = cfg.sigma_y2
                        ? *cfg.sigma_y2
                        : signal / (cfg.snr_target.value_or(10.0) * cfg.snr_target.value_or(10.0));
    double sigma_y = std::sqrt(pair.sigma_y2);

    Hyperparameters h = Hyperparameters::defaults_for(cfg.n, cfg.p);
    h.grid_size = cfg.grid_size;

    std::vector<int> bmio_success(static_cast<std::size_t>(cfg.replicates), 0);
    std::vector<int> lasso_success(static_cast<std::size_t>(cfg.replicates), 0);
    for (int r = 0; r < cfg.replicates; ++r) {
      Rng rep_rng(pair_seed + 1 + static_cast<std::uint64_t>(r));
      Dataset d;
      d.x = sample_design(chol, cfg.n, rep_rng);
      d.y = d.x * truth.beta_true + normal_vector(rep_rng, cfg.n) * sigma_y;

      try {
        TuningGrid grid = build_grid(d, cfg.grid_size, h.lambda);
        PathOptions options;
        options.with_bayes_factor = false;
        PathResult path = fit_path(d, h, grid, options, cfg.solver);
        for (const auto& point : path.points) {
          if (sign_match(point.fit.beta, truth.beta_true)) {
            bmio_success[static_cast<std::size_t>(r)] = 1;
            break;
          }
        }
      } catch (const std::exception&) {
        // counted as a miss
      }

      try {
        Eigen::VectorXd grid = lasso_lambda_grid(d, cfg.grid_size);
        LassoPath path = fit_lasso(d, grid, cfg.solver);
        for (const auto& beta : path.coefficients) {
          if (sign_match(beta, truth.beta_true)) {
            lasso_success[static_cast<std::size_t>(r)] = 1;
            break;
          }
        }
      } catch (const std::exception&) {
      }
    }

    auto mean_of = [&](const std::vector<int>& v) {
      double total = 0.0;
      for (int s : v) total += s;
      return total / static_cast<double>(v.size());
    };
    pair.probability["bmio"] = mean_of(bmio_success);
    pair.probability["lasso"] = mean_of(lasso_success);
    report.successes[k]["bmio"] = std::move(bmio_success);
    report.successes[k]["lasso"] = std::move(lasso_success);
  });

  Eigen::VectorXd stats(cfg.pairs);
  for (int k = 0; k < cfg.pairs; ++k) stats[k] = report.pairs[static_cast<std::size_t>(k)].irr_stat;
  for (const char* name : {"bmio", "lasso"}) {
    Eigen::VectorXd probs(cfg.pairs);
    for (int k = 0; k < cfg.pairs; ++k)
      probs[k] = report.pairs[static_cast<std::size_t>(k)].probability.at(name);
    double tau = kendall_tau_b(probs, stats);
    report.kendall_tau_squared[name] = tau * tau;
  }
  return report;
}

double kendall_tau_b(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw DataError("kendall_tau_b: length mismatch");
  const auto n = a.size();
  long long concordant = 0, discordant = 0, ties_a = 0, ties_b = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double da = a[i] - a[j];
      double db = b[i] - b[j];
      if (da == 0.0 && db == 0.0) {
        ++ties_a;
        ++ties_b;
      } else if (da == 0.0) {
        ++ties_a;
      } else if (db == 0.0) {
        ++ties_b;
      } else if (da * db > 0.0) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }
  double n0 = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  double denom = std::sqrt((n0 - static_cast<double>(ties_a)) *
                           (n0 - static_cast<double>(ties_b)));
  if (denom == 0.0) return 0.0;
  return static_cast<double>(concordant - discordant) / denom;
}

void write_study_one_csvs(const StudyOneReport& report, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const auto& cfg = report.config;
  {
    CsvWriter w(out_dir + "/replicates.csv");
    w.raw_row(
        "study,cov,n,p,s0,sigma_y2,estimator,replicate,failed,l2_dis,pmse,s_fpr,n_selected,"
        "realized_snr,error");
    for (const auto& row : report.rows) {
      w.row(report.study, cfg.covariance.to_string(), static_cast<long long>(cfg.n),
            static_cast<long long>(cfg.p), cfg.s0, report.resolved_sigma_y2,
            estimator_name(row.estimator), row.replicate, row.failed ? 1 : 0,
            row.failed ? std::nan("") : row.metrics.l2_dis,
            row.failed ? std::nan("") : row.metrics.pmse,
            row.failed ? std::nan("") : row.metrics.s_fpr, row.metrics.n_selected,
            row.realized_snr, sanitize(row.error));
    }
  }
  {
    CsvWriter w(out_dir + "/aggregate.csv");
    w.raw_row(
        "estimator,n_ok,n_failed,l2_dis_mean,l2_dis_se,pmse_mean,pmse_se,s_fpr_mean,s_fpr_se,"
        "n_selected_mean,n_selected_se");
    for (const auto& agg : report.aggregates) {
      w.row(estimator_name(agg.estimator), agg.n_ok, agg.n_failed, agg.mean.l2_dis,
            agg.std_error.l2_dis, agg.mean.pmse, agg.std_error.pmse, agg.mean.s_fpr,
            agg.std_error.s_fpr, agg.mean_n_selected, agg.se_n_selected);
    }
  }
}

void write_study_two_csvs(const StudyTwoReport& report, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  {
    CsvWriter w(out_dir + "/replicates.csv");
    w.raw_row("pair,estimator,replicate,success");
    for (std::size_t k = 0; k < report.successes.size(); ++k) {
      for (const auto& [name, flags] : report.successes[k]) {
        for (std::size_t r = 0; r < flags.size(); ++r)
          w.row(static_cast<int>(k), name, static_cast<int>(r), flags[r]);
      }
    }
  }
  {
    CsvWriter w(out_dir + "/irrstat.csv");
    w.raw_row("pair,irr_stat,sigma_y2,estimator,probability");
    for (const auto& pair : report.pairs)
      for (const auto& [name, prob] : pair.probability)
        w.row(pair.pair, pair.irr_stat, pair.sigma_y2, name, prob);
  }
  {
    CsvWriter w(out_dir + "/aggregate.csv");
    w.raw_row("estimator,kendall_tau_squared,mean_probability");
    for (const auto& [name, tau2] : report.kendall_tau_squared) {
      double mean_prob = 0.0;
      for (const auto& pair : report.pairs) mean_prob += pair.probability.at(name);
      mean_prob /= static_cast<double>(report.pairs.size());
      w.row(name, tau2, mean_prob);
    }
  }
}

}  // namespace bavamio
