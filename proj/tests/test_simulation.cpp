#include <doctest.h>

#include <cmath>
#include <fstream>

#include "bavamio/errors.hpp"
#include "bavamio/simulation.hpp"
#include "test_util.hpp"

using namespace bavamio;

TEST_SUITE_BEGIN("simulation");

TEST_CASE("covariance specs") {
  CHECK(CovarianceSpec::parse("identity").kind == CovarianceSpec::Kind::identity);
  CHECK(CovarianceSpec::parse("equi:0.5").r == doctest::Approx(0.5));
  CHECK(CovarianceSpec::parse("toeplitz:0.5").kind == CovarianceSpec::Kind::toeplitz);
  CHECK(CovarianceSpec::parse("wishart").kind == CovarianceSpec::Kind::wishart);
  CHECK_THROWS_AS(CovarianceSpec::parse("banded:2"), DataError);
  CHECK_THROWS_AS(CovarianceSpec::parse("equi:abc"), DataError);

  SUBCASE("identity matrix") {
    Eigen::MatrixXd sigma = sample_covariance(CovarianceSpec{}, 4, 0);
    CHECK(sigma.isApprox(Eigen::MatrixXd::Identity(4, 4)));
  }
  SUBCASE("toeplitz powers") {
    Eigen::MatrixXd sigma = sample_covariance(CovarianceSpec::parse("toeplitz:0.5"), 3, 0);
    Eigen::MatrixXd expected(3, 3);
    expected << 1, .5, .25, .5, 1, .5, .25, .5, 1;
    CHECK(sigma.isApprox(expected, 1e-14));
  }
  SUBCASE("equicorrelated bounds") {
    auto spec = CovarianceSpec::parse("equi:0.5");
    CHECK(sample_covariance(spec, 5, 0)(0, 1) == doctest::Approx(0.5));
    auto bad = CovarianceSpec::parse("equi:-0.5");
    CHECK_THROWS_AS(sample_covariance(bad, 5, 0), DataError);
  }
  SUBCASE("wishart moment check: mean of draws is p * I") {
    const Eigen::Index p = 5;
    const int draws = 10000;
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(p, p);
    auto spec = CovarianceSpec::parse("wishart");
    for (int k = 0; k < draws; ++k)
      mean += sample_covariance(spec, p, 1000 + static_cast<std::uint64_t>(k));
    mean /= static_cast<double>(draws);
    for (Eigen::Index i = 0; i < p; ++i) {
      CHECK(mean(i, i) == doctest::Approx(static_cast<double>(p)).epsilon(0.05));
      for (Eigen::Index j = 0; j < p; ++j)
        if (i != j) CHECK(std::abs(mean(i, j)) < 0.05 * p);
    }
  }
}

TEST_CASE("design sampling") {
  SUBCASE("identity covariance moments") {
    Eigen::MatrixXd x = sample_design(Eigen::MatrixXd::Identity(2, 2), 100000, 5);
    Eigen::MatrixXd cov = x.transpose() * x / 100000.0;
    CHECK(cov(0, 0) == doctest::Approx(1.0).epsilon(0.03));
    CHECK(cov(1, 1) == doctest::Approx(1.0).epsilon(0.03));
    CHECK(std::abs(cov(0, 1)) < 0.03);
  }
  SUBCASE("toeplitz correlation") {
    Eigen::MatrixXd sigma = sample_covariance(CovarianceSpec::parse("toeplitz:0.5"), 2, 0);
    Eigen::MatrixXd x = sample_design(sigma, 50000, 6);
    double corr = (x.col(0).dot(x.col(1))) /
                  std::sqrt(x.col(0).squaredNorm() * x.col(1).squaredNorm());
    CHECK(corr == doctest::Approx(0.5).epsilon(0.04));
  }
  SUBCASE("seeded determinism") {
    Eigen::MatrixXd a = sample_design(Eigen::MatrixXd::Identity(3, 3), 10, 42);
    Eigen::MatrixXd b = sample_design(Eigen::MatrixXd::Identity(3, 3), 10, 42);
    CHECK(a == b);
  }
}

TEST_CASE("snr") {
  Eigen::VectorXd unit = Eigen::VectorXd::Zero(4);
  unit[1] = 1.0;
  Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(4, 4);
  CHECK(snr(unit, eye, 1.0) == doctest::Approx(1.0));

  // squared norm 10 against sigma_y2 = 10 targets SNR 1
  Eigen::VectorXd beta = Eigen::VectorXd::Constant(10, 1.0);
  Eigen::MatrixXd eye10 = Eigen::MatrixXd::Identity(10, 10);
  CHECK(snr(beta, eye10, 10.0) == doctest::Approx(1.0));

  CHECK(snr(2.0 * unit, eye, 1.0) == doctest::Approx(2.0 * snr(unit, eye, 1.0)));
  CHECK_THROWS_AS(snr(unit, eye, 0.0), DataError);
}

TEST_CASE("irrepresentable statistic") {
  SUBCASE("orthogonal blocks give 1") {
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(6, 4);
    x(0, 0) = x(1, 1) = 1.0;  // active
    x(2, 2) = x(3, 3) = 1.0;  // inactive, orthogonal to active
    Eigen::VectorXi signs(2);
    signs << 1, -1;
    CHECK(irr_stat(x, {0, 1}, signs) == doctest::Approx(1.0));
  }
  SUBCASE("duplicated active column gives 0") {
    Rng rng(7);
    Eigen::MatrixXd x(10, 2);
    x.col(0) = normal_vector(rng, 10);
    x.col(1) = x.col(0);
    Eigen::VectorXi signs(1);
    signs << 1;
    CHECK(irr_stat(x, {0}, signs) == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("matches a least-squares regression oracle") {
    Rng rng(8);
    Eigen::MatrixXd x = normal_matrix(rng, 50, 8);
    std::vector<Eigen::Index> support{1, 4, 6};
    Eigen::VectorXi signs(3);
    signs << 1, -1, 1;
    double stat = irr_stat(x, support, signs);

    Eigen::MatrixXd xs(50, 3);
    for (int k = 0; k < 3; ++k) xs.col(k) = x.col(support[static_cast<std::size_t>(k)]);
    double worst = 0.0;
    for (Eigen::Index j = 0; j < 8; ++j) {
      if (j == 1 || j == 4 || j == 6) continue;
      // regression coefficients of the inactive column on the active block
      Eigen::VectorXd coef = xs.colPivHouseholderQr().solve(x.col(j));
      worst = std::max(worst, std::abs(coef.dot(signs.cast<double>())));
    }
    CHECK(stat == doctest::Approx(1.0 - worst).epsilon(1e-10));
  }
  SUBCASE("singular active block is rejected") {
    Eigen::MatrixXd x(4, 3);
    x.col(0) << 1, 2, 3, 4;
    x.col(1) = x.col(0);
    x.col(2) << 1, 0, 0, 0;
    Eigen::VectorXi signs(2);
    signs << 1, 1;
    CHECK_THROWS_AS(irr_stat(x, {0, 1}, signs), DataError);
  }
  SUBCASE("detail names the worst inactive column") {
    Rng rng(9);
    Eigen::MatrixXd x = normal_matrix(rng, 30, 5);
    Eigen::VectorXi signs(2);
    signs << 1, 1;
    IrrStatDetail detail = irr_stat_detail(x, {0, 1}, signs);
    CHECK(detail.contributions.size() == 3);
    CHECK(detail.stat <= 1.0);
    CHECK(detail.argmax_column >= 3);  // 1-based index of an inactive column
  }
}

TEST_CASE("metrics") {
  TrueModel truth;
  truth.beta_true.resize(4);
  truth.beta_true << 1.0, -2.0, 0.0, 0.5;
  truth.support = {0, 1, 3};
  Rng rng(10);
  Eigen::MatrixXd x_test = normal_matrix(rng, 50, 4);

  SUBCASE("perfect recovery") {
    Metrics m = compute_metrics(truth.beta_true, truth, x_test);
    CHECK(m.l2_dis == 0.0);
    CHECK(m.pmse == 0.0);
    CHECK(m.s_fpr == 0.0);
    CHECK(m.n_selected == 3);
  }
  SUBCASE("null estimate") {
    Metrics m = compute_metrics(Eigen::VectorXd::Zero(4), truth, x_test);
    CHECK(m.l2_dis == doctest::Approx(1.0));
    CHECK(m.n_selected == 0);
    CHECK(m.s_fpr == 0.0);
  }
  SUBCASE("one sign flip among four selections") {
    Eigen::VectorXd est(4);
    est << 1.0, -2.0, 0.3, -0.5;  // wrong signs on coords 2 (vs 0) and 3
    Metrics m = compute_metrics(est, truth, x_test);
    CHECK(m.n_selected == 4);
    CHECK(m.s_fpr == doctest::Approx(0.5));
    est[3] = 0.5;
    m = compute_metrics(est, truth, x_test);
    CHECK(m.s_fpr == doctest::Approx(0.25));
  }
  SUBCASE("all-zero truth is rejected") {
    TrueModel empty;
    empty.beta_true = Eigen::VectorXd::Zero(4);
    CHECK_THROWS_AS(compute_metrics(Eigen::VectorXd::Zero(4), empty, x_test), DataError);
  }
}

TEST_CASE("kendall tau") {
  Eigen::VectorXd a(4), b(4);
  a << 1, 2, 3, 4;
  b << 1, 2, 3, 4;
  CHECK(kendall_tau_b(a, b) == doctest::Approx(1.0));
  b << 4, 3, 2, 1;
  CHECK(kendall_tau_b(a, b) == doctest::Approx(-1.0));
  b << 1, 1, 2, 2;  // ties handled
  CHECK(kendall_tau_b(a, b) > 0.0);
  CHECK(kendall_tau_b(a, b) < 1.0);
  Eigen::VectorXd constant = Eigen::VectorXd::Ones(4);
  CHECK(kendall_tau_b(a, constant) == 0.0);
}

TEST_CASE("snr1 recipe follows its formulas") {
  Dataset d = testutil::random_dataset(60, 20, 4, 1.0, 50);
  Hyperparameters h = snr1_recipe(d);
  // Recompute corr-hat directly.
  std::vector<double> corr;
  for (int j = 0; j < 20; ++j) {
    double xm = d.x.col(j).mean(), ym = d.y.mean();
    double num = ((d.x.col(j).array() - xm) * (d.y.array() - ym)).sum();
    double den = std::sqrt((d.x.col(j).array() - xm).square().sum() *
                           (d.y.array() - ym).square().sum());
    corr.push_back(std::abs(num / den));
  }
  std::sort(corr.rbegin(), corr.rend());
  double corr_hat = (corr[0] + corr[1]) / 2.0;  // top 10% of 20 columns
  corr_hat = std::clamp(corr_hat, 0.01, 0.99);
  double dn = 60, dp = 20;
  double ratio = (1.0 - corr_hat) / corr_hat;
  CHECK(h.lambda == doctest::Approx(ratio * ratio * std::sqrt(dp / dn) * std::log(dp)));
  CHECK(h.tau1 == doctest::Approx((1.0 / ratio) *
                                      std::pow(dp * std::log(dp) / std::sqrt(dn),
                                               corr_hat / std::log(dn)) +
                                  1.0));
  CHECK(h.tau2 == doctest::Approx((1.0 / std::sqrt(dn)) *
                                  std::pow(dp * std::log(dp) / std::sqrt(dn),
                                           1.0 + corr_hat / std::log(dn))));
}

TEST_CASE("study one runner: schema and determinism") {
  SimulationConfig cfg;
  cfg.n = 30;
  cfg.p = 12;
  cfg.s0 = 3;
  cfg.replicates = 2;
  cfg.base_seed = 5;
  cfg.grid_size = 15;
  cfg.cv_folds = 4;
  cfg.snr_target = 3.16;
  cfg.covariance = CovarianceSpec::parse("identity");

  StudyOneReport report = run_study_one(cfg);
  CHECK(report.resolved_sigma_y2 == doctest::Approx(3.0 / (3.16 * 3.16)));
  REQUIRE(report.rows.size() == 6);  // 2 replicates x 3 estimators
  for (const auto& row : report.rows) {
    CHECK_FALSE(row.failed);
    CHECK(row.metrics.s_fpr >= 0.0);
    CHECK(row.metrics.s_fpr <= 1.0);
    CHECK(row.metrics.pmse >= 0.0);
    CHECK(row.metrics.l2_dis >= 0.0);
    CHECK(row.realized_snr > 0.0);
  }
  REQUIRE(report.aggregates.size() == 3);

  StudyOneReport again = run_study_one(cfg);
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    CHECK(report.rows[i].metrics.l2_dis == again.rows[i].metrics.l2_dis);
    CHECK(report.rows[i].metrics.n_selected == again.rows[i].metrics.n_selected);
  }

  testutil::TempDir tmp;
  write_study_one_csvs(report, tmp.file("out"));
  std::ifstream in(tmp.file("out") + "/replicates.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header ==
        "study,cov,n,p,s0,sigma_y2,estimator,replicate,failed,l2_dis,pmse,s_fpr,n_selected,"
        "realized_snr,error");
  int lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  CHECK(lines == 6);
}

TEST_CASE("study two runner: schema, bounds, determinism") {
  SimulationConfig cfg;
  cfg.n = 40;
  cfg.p = 8;
  cfg.s0 = 2;
  cfg.pairs = 3;
  cfg.replicates = 3;
  cfg.base_seed = 9;
  cfg.grid_size = 12;
  cfg.snr_target = 10.0;
  cfg.covariance = CovarianceSpec::parse("wishart");
  cfg.irr_design_rows = 200;

  StudyTwoReport report = run_study_two(cfg);
  REQUIRE(report.pairs.size() == 3);
  for (const auto& pair : report.pairs) {
    CHECK(pair.irr_stat <= 1.0);
    CHECK(pair.probability.at("bmio") >= 0.0);
    CHECK(pair.probability.at("bmio") <= 1.0);
    CHECK(pair.probability.at("lasso") >= 0.0);
    CHECK(pair.sigma_y2 > 0.0);
  }
  CHECK(report.kendall_tau_squared.count("bmio") == 1);
  CHECK(report.kendall_tau_squared.count("lasso") == 1);

  StudyTwoReport again = run_study_two(cfg);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(report.pairs[k].irr_stat == again.pairs[k].irr_stat);
    CHECK(report.pairs[k].probability.at("bmio") == again.pairs[k].probability.at("bmio"));
  }

  testutil::TempDir tmp;
  write_study_two_csvs(report, tmp.file("two"));
  std::ifstream in(tmp.file("two") + "/irrstat.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "pair,irr_stat,sigma_y2,estimator,probability");
}

TEST_CASE("glm study runner rejects bayes-factor selection") {
  SimulationConfig cfg;
  cfg.estimators = {Estimator::bmio_bf};
  CHECK_THROWS_AS(run_study_glm(cfg), DataError);
}

TEST_CASE("glm study runner at desk scale") {
  SimulationConfig cfg;
  cfg.n = 60;
  cfg.p = 10;
  cfg.s0 = 2;
  cfg.replicates = 2;
  cfg.base_seed = 3;
  cfg.grid_size = 12;
  cfg.cv_folds = 4;
  cfg.estimators = {Estimator::bmio_cv, Estimator::lasso_cv};
  cfg.covariance = CovarianceSpec::parse("identity");

  StudyOneReport report = run_study_glm(cfg);
  REQUIRE(report.rows.size() == 4);
  for (const auto& row : report.rows) CHECK_FALSE(row.failed);
}

TEST_SUITE_END();
