#include <doctest.h>

#include <sstream>

#include "bavamio/csv.hpp"
#include "bavamio/dataset.hpp"
#include "bavamio/solver_linear.hpp"
#include "test_util.hpp"

using namespace bavamio;

TEST_SUITE_BEGIN("dataset");

TEST_CASE("sign function") {
  CHECK(sign(3.5) == 1);
  CHECK(sign(0.0) == 0);
  CHECK(sign(-1e-300) == -1);
  CHECK(sign(-0.0) == 0);
}

TEST_CASE("load_dataset parses a small csv") {
  testutil::TempDir tmp;
  testutil::write_file(tmp.file("small.csv"), "y,x1,x2\n1,2,3\n4,5,6\n7,8,9\n");
  Dataset d = load_dataset(tmp.file("small.csv"), "y");
  CHECK(d.n_samples() == 3);
  CHECK(d.n_covariates() == 2);
  CHECK(d.y[0] == 1.0);
  CHECK(d.x(2, 1) == 9.0);
  CHECK(d.column_names == std::vector<std::string>{"x1", "x2"});
}

TEST_CASE("load_dataset error paths") {
  testutil::TempDir tmp;

  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_dataset(tmp.file("nope.csv"), "y"), DataError);
  }
  SUBCASE("blank cell names the position") {
    testutil::write_file(tmp.file("blank.csv"), "y,x1\n1,2\n3,\n");
    try {
      load_dataset(tmp.file("blank.csv"), "y");
      FAIL("expected DataError");
    } catch (const DataError& e) {
      std::string msg = e.what();
      CHECK(msg.find("row 2") != std::string::npos);
      CHECK(msg.find("x1") != std::string::npos);
    }
  }
  SUBCASE("non-numeric cell") {
    testutil::write_file(tmp.file("bad.csv"), "y,x1\n1,2\n3,abc\n");
    CHECK_THROWS_AS(load_dataset(tmp.file("bad.csv"), "y"), DataError);
  }
  SUBCASE("response column absent") {
    testutil::write_file(tmp.file("noresp.csv"), "a,b\n1,2\n");
    CHECK_THROWS_AS(load_dataset(tmp.file("noresp.csv"), "y"), DataError);
  }
  SUBCASE("ragged row") {
    testutil::write_file(tmp.file("ragged.csv"), "y,x1,x2\n1,2,3\n4,5\n");
    CHECK_THROWS_AS(load_dataset(tmp.file("ragged.csv"), "y"), DataError);
  }
}

TEST_CASE("load_dataset round-trips a diabetes-sized fixture") {
  // 442 x 11 file in the layout of the classic diabetes table.
  testutil::TempDir tmp;
  const int n = 442, p = 10;
  Rng rng(7);
  Eigen::MatrixXd x = normal_matrix(rng, n, p);
  Eigen::VectorXd y = normal_vector(rng, n) * 50.0;
  std::ostringstream csv;
  csv << "age,sex,bmi,bp,s1,s2,s3,s4,s5,s6,prog\n";
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) csv << csv_double(x(i, j)) << ',';
    csv << csv_double(y[i]) << '\n';
  }
  testutil::write_file(tmp.file("diabetes.csv"), csv.str());
  Dataset d = load_dataset(tmp.file("diabetes.csv"), "prog");
  CHECK(d.n_samples() == 442);
  CHECK(d.n_covariates() == 10);
  CHECK(d.x.isApprox(x, 1e-12));
  CHECK(d.y.isApprox(y, 1e-12));
}

TEST_CASE("response column by 1-based index") {
  testutil::TempDir tmp;
  testutil::write_file(tmp.file("idx.csv"), "a,b,c\n1,2,3\n4,5,6\n");
  Dataset d = load_dataset(tmp.file("idx.csv"), "2");
  CHECK(d.y[0] == 2.0);
  CHECK(d.column_names == std::vector<std::string>{"a", "c"});
}

TEST_CASE("standardize forces mean zero and unit variance") {
  Dataset d;
  d.x.resize(3, 1);
  d.x << 1, 2, 3;
  d.y.resize(3);
  d.y << 1, 1, 1;
  auto [std_d, rec] = standardize(d, {.center_response = true});
  CHECK(std_d.x.col(0).mean() == doctest::Approx(0.0).epsilon(1e-14));
  double var = (std_d.x.col(0).array() - std_d.x.col(0).mean()).square().sum() / 2.0;
  CHECK(var == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(rec.column_means[0] == doctest::Approx(2.0));
  CHECK(std_d.y.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("standardize is idempotent") {
  Dataset d = testutil::random_dataset(40, 3, 2, 1.0, 11);
  auto [once, rec1] = standardize(d);
  auto [twice, rec2] = standardize(once);
  CHECK((twice.x - once.x).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((twice.y - once.y).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("standardize round trip within 1e-10") {
  Dataset d = testutil::random_dataset(30, 4, 2, 0.5, 3);
  auto [std_d, rec] = standardize(d);
  Dataset back = unstandardize(std_d, rec);
  CHECK((back.x - d.x).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((back.y - d.y).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("constant column is an error unless skip mode") {
  Dataset d;
  d.x.resize(3, 2);
  d.x << 1, 5, 2, 5, 3, 5;
  d.y.resize(3);
  d.y << 1, 2, 3;
  CHECK_THROWS_AS(standardize(d), DataError);
  auto [std_d, rec] = standardize(d, {.center_response = true, .skip_constant = true});
  CHECK(rec.column_scales[1] == 1.0);
  CHECK(std_d.x.col(1).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("de-standardized fit predicts like the raw fit") {
  // Scale-only transform (columns pre-centered), so least squares is
  // equivariant and predictions must agree.
  Rng rng(21);
  const int n = 50, p = 5;
  Dataset raw;
  raw.x = normal_matrix(rng, n, p);
  for (int j = 0; j < p; ++j) {
    raw.x.col(j) = raw.x.col(j).array() - raw.x.col(j).mean();
    raw.x.col(j) *= (1.0 + j);  // give the columns distinct scales
  }
  Eigen::VectorXd beta = normal_vector(rng, p);
  raw.y = raw.x * beta + normal_vector(rng, n) * 0.1;
  raw.y = raw.y.array() - raw.y.mean();

  Eigen::VectorXd direct = ridge_solve(raw, 0.0);
  auto [std_d, rec] = standardize(raw);
  Eigen::VectorXd fitted_std = ridge_solve(std_d, 0.0);
  OriginalScaleFit mapped = to_original_scale(fitted_std, rec);

  Eigen::VectorXd pred_direct = raw.x * direct;
  Eigen::VectorXd pred_mapped =
      (raw.x * mapped.beta).array() + mapped.intercept;
  CHECK((pred_direct - pred_mapped).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("gamma is recomputed from beta") {
  Eigen::VectorXd beta(4);
  beta << 0.0, -2.0, 0.0, 1e-300;
  Eigen::VectorXi gamma = support_indicator(beta);
  CHECK(gamma[0] == 0);
  CHECK(gamma[1] == 1);
  CHECK(gamma[2] == 0);
  CHECK(gamma[3] == 1);
  CHECK(support_set(beta) == std::vector<Eigen::Index>{1, 3});
}

TEST_CASE("hyperparameter validation") {
  Hyperparameters h = Hyperparameters::defaults_for(100, 1000);
  CHECK(h.lambda == doctest::Approx(0.1));
  CHECK(h.tau1 == doctest::Approx(1000.0 * std::log(1000.0) / 10.0 + 1.0));
  CHECK(h.tau2 == doctest::Approx(h.tau1 - 1.0));
  h.validate();
  h.tau3 = 0.0;
  CHECK_THROWS_AS(h.validate(), DataError);
  h.tau3 = 1e-6;
  h.lambda = -1.0;
  CHECK_THROWS_AS(h.validate(), DataError);
}

TEST_SUITE_END();
