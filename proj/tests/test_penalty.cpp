#include <doctest.h>

#include <cmath>

#include "bavamio/penalty.hpp"
#include "bavamio/rng.hpp"

using namespace bavamio;

TEST_SUITE_BEGIN("penalty");

TEST_CASE("norms") {
  Eigen::VectorXd v(2);
  v << 3, -4;
  CHECK(norm(v, NormKind::l2) == doctest::Approx(5.0));
  Eigen::VectorXd w(3);
  w << 0, 0, 7;
  CHECK(norm(w, NormKind::l0) == 1.0);
  Eigen::VectorXd u(3);
  u << 1, -2, 3;
  CHECK(norm(u, NormKind::linf) == 3.0);
  CHECK(norm(u, NormKind::l1) == 6.0);
}

TEST_CASE("logsum basic values") {
  Eigen::VectorXd zeros = Eigen::VectorXd::Zero(2);
  CHECK(logsum(zeros, 1e-6) == 0.0);
  CHECK(logsum(zeros, 0.3) == 0.0);

  Eigen::VectorXd one(1);
  one << 1.0;
  CHECK(logsum(one, 1e-6) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(logsum(one, 0.123) == doctest::Approx(1.0).epsilon(1e-14));

  // Extended-precision reference for v = 0.5, tau3 = 1e-6.
  Eigen::VectorXd half(1);
  half << 0.5;
  long double expected = std::log1p(0.5e6L) / std::log1p(1e6L);
  double got = logsum(half, 1e-6);
  CHECK(got > 0.0);
  CHECK(got < 1.0);
  CHECK(got == doctest::Approx(static_cast<double>(expected)).epsilon(1e-13));

  CHECK_THROWS(logsum(half, 0.0));
  CHECK_THROWS(logsum(half, -0.1));
}

TEST_CASE("mm_weights formula") {
  SUBCASE("value at zero") {
    double tau3 = 1e-4;
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(1);
    double expected = 1.0 / (tau3 * std::log(1.0 + 1.0 / tau3));
    CHECK(mm_weights(beta, tau3)[0] == doctest::Approx(expected).epsilon(1e-14));
    CHECK(mm_weight_at_zero(tau3) == doctest::Approx(expected).epsilon(1e-14));
  }
  SUBCASE("large coefficient gives a near-zero weight") {
    Eigen::VectorXd beta(1);
    beta << 1e6;
    CHECK(mm_weights(beta, 1e-6)[0] < 1e-4);
    CHECK(mm_weights(beta, 1e-6)[0] > 0.0);
  }
  SUBCASE("independent scalar evaluation at tau3 = 1e-2") {
    double tau3 = 1e-2;
    Eigen::VectorXd beta(2);
    beta << 1.0, 0.0;
    Eigen::VectorXd phi = mm_weights(beta, tau3);
    double denom = std::log(1.0 + 100.0);
    CHECK(std::abs(phi[0] - 1.0 / (denom * 1.01)) < 1e-14);
    CHECK(std::abs(phi[1] - 1.0 / (denom * 0.01)) < 1e-14);
  }
}

TEST_CASE("majorizer touches logsum at the anchor and dominates elsewhere") {
  Rng rng(42);
  for (int trial = 0; trial < 1000; ++trial) {
    double tau3 = trial % 2 == 0 ? 1e-3 : 1e-6;
    Eigen::VectorXd beta = normal_vector(rng, 5);
    Eigen::VectorXd anchor = normal_vector(rng, 5);
    if (trial % 5 == 0) beta[trial % 5 % beta.size()] = 0.0;
    double maj = majorizer(beta, anchor, tau3);
    CHECK(maj >= logsum(beta, tau3) - 1e-12);
    CHECK(std::abs(majorizer(beta, beta, tau3) - logsum(beta, tau3)) < 1e-12);
  }
}

TEST_CASE("majorizer against direct formula") {
  double tau3 = 1e-3;
  Eigen::VectorXd beta(2), anchor(2);
  beta << 0.3, -0.7;
  anchor << 0.1, 0.1;
  double denom = std::log(1.0 + 1.0 / tau3);
  double expected = 0.0;
  expected += std::log(1.0 + 0.1 / tau3) + (0.3 + tau3) / (0.1 + tau3) - 1.0;
  expected += std::log(1.0 + 0.1 / tau3) + (0.7 + tau3) / (0.1 + tau3) - 1.0;
  expected /= denom;
  CHECK(majorizer(beta, anchor, tau3) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("soft threshold") {
  CHECK(soft_threshold(5, 2) == 3.0);
  CHECK(soft_threshold(-5, 2) == -3.0);
  CHECK(soft_threshold(1, 2) == 0.0);
  CHECK(soft_threshold(2, 2) == 0.0);  // boundary tie goes to zero
  CHECK_THROWS(soft_threshold(1, -0.5));
}

TEST_CASE("soft threshold is non-expansive") {
  Rng rng(9);
  for (int trial = 0; trial < 1000; ++trial) {
    double a = rng.normal() * 3.0;
    double a2 = rng.normal() * 3.0;
    double b = std::abs(rng.normal());
    CHECK(std::abs(soft_threshold(a, b) - soft_threshold(a2, b)) <= std::abs(a - a2) + 1e-15);
  }
}

TEST_CASE("penalty spec from threshold") {
  double tau3 = 1e-6;
  PenaltySpec spec = PenaltySpec::from_threshold(3.5, tau3);
  // The induced threshold at beta = 0 must equal psi.
  CHECK(0.5 * spec.rho * mm_weight_at_zero(tau3) == doctest::Approx(3.5).epsilon(1e-12));
  CHECK(PenaltySpec::from_threshold(-1.0, tau3).rho == 0.0);
  CHECK(PenaltySpec::from_threshold(0.0, tau3).rho == 0.0);
  CHECK(spec.log_scale() == doctest::Approx(1.0 / std::log(1.0 + 1e6)).epsilon(1e-12));
}

TEST_CASE("smoothed support count approaches the exact count (fitted-constant bound)") {
  // Rate check: || elementwise smoothed - indicator ||_1 <= C * p / (-log tau3)
  // with one constant fitted at the largest tau3 (10% headroom) and verified
  // at the smaller ones on fresh draws.
  Rng rng(1234);
  auto l1_gap = [](const Eigen::VectorXd& beta, double tau3) {
    double gap = 0.0;
    for (Eigen::Index j = 0; j < beta.size(); ++j)
      gap += std::abs(logsum_scalar(beta[j], tau3) - (beta[j] != 0.0 ? 1.0 : 0.0));
    return gap;
  };
  auto draw = [&](int p) {
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    for (int j = 0; j < p; ++j) {
      if (rng.uniform() < 0.5) {
        // nonzero magnitudes in [0.1, 1]
        double mag = 0.1 + 0.9 * rng.uniform();
        beta[j] = rng.uniform() < 0.5 ? mag : -mag;
      }
    }
    return beta;
  };

  const int p = 50;
  double fitted = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::VectorXd beta = draw(p);
    fitted = std::max(fitted, l1_gap(beta, 1e-2) * (-std::log(1e-2)) / p);
  }
  double constant = 1.10 * fitted;

  for (double tau3 : {1e-2, 1e-4, 1e-6}) {
    for (int trial = 0; trial < 200; ++trial) {
      Eigen::VectorXd beta = draw(p);
      CHECK(l1_gap(beta, tau3) <= constant * p / (-std::log(tau3)));
    }
  }
}

TEST_CASE("smoothed count limits") {
  Rng rng(77);
  SUBCASE("tau3 -> 0 with unit-magnitude coefficients reaches the indicator") {
    // The gap scales as |log|beta|| / (-log tau3); at |beta| = 1 the limit is
    // attained within floating-point precision for every tau3 on the ladder.
    for (int trial = 0; trial < 50; ++trial) {
      double beta = rng.uniform() < 0.5 ? 1.0 : -1.0;
      double previous_gap = std::numeric_limits<double>::infinity();
      for (double tau3 : {1e-2, 1e-4, 1e-6, 1e-8, 1e-10}) {
        double gap = std::abs(logsum_scalar(beta, tau3) - 1.0);
        CHECK(gap <= previous_gap + 1e-6);  // monotone approach
        previous_gap = gap;
      }
      CHECK(std::abs(logsum_scalar(beta, 1e-10) - 1.0) <= 1e-6);
    }
  }
  SUBCASE("tau3 -> 0 monotone approach toward the indicator for generic magnitudes") {
    for (int trial = 0; trial < 50; ++trial) {
      double beta = (0.05 + 2.0 * rng.uniform()) * (rng.uniform() < 0.5 ? 1.0 : -1.0);
      double previous_gap = std::numeric_limits<double>::infinity();
      for (double tau3 : {1e-2, 1e-4, 1e-6, 1e-8, 1e-10}) {
        double gap = std::abs(logsum_scalar(beta, tau3) - 1.0);
        CHECK(gap <= previous_gap + 1e-6);
        previous_gap = gap;
      }
      // Rate: gap ~ |log|beta|| / (-log tau3).
      double predicted = std::abs(std::log(std::abs(beta))) / (-std::log(1e-10));
      CHECK(previous_gap <= predicted * 1.5 + 1e-9);
    }
  }
  SUBCASE("tau3 -> infinity recovers the magnitude") {
    for (int trial = 0; trial < 50; ++trial) {
      double beta = (0.1 + 9.9 * rng.uniform()) * (rng.uniform() < 0.5 ? 1.0 : -1.0);
      double value = logsum_scalar(beta, 1e6);
      CHECK(std::abs(value - std::abs(beta)) / std::abs(beta) < 1e-4);
    }
  }
}

TEST_SUITE_END();
