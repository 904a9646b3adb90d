#include "bavamio/penalty.hpp"

#include <cmath>
#include <stdexcept>

namespace bavamio {

double norm(const Eigen::VectorXd& v, NormKind kind) {
  switch (kind) {
    case NormKind::l0: {
      double count = 0.0;
      for (Eigen::Index j = 0; j < v.size(); ++j)
        if (v[j] != 0.0) count += 1.0;
      return count;
    }
    case NormKind::l1:
      return v.lpNorm<1>();
    case NormKind::l2:
      return v.norm();
    case NormKind::linf:
      return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>();
  }
  throw std::invalid_argument("unknown norm kind");
}

double logsum_scalar(double v, double tau3) {
  if (!(tau3 > 0.0)) throw std::invalid_argument("logsum requires tau3 > 0");
  return std::log1p(std::abs(v) / tau3) / std::log1p(1.0 / tau3);
}

double logsum(const Eigen::VectorXd& v, double tau3) {
  if (!(tau3 > 0.0)) throw std::invalid_argument("logsum requires tau3 > 0");
  double denom = std::log1p(1.0 / tau3);
  double sum = 0.0;
  for (Eigen::Index j = 0; j < v.size(); ++j) sum += std::log1p(std::abs(v[j]) / tau3);
  return sum / denom;
}

Eigen::VectorXd mm_weights(const Eigen::VectorXd& beta, double tau3) {
  double denom = std::log1p(1.0 / tau3);
  Eigen::VectorXd phi(beta.size());
  for (Eigen::Index j = 0; j < beta.size(); ++j)
    phi[j] = 1.0 / (denom * (std::abs(beta[j]) + tau3));
  return phi;
}

double mm_weight_at_zero(double tau3) {
  return 1.0 / (std::log1p(1.0 / tau3) * tau3);
}

double majorizer(const Eigen::VectorXd& beta, const Eigen::VectorXd& anchor, double tau3) {
  if (beta.size() != anchor.size())
    throw std::invalid_argument("majorizer: beta and anchor lengths differ");
  double denom = std::log1p(1.0 / tau3);
  double sum = 0.0;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    double aj = std::abs(anchor[j]);
    sum += std::log1p(aj / tau3) + (std::abs(beta[j]) + tau3) / (aj + tau3) - 1.0;
  }
  return sum / denom;
}

double soft_threshold(double a, double b) {
  if (b < 0.0) throw std::invalid_argument("soft_threshold requires b >= 0");
  double magnitude = std::abs(a) - b;
  if (magnitude <= 0.0) return 0.0;
  return a > 0.0 ? magnitude : -magnitude;
}

PenaltySpec PenaltySpec::from_threshold(double psi, double tau3) {
  PenaltySpec spec;
  spec.tau3 = tau3;
  spec.rho = psi <= 0.0 ? 0.0 : 2.0 * psi / mm_weight_at_zero(tau3);
  return spec;
}

double PenaltySpec::log_scale() const { return 1.0 / std::log1p(1.0 / tau3); }

}  // namespace bavamio
