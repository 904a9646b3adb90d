#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>

namespace bavamio {

// Generator contract: all random draws in this toolkit go through Rng, which
// is mt19937_64 plus explicit uniform/normal transforms. The transforms are
// spelled out here (rather than delegated to std:: distributions) so that a
// seed reproduces the same stream regardless of the standard library build.
inline constexpr const char* kRngAlgorithm = "mt19937_64/boxmuller/v1";

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; consumes two uniforms per pair.
  double normal();

  // Chi-squared with integer degrees of freedom (sum of squared normals).
  double chi_squared(int df);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

Eigen::VectorXd normal_vector(Rng& rng, Eigen::Index n);
Eigen::MatrixXd normal_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols);

// Fisher-Yates permutation of 0..n-1.
std::vector<Eigen::Index> random_permutation(Rng& rng, Eigen::Index n);

}  // namespace bavamio
