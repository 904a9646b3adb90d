#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "bavamio/dataset.hpp"
#include "bavamio/rng.hpp"

namespace testutil {

// Unique scratch directory, removed on destruction.
struct TempDir {
  std::filesystem::path path;

  TempDir() {
    static std::atomic<unsigned> counter{0};
    auto stamp = std::to_string(::getpid()) + "_" + std::to_string(counter++);
    path = std::filesystem::temp_directory_path() / ("bavamio_test_" + stamp);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

// Gaussian regression instance with the first `s0` coefficients active.
inline bavamio::Dataset random_dataset(Eigen::Index n, Eigen::Index p, int s0, double noise_sd,
                                       std::uint64_t seed,
                                       Eigen::VectorXd* beta_out = nullptr) {
  bavamio::Rng rng(seed);
  bavamio::Dataset d;
  d.x = bavamio::normal_matrix(rng, n, p);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  for (int j = 0; j < s0; ++j) beta[j] = rng.normal() * 2.0;
  d.y = d.x * beta + bavamio::normal_vector(rng, n) * noise_sd;
  if (beta_out) *beta_out = beta;
  return d;
}

}  // namespace testutil
