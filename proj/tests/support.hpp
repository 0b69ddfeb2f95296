#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "kcrc/dataset.hpp"

namespace kcrc::testing {

inline Eigen::MatrixXd random_matrix(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  }
  return m;
}

inline Eigen::VectorXd random_vector(Index n, std::uint64_t seed) {
  return random_matrix(n, 1, seed).col(0);
}

/// Gaussian blobs: class c centred at `spread` * e_(c mod m) plus unit noise.
inline Dictionary gaussian_blobs(Index m, int classes, Index per_class, double spread,
                                 std::uint64_t seed) {
  Eigen::MatrixXd atoms = random_matrix(m, classes * per_class, seed);
  std::vector<Label> labels;
  for (int c = 0; c < classes; ++c) {
    for (Index k = 0; k < per_class; ++k) {
      atoms(c % m, c * per_class + k) += spread;
      labels.push_back(c);
    }
  }
  return Dictionary(FeatureMatrix(std::move(atoms)), std::move(labels));
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("kcrc_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace kcrc::testing
