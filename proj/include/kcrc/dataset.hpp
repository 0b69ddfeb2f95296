#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "kcrc/types.hpp"

namespace kcrc {

/// Column-major sample container: column j holds sample j.
///
/// Rows must be positive and every entry finite. A matrix with zero columns is
/// permitted only so that a split can report an empty side.
class FeatureMatrix {
 public:
  explicit FeatureMatrix(Eigen::MatrixXd values);

  Index rows() const noexcept { return values_.rows(); }
  Index cols() const noexcept { return values_.cols(); }
  const Eigen::MatrixXd& values() const noexcept { return values_; }
  Eigen::MatrixXd::ConstColXpr col(Index j) const { return values_.col(j); }

 private:
  Eigen::MatrixXd values_;
};

/// Labelled set of atoms. The position of an atom is its universal index.
class Dictionary {
 public:
  Dictionary(FeatureMatrix atoms, std::vector<Label> labels);

  const FeatureMatrix& atoms() const noexcept { return atoms_; }
  const Eigen::MatrixXd& matrix() const noexcept { return atoms_.values(); }
  const std::vector<Label>& labels() const noexcept { return labels_; }
  /// Distinct labels in ascending order.
  const std::vector<Label>& classes() const noexcept { return classes_; }

  Index size() const noexcept { return atoms_.cols(); }
  Index dim() const noexcept { return atoms_.rows(); }
  bool empty() const noexcept { return size() == 0; }

  Eigen::MatrixXd::ConstColXpr atom(Index k) const { return atoms_.col(k); }
  Label label(Index k) const { return labels_.at(static_cast<std::size_t>(k)); }

  /// Universal indices of each class, ascending.
  std::map<Label, std::vector<Index>> class_members() const;

  /// Sub-dictionary made of the given atoms, in the given order.
  Dictionary select(std::span<const Index> indices) const;

 private:
  FeatureMatrix atoms_;
  std::vector<Label> labels_;
  std::vector<Label> classes_;
};

// CSV: one sample per row, integer label first, no header, comma separated.
Dictionary parse_csv(std::istream& in, const std::string& source = "<stream>");
Dictionary load_csv(const std::filesystem::path& path);
void write_csv(std::ostream& out, const Dictionary& d);
void save_csv(const Dictionary& d, const std::filesystem::path& path);

// IDX (MNIST) image/label pair. Pixels are scaled to [0, 1].
Dictionary load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

inline constexpr double kDegenerateColumnNorm = 1e-10;
inline constexpr double kColumnPerturbation = 1e-8;

/// Scales every column to unit Euclidean norm. Columns whose norm is below
/// kDegenerateColumnNorm first receive uniform noise in
/// [-kColumnPerturbation, kColumnPerturbation] drawn from `seed`.
Eigen::MatrixXd unit_normalize_columns(const Eigen::MatrixXd& m, std::uint64_t seed = 0);
FeatureMatrix unit_normalize_columns(const FeatureMatrix& m, std::uint64_t seed = 0);

struct SplitSpec {
  Index per_class_train = 1;
  std::uint64_t seed = 42;
};

struct Split {
  Dictionary train;
  Dictionary test;
  // Universal indices (into the input) of each side, in output order.
  std::vector<Index> train_indices;
  std::vector<Index> test_indices;
};

/// Per class, draws exactly `per_class_train` atoms for training; the rest go
/// to test. Output keeps the input's relative atom order on both sides.
Split stratified_split(const Dictionary& d, const SplitSpec& spec);

inline constexpr Label kClassQ = 0;
inline constexpr Label kClassW = 1;

struct SameDirectionSpec {
  Index dim = 2;
  Index per_class = 200;
  double noise_variance = 0.15;
  std::uint64_t seed = 42;
};

/// Two collinear classes through the origin: class Q has features uniform on
/// [1, 3], class W uniform on [-3, -1], plus zero-mean Gaussian noise. Q atoms
/// come first, then W atoms.
Dictionary make_same_direction(const SameDirectionSpec& spec);

}  // namespace kcrc
