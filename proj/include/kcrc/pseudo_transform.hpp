#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <variant>

#include <Eigen/Core>

#include "kcrc/dataset.hpp"
#include "kcrc/kernel.hpp"

namespace kcrc {

// kfda is recognised by name only; building it throws ArgumentError.
enum class PsiMethod { identity, kpca, random, graph, kfda };

std::string_view psi_name(PsiMethod method);
PsiMethod parse_psi(std::string_view name);

/// n x c matrix mapping kernel-space rows of G to a c-dimensional space.
/// For the identity method `psi` is left empty and dim() == n.
struct PseudoTransform {
  PsiMethod method = PsiMethod::identity;
  Index n = 0;
  Eigen::MatrixXd psi;

  Index dim() const { return method == PsiMethod::identity ? n : psi.cols(); }
  /// Materialised n x c matrix, identity included.
  Eigen::MatrixXd matrix() const;
  /// psi^T * m without forming the identity.
  Eigen::MatrixXd apply_transpose(const Eigen::MatrixXd& m) const;
  Eigen::VectorXd apply_transpose(const Eigen::VectorXd& v) const;
};

struct KnnRule {
  Index count = 10;  // clamped to n - 1
};
struct EpsilonRule {
  double epsilon = 1.0;  // connect when squared distance < epsilon
};
struct HeatWeight {
  std::optional<double> t;  // unset: mean squared distance over edges
};
struct BinaryWeight {};

struct GraphConfig {
  std::variant<KnnRule, EpsilonRule> neighbors = KnnRule{};
  std::variant<HeatWeight, BinaryWeight> weights = HeatWeight{};
};

struct GraphLaplacian {
  Eigen::MatrixXd weights;  // W, zero diagonal
  Eigen::VectorXd degree;   // row sums of W
  Eigen::MatrixXd laplacian;  // diag(degree) - W
};

/// Builds W from the atoms (columns) with the configured neighbour and weight
/// rules. kNN edges are symmetrised by OR. Throws GraphError when any node is
/// left without edges.
GraphLaplacian build_graph_laplacian(const Eigen::Ref<const Eigen::MatrixXd>& atoms,
                                     const GraphConfig& cfg);

/// All solutions of L g = lambda Deg g, ascending. Each g satisfies
/// g^T Deg g = 1 and its first non-negligible entry is positive.
struct LaplacianEigenmap {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};
LaplacianEigenmap laplacian_eigenmap(const GraphLaplacian& graph);

inline constexpr double kEigenFloor = 1e-10;   // relative to the largest eigenvalue
inline constexpr double kRankTolerance = 1e-10;

PseudoTransform build_psi_identity(Index n);

/// Top-c eigenvectors of G scaled so that lambda * psi^T psi = 1 with
/// lambda = eig(G) / n. Throws RankError if c exceeds the number of
/// eigenvalues above the floor.
PseudoTransform build_psi_kpca(const Eigen::MatrixXd& gram, Index c);

/// i.i.d. N(0, 1) / sqrt(c) entries.
PseudoTransform build_psi_random(Index n, Index c, std::uint64_t seed);

/// Generalised Laplacian eigenvectors g_1 .. g_c (g_0 dropped).
PseudoTransform build_psi_graph(const Dictionary& d, const GraphConfig& cfg, Index c);
PseudoTransform build_psi_graph(const Eigen::Ref<const Eigen::MatrixXd>& atoms,
                                const GraphConfig& cfg, Index c);

/// Numerical column rank (ColPivHouseholderQR, relative threshold kRankTolerance).
Index column_rank(const Eigen::MatrixXd& m);

}  // namespace kcrc
