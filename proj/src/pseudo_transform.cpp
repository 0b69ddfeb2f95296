#include "kcrc/pseudo_transform.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "kcrc/errors.hpp"

namespace kcrc {

std::string_view psi_name(PsiMethod method) {
  switch (method) {
    case PsiMethod::identity: return "identity";
    case PsiMethod::kpca: return "kpca";
    case PsiMethod::random: return "random";
    case PsiMethod::graph: return "graph";
    case PsiMethod::kfda: return "kfda";
  }
  return "unknown";
}

PsiMethod parse_psi(std::string_view name) {
  for (auto m : {PsiMethod::identity, PsiMethod::kpca, PsiMethod::random, PsiMethod::graph,
                 PsiMethod::kfda}) {
    if (psi_name(m) == name) return m;
  }
  throw ArgumentError("unknown pseudo-transform '" + std::string(name) +
                      "' (expected identity, kpca, random, graph)");
}

Eigen::MatrixXd PseudoTransform::matrix() const {
  if (method == PsiMethod::identity) return Eigen::MatrixXd::Identity(n, n);
  return psi;
}

Eigen::MatrixXd PseudoTransform::apply_transpose(const Eigen::MatrixXd& m) const {
  if (method == PsiMethod::identity) return m;
  return psi.transpose() * m;
}

Eigen::VectorXd PseudoTransform::apply_transpose(const Eigen::VectorXd& v) const {
  if (method == PsiMethod::identity) return v;
  return psi.transpose() * v;
}

namespace {

// Flips each column so its first entry of meaningful magnitude is positive.
void fix_signs(Eigen::MatrixXd& vectors) {
  for (Index j = 0; j < vectors.cols(); ++j) {
    auto col = vectors.col(j);
    const double scale = col.cwiseAbs().maxCoeff();
    for (Index i = 0; i < col.size(); ++i) {
      if (std::abs(col(i)) > 1e-8 * scale) {
        if (col(i) < 0) col = -col;
        break;
      }
    }
  }
}

Eigen::MatrixXd squared_euclidean(const Eigen::Ref<const Eigen::MatrixXd>& atoms) {
  const Index n = atoms.cols();
  Eigen::MatrixXd sq = Eigen::MatrixXd::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < j; ++i) {
      sq(i, j) = (atoms.col(i) - atoms.col(j)).squaredNorm();
      sq(j, i) = sq(i, j);
    }
  }
  return sq;
}

}  // namespace

Index column_rank(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
  qr.setThreshold(kRankTolerance);
  return qr.rank();
}

PseudoTransform build_psi_identity(Index n) {
  if (n < 1) throw ArgumentError("identity pseudo-transform needs n >= 1");
  return PseudoTransform{PsiMethod::identity, n, Eigen::MatrixXd()};
}

PseudoTransform build_psi_kpca(const Eigen::MatrixXd& gram, Index c) {
  const Index n = gram.rows();
  if (gram.cols() != n || n < 1) throw ArgumentError("kpca needs a square, non-empty Gram matrix");
  if (c < 1 || c > n) {
    throw ArgumentError("kpca dimension " + std::to_string(c) + " outside [1, " +
                        std::to_string(n) + "]");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  if (eig.info() != Eigen::Success) throw NumericalError("kpca eigendecomposition failed");

  // Eigen returns ascending order; walk from the top.
  const Eigen::VectorXd& values = eig.eigenvalues();
  const double largest = values(n - 1);
  const double floor = kEigenFloor * std::max(largest, 0.0);
  Index usable = 0;
  while (usable < n && values(n - 1 - usable) > floor && largest > 0.0) ++usable;
  if (c > usable) {
    throw RankError("kpca dimension " + std::to_string(c) + " exceeds the numerical rank of G; " +
                    "use at most " + std::to_string(usable));
  }
  Eigen::MatrixXd psi(n, c);
  for (Index i = 0; i < c; ++i) {
    const double lambda = values(n - 1 - i) / static_cast<double>(n);
    psi.col(i) = eig.eigenvectors().col(n - 1 - i) / std::sqrt(lambda);
  }
  fix_signs(psi);
  return PseudoTransform{PsiMethod::kpca, n, std::move(psi)};
}

PseudoTransform build_psi_random(Index n, Index c, std::uint64_t seed) {
  if (c < 1 || c > n) {
    throw ArgumentError("random projection dimension " + std::to_string(c) + " outside [1, " +
                        std::to_string(n) + "]");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double scale = 1.0 / std::sqrt(static_cast<double>(c));
  Eigen::MatrixXd psi(n, c);
  for (Index j = 0; j < c; ++j) {
    for (Index i = 0; i < n; ++i) psi(i, j) = normal(rng) * scale;
  }
  if (column_rank(psi) < c) {
    throw RankError("random projection is rank deficient; try another seed");
  }
  return PseudoTransform{PsiMethod::random, n, std::move(psi)};
}

GraphLaplacian build_graph_laplacian(const Eigen::Ref<const Eigen::MatrixXd>& atoms,
                                     const GraphConfig& cfg) {
  const Index n = atoms.cols();
  if (n < 2) throw GraphError("graph needs at least two atoms");
  const Eigen::MatrixXd sq = squared_euclidean(atoms);

  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> edge =
      Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, n, false);
  if (const auto* knn = std::get_if<KnnRule>(&cfg.neighbors)) {
    if (knn->count < 1) throw ArgumentError("graph knn count must be >= 1");
    const Index count = std::min(knn->count, n - 1);
    std::vector<Index> order;
    order.reserve(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
      order.clear();
      for (Index j = 0; j < n; ++j) {
        if (j != i) order.push_back(j);
      }
      std::partial_sort(order.begin(), order.begin() + count, order.end(),
                        [&](Index a, Index b) {
                          return sq(i, a) < sq(i, b) || (sq(i, a) == sq(i, b) && a < b);
                        });
      for (Index r = 0; r < count; ++r) {
        const Index j = order[static_cast<std::size_t>(r)];
        edge(i, j) = edge(j, i) = true;
      }
    }
  } else {
    const double eps = std::get<EpsilonRule>(cfg.neighbors).epsilon;
    if (!(eps > 0.0)) throw ArgumentError("graph epsilon must be positive");
    for (Index j = 0; j < n; ++j) {
      for (Index i = 0; i < n; ++i) edge(i, j) = i != j && sq(i, j) < eps;
    }
  }

  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  if (const auto* heat = std::get_if<HeatWeight>(&cfg.weights)) {
    double t = 0.0;
    if (heat->t) {
      t = *heat->t;
      if (!(t > 0.0)) throw ArgumentError("heat parameter t must be positive");
    } else {
      double sum = 0.0;
      Index count = 0;
      for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < j; ++i) {
          if (edge(i, j) && sq(i, j) > 0.0) {
            sum += sq(i, j);
            ++count;
          }
        }
      }
      t = count > 0 ? sum / static_cast<double>(count) : 1.0;
    }
    for (Index j = 0; j < n; ++j) {
      for (Index i = 0; i < n; ++i) {
        if (edge(i, j)) w(i, j) = std::exp(-sq(i, j) / t);
      }
    }
  } else {
    w = edge.cast<double>();
  }

  Eigen::VectorXd degree = w.rowwise().sum();
  for (Index i = 0; i < n; ++i) {
    if (!(degree(i) > 0.0)) {
      throw GraphError("atom " + std::to_string(i) + " has no neighbours in the graph");
    }
  }
  Eigen::MatrixXd laplacian = -w;
  laplacian.diagonal() += degree;
  return GraphLaplacian{std::move(w), std::move(degree), std::move(laplacian)};
}

LaplacianEigenmap laplacian_eigenmap(const GraphLaplacian& graph) {
  // L g = lambda Deg g  <=>  (Deg^-1/2 L Deg^-1/2) u = lambda u  with  g = Deg^-1/2 u.
  const Eigen::VectorXd inv_sqrt = graph.degree.cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd normalized = inv_sqrt.asDiagonal() * graph.laplacian * inv_sqrt.asDiagonal();
  normalized = 0.5 * (normalized + normalized.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(normalized);
  if (eig.info() != Eigen::Success) throw NumericalError("Laplacian eigendecomposition failed");
  Eigen::MatrixXd vectors = inv_sqrt.asDiagonal() * eig.eigenvectors();
  fix_signs(vectors);
  return LaplacianEigenmap{eig.eigenvalues(), std::move(vectors)};
}

PseudoTransform build_psi_graph(const Eigen::Ref<const Eigen::MatrixXd>& atoms,
                                const GraphConfig& cfg, Index c) {
  const Index n = atoms.cols();
  if (c < 1 || c > n - 1) {
    throw ArgumentError("graph dimension " + std::to_string(c) + " outside [1, " +
                        std::to_string(n - 1) + "]");
  }
  const auto map = laplacian_eigenmap(build_graph_laplacian(atoms, cfg));
  return PseudoTransform{PsiMethod::graph, n, map.vectors.middleCols(1, c)};
}

PseudoTransform build_psi_graph(const Dictionary& d, const GraphConfig& cfg, Index c) {
  return build_psi_graph(d.matrix(), cfg, c);
}

}  // namespace kcrc
