#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "kcrc/dataset.hpp"
#include "kcrc/kernel.hpp"
#include "kcrc/pseudo_transform.hpp"
#include "kcrc/solvers.hpp"

namespace kcrc {

struct ClassificationResult {
  Label label = 0;
  /// Regularised residual per class; +inf marks a class whose coding vanished.
  /// Empty when an LCD early exit decided the label.
  std::map<Label, double> residuals;
  Eigen::VectorXd coding;
  /// Dictionary indices the coding entries refer to; empty means all atoms in order.
  std::vector<Index> support;
  std::optional<Eigen::VectorXd> error_vector;
  bool early_exit = false;
};

inline constexpr double kDegenerateCoding = 1e-12;
inline constexpr double kDefaultMu = 1e-3;

using ClassMembers = std::vector<std::pair<Label, std::vector<Index>>>;
ClassMembers group_by_class(const Dictionary& d);

/// Per class i: r_i = ||y - D_i x_i||_2 / ||x_i||_2, label = argmin r_i.
/// Classes with ||x_i|| < kDegenerateCoding get +inf and are skipped; if every
/// class is degenerate a NumericalError is thrown. Ties go to the smaller label.
ClassificationResult decide_by_residuals(const Eigen::MatrixXd& dict, const ClassMembers& classes,
                                         const Eigen::Ref<const Eigen::VectorXd>& y,
                                         Eigen::VectorXd coding);

class CrcModel {
 public:
  CrcModel(Dictionary normalized, RlsProjection projection);

  const Dictionary& dictionary() const noexcept { return dictionary_; }
  const RlsProjection& projection() const noexcept { return projection_; }
  double mu() const noexcept { return projection_.mu(); }
  const ClassMembers& classes() const noexcept { return classes_; }

 private:
  Dictionary dictionary_;
  RlsProjection projection_;
  ClassMembers classes_;
};

CrcModel crc_fit(const Dictionary& train, double mu = kDefaultMu, std::uint64_t seed = 0);
ClassificationResult crc_classify(const CrcModel& model, const Eigen::Ref<const Eigen::VectorXd>& y);

enum class Variant { rls, robust };

struct KcrcConfig {
  KernelSpec kernel = KernelSpec::rbf();
  PsiMethod psi = PsiMethod::identity;
  /// Target dimension c. Unset: n for identity and random, n - 1 for graph,
  /// the numerical rank of G for kpca.
  std::optional<Index> dim;
  GraphConfig graph;
  Variant variant = Variant::rls;
  double mu = kDefaultMu;  // ridge parameter of the rls variant
  AlmConfig alm;           // robust variant
  std::uint64_t seed = 42;
};

/// Kernel collaborative representation model. D' = psi^T G with unit columns.
class KcrcModel {
 public:
  KcrcModel(Dictionary dictionary, KernelSpec kernel, PseudoTransform psi, Eigen::MatrixXd dprime,
            Eigen::VectorXd column_scales, Variant variant, std::optional<RlsProjection> rls,
            std::optional<AlmSolver> alm);

  const Dictionary& dictionary() const noexcept { return dictionary_; }
  /// Kernel with beta resolved.
  const KernelSpec& kernel() const noexcept { return kernel_; }
  const PseudoTransform& psi() const noexcept { return psi_; }
  const Eigen::MatrixXd& dprime() const noexcept { return dprime_; }
  /// Norms of the columns of psi^T G before normalisation.
  const Eigen::VectorXd& column_scales() const noexcept { return column_scales_; }
  Variant variant() const noexcept { return variant_; }
  const std::optional<RlsProjection>& rls() const noexcept { return rls_; }
  const std::optional<AlmSolver>& alm() const noexcept { return alm_; }
  const ClassMembers& classes() const noexcept { return classes_; }

 private:
  Dictionary dictionary_;
  KernelSpec kernel_;
  PseudoTransform psi_;
  Eigen::MatrixXd dprime_;
  Eigen::VectorXd column_scales_;
  Variant variant_;
  std::optional<RlsProjection> rls_;
  std::optional<AlmSolver> alm_;
  ClassMembers classes_;
};

/// Number of Gram eigenvalues above the kpca floor.
Index kpca_usable_dim(const Eigen::MatrixXd& gram);

KcrcModel kcrc_fit(const Dictionary& train, const KcrcConfig& cfg);
/// Fit from a Gram matrix already built with `gram.spec` (beta resolved).
/// Distance-derived Gram matrices are PSD-repaired here.
KcrcModel kcrc_fit_gram(const Dictionary& train, GramMatrix gram, const KcrcConfig& cfg);

/// y' = psi^T K(D, y).
Eigen::VectorXd kcrc_project(const KcrcModel& model, const Eigen::Ref<const Eigen::VectorXd>& y);

ClassificationResult kcrc_classify(const KcrcModel& model, const Eigen::Ref<const Eigen::VectorXd>& y);
/// Classification from a precomputed kernel vector K(D, y).
ClassificationResult kcrc_classify_kernel(const KcrcModel& model, const Eigen::VectorXd& kvec);
/// Classification from a kernel-space representation y' (already projected).
ClassificationResult kcrc_classify_projected(const KcrcModel& model,
                                             const Eigen::Ref<const Eigen::VectorXd>& yprime);

}  // namespace kcrc
