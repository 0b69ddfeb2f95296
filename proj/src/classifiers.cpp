#include "kcrc/classifiers.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

#include "kcrc/errors.hpp"

namespace kcrc {

ClassMembers group_by_class(const Dictionary& d) {
  ClassMembers out;
  for (auto& [label, members] : d.class_members()) out.emplace_back(label, std::move(members));
  return out;
}

ClassificationResult decide_by_residuals(const Eigen::MatrixXd& dict, const ClassMembers& classes,
                                         const Eigen::Ref<const Eigen::VectorXd>& y,
                                         Eigen::VectorXd coding) {
  ClassificationResult out;
  double best = std::numeric_limits<double>::infinity();
  bool found = false;
  Eigen::VectorXd recon(dict.rows());
  for (const auto& [label, members] : classes) {
    double coding_sq = 0.0;
    recon.setZero();
    for (const Index j : members) {
      coding_sq += coding(j) * coding(j);
      recon.noalias() += coding(j) * dict.col(j);
    }
    const double coding_norm = std::sqrt(coding_sq);
    if (coding_norm < kDegenerateCoding) {
      out.residuals[label] = std::numeric_limits<double>::infinity();
      continue;
    }
    const double r = (y - recon).norm() / coding_norm;
    out.residuals[label] = r;
    // Classes arrive in ascending label order, so strict < keeps the smaller label on ties.
    if (r < best) {
      best = r;
      out.label = label;
      found = true;
    }
  }
  if (!found) {
    throw NumericalError("every class coding is degenerate; cannot assign a label");
  }
  out.coding = std::move(coding);
  return out;
}

CrcModel::CrcModel(Dictionary normalized, RlsProjection projection)
    : dictionary_(std::move(normalized)),
      projection_(std::move(projection)),
      classes_(group_by_class(dictionary_)) {}

CrcModel crc_fit(const Dictionary& train, double mu, std::uint64_t seed) {
  if (train.empty()) throw ArgumentError("cannot fit CRC on an empty dictionary");
  Dictionary normalized(unit_normalize_columns(train.atoms(), seed), train.labels());
  auto projection = rls_precompute(normalized.matrix(), mu);
  return CrcModel(std::move(normalized), std::move(projection));
}

ClassificationResult crc_classify(const CrcModel& model, const Eigen::Ref<const Eigen::VectorXd>& y) {
  if (y.size() != model.dictionary().dim()) {
    throw ArgumentError("query has dimension " + std::to_string(y.size()) + ", model expects " +
                        std::to_string(model.dictionary().dim()));
  }
  return decide_by_residuals(model.dictionary().matrix(), model.classes(), y,
                             rls_solve(model.projection(), y));
}

KcrcModel::KcrcModel(Dictionary dictionary, KernelSpec kernel, PseudoTransform psi,
                     Eigen::MatrixXd dprime, Eigen::VectorXd column_scales, Variant variant,
                     std::optional<RlsProjection> rls, std::optional<AlmSolver> alm)
    : dictionary_(std::move(dictionary)),
      kernel_(std::move(kernel)),
      psi_(std::move(psi)),
      dprime_(std::move(dprime)),
      column_scales_(std::move(column_scales)),
      variant_(variant),
      rls_(std::move(rls)),
      alm_(std::move(alm)),
      classes_(group_by_class(dictionary_)) {}

Index kpca_usable_dim(const Eigen::MatrixXd& gram) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  const auto& values = eig.eigenvalues();
  const double largest = values(values.size() - 1);
  if (!(largest > 0.0)) return 0;
  return (values.array() > kEigenFloor * largest).count();
}

namespace {

PseudoTransform build_psi(const KcrcConfig& cfg, const Dictionary& train,
                          const Eigen::MatrixXd& gram) {
  const Index n = train.size();
  switch (cfg.psi) {
    case PsiMethod::identity: return build_psi_identity(n);
    case PsiMethod::kpca: return build_psi_kpca(gram, cfg.dim.value_or(kpca_usable_dim(gram)));
    case PsiMethod::random: return build_psi_random(n, cfg.dim.value_or(n), cfg.seed);
    case PsiMethod::graph: return build_psi_graph(train, cfg.graph, cfg.dim.value_or(n - 1));
    case PsiMethod::kfda: break;
  }
  throw ArgumentError("pseudo-transform 'kfda' is unsupported");
}

}  // namespace

KcrcModel kcrc_fit_gram(const Dictionary& train, GramMatrix gram, const KcrcConfig& cfg) {
  if (train.empty()) throw ArgumentError("cannot fit KCRC on an empty dictionary");
  if (gram.values.rows() != train.size() || gram.values.cols() != train.size()) {
    throw ArgumentError("Gram matrix does not match the dictionary size");
  }
  if (is_distance_kernel(gram.spec.kind)) gram = psd_repair(std::move(gram));

  auto psi = build_psi(cfg, train, gram.values);
  const Eigen::MatrixXd raw = psi.apply_transpose(gram.values);
  Eigen::VectorXd scales = raw.colwise().norm().transpose();
  Eigen::MatrixXd dprime = unit_normalize_columns(raw, cfg.seed);

  std::optional<RlsProjection> rls;
  std::optional<AlmSolver> alm;
  if (cfg.variant == Variant::rls) {
    rls = rls_precompute(dprime, cfg.mu);
  } else {
    alm.emplace(dprime, cfg.alm);
  }
  return KcrcModel(train, std::move(gram.spec), std::move(psi), std::move(dprime),
                   std::move(scales), cfg.variant, std::move(rls), std::move(alm));
}

KcrcModel kcrc_fit(const Dictionary& train, const KcrcConfig& cfg) {
  if (train.empty()) throw ArgumentError("cannot fit KCRC on an empty dictionary");
  validate(cfg.kernel);
  if (cfg.kernel.kind == KernelKind::linear) {
    return kcrc_fit_gram(train, gram_matrix(cfg.kernel, train), cfg);
  }
  // One distance pass serves both the beta heuristic and the Gram entries.
  const auto metric = kernel_metric(cfg.kernel);
  const Eigen::MatrixXd pairwise = self_distances(metric, train.matrix());
  const KernelSpec spec = resolve_beta(cfg.kernel, pairwise);
  const Eigen::VectorXd origin = spec.kind == KernelKind::dist_polarization
                                     ? origin_distances(metric, train.matrix())
                                     : Eigen::VectorXd();
  return kcrc_fit_gram(train, GramMatrix{gram_from_distances(spec, pairwise, origin), spec}, cfg);
}

Eigen::VectorXd kcrc_project(const KcrcModel& model, const Eigen::Ref<const Eigen::VectorXd>& y) {
  if (y.size() != model.dictionary().dim()) {
    throw ArgumentError("query has dimension " + std::to_string(y.size()) + ", model expects " +
                        std::to_string(model.dictionary().dim()));
  }
  return model.psi().apply_transpose(kernel_vector(model.kernel(), model.dictionary(), y));
}

ClassificationResult kcrc_classify_projected(const KcrcModel& model,
                                             const Eigen::Ref<const Eigen::VectorXd>& yprime) {
  if (yprime.size() != model.dprime().rows()) {
    throw ArgumentError("kernel-space query has length " + std::to_string(yprime.size()) +
                        ", expected " + std::to_string(model.dprime().rows()));
  }
  if (model.variant() == Variant::rls) {
    return decide_by_residuals(model.dprime(), model.classes(), yprime,
                               rls_solve(*model.rls(), yprime));
  }
  auto solved = model.alm()->solve(yprime);
  auto out = decide_by_residuals(model.dprime(), model.classes(), yprime, std::move(solved.x));
  out.error_vector = std::move(solved.e);
  return out;
}

ClassificationResult kcrc_classify_kernel(const KcrcModel& model, const Eigen::VectorXd& kvec) {
  if (kvec.size() != model.dictionary().size()) {
    throw ArgumentError("kernel vector has length " + std::to_string(kvec.size()) +
                        ", expected " + std::to_string(model.dictionary().size()));
  }
  return kcrc_classify_projected(model, model.psi().apply_transpose(kvec));
}

ClassificationResult kcrc_classify(const KcrcModel& model, const Eigen::Ref<const Eigen::VectorXd>& y) {
  return kcrc_classify_projected(model, kcrc_project(model, y));
}

}  // namespace kcrc
