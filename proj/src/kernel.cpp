#include "kcrc/kernel.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "kcrc/errors.hpp"

namespace kcrc {

std::string_view kernel_name(KernelKind kind) {
  switch (kind) {
    case KernelKind::linear: return "linear";
    case KernelKind::rbf: return "rbf";
    case KernelKind::dist_polarization: return "dist-poly";
    case KernelKind::dist_exponential: return "dist-exp";
  }
  return "unknown";
}

KernelKind parse_kernel(std::string_view name) {
  for (auto kind : {KernelKind::linear, KernelKind::rbf, KernelKind::dist_polarization,
                    KernelKind::dist_exponential}) {
    if (kernel_name(kind) == name) return kind;
  }
  throw ArgumentError("unknown kernel '" + std::string(name) +
                      "' (expected linear, rbf, dist-poly, dist-exp)");
}

void validate(const KernelSpec& spec) {
  if (spec.beta && !(*spec.beta > 0.0 && std::isfinite(*spec.beta))) {
    throw ArgumentError("kernel beta must be positive and finite");
  }
  if (is_distance_kernel(spec.kind) != spec.metric.has_value()) {
    throw ArgumentError(std::string("kernel ") + std::string(kernel_name(spec.kind)) +
                        (spec.metric ? " does not take a metric" : " requires a metric"));
  }
}

MetricSpec kernel_metric(const KernelSpec& spec) {
  if (is_distance_kernel(spec.kind)) return spec.metric.value();
  return MetricSpec{Metric::euclidean};
}

namespace {

double require_beta(const KernelSpec& spec) {
  if (!spec.beta) {
    throw ArgumentError(std::string("kernel ") + std::string(kernel_name(spec.kind)) +
                        " has no beta; resolve it before evaluation");
  }
  return *spec.beta;
}

}  // namespace

double kernel_from_distances(const KernelSpec& spec, double d_uv, double d_u0, double d_v0) {
  switch (spec.kind) {
    case KernelKind::rbf: return std::exp(-require_beta(spec) * d_uv * d_uv);
    case KernelKind::dist_polarization: return 0.5 * (d_u0 * d_u0 + d_v0 * d_v0 - d_uv * d_uv);
    case KernelKind::dist_exponential: {
      const double beta = require_beta(spec);
      return std::exp(-d_uv / (beta * beta));
    }
    case KernelKind::linear: break;
  }
  throw ArgumentError("linear kernel is not distance-derived");
}

double kernel_eval(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& u,
                   const Eigen::Ref<const Eigen::VectorXd>& v) {
  validate(spec);
  if (u.size() != v.size()) {
    throw ArgumentError("kernel between vectors of length " + std::to_string(u.size()) + " and " +
                        std::to_string(v.size()));
  }
  if (spec.kind == KernelKind::linear) return u.dot(v);
  const auto metric = kernel_metric(spec);
  const double d_uv = distance(metric, u, v);
  if (spec.kind != KernelKind::dist_polarization) return kernel_from_distances(spec, d_uv, 0, 0);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(u.size());
  return kernel_from_distances(spec, d_uv, distance(metric, u, zero), distance(metric, v, zero));
}

Eigen::VectorXd origin_distances(const MetricSpec& metric,
                                 const Eigen::Ref<const Eigen::MatrixXd>& atoms) {
  return distances_to(metric, atoms, Eigen::VectorXd::Zero(atoms.rows()));
}

Eigen::MatrixXd gram_from_distances(const KernelSpec& spec, const Eigen::MatrixXd& pairwise,
                                    const Eigen::VectorXd& origin) {
  const Index n = pairwise.rows();
  const bool needs_origin = spec.kind == KernelKind::dist_polarization;
  if (pairwise.cols() != n || (needs_origin && origin.size() != n)) {
    throw ArgumentError("distance matrix shape does not match atom count");
  }
  Eigen::MatrixXd g(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i <= j; ++i) {
      const double d0i = needs_origin ? origin(i) : 0.0;
      const double d0j = needs_origin ? origin(j) : 0.0;
      g(i, j) = kernel_from_distances(spec, pairwise(i, j), d0i, d0j);
      g(j, i) = g(i, j);
    }
  }
  return g;
}

Eigen::VectorXd kernel_vector_from_distances(const KernelSpec& spec,
                                             const Eigen::VectorXd& query_to_atoms,
                                             const Eigen::VectorXd& atom_origin,
                                             double query_origin) {
  const bool needs_origin = spec.kind == KernelKind::dist_polarization;
  Eigen::VectorXd k(query_to_atoms.size());
  for (Index i = 0; i < k.size(); ++i) {
    k(i) = kernel_from_distances(spec, query_to_atoms(i), needs_origin ? atom_origin(i) : 0.0,
                                 query_origin);
  }
  return k;
}

GramMatrix gram_matrix(const KernelSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& atoms) {
  validate(spec);
  const Index n = atoms.cols();
  if (spec.kind == KernelKind::linear) {
    Eigen::MatrixXd g(n, n);
    for (Index j = 0; j < n; ++j) {
      for (Index i = 0; i <= j; ++i) {
        g(i, j) = atoms.col(i).dot(atoms.col(j));
        g(j, i) = g(i, j);
      }
    }
    return {std::move(g), spec};
  }
  const auto metric = kernel_metric(spec);
  const Eigen::MatrixXd pairwise = self_distances(metric, atoms);
  const Eigen::VectorXd origin = spec.kind == KernelKind::dist_polarization
                                     ? origin_distances(metric, atoms)
                                     : Eigen::VectorXd();
  return {gram_from_distances(spec, pairwise, origin), spec};
}

GramMatrix gram_matrix(const KernelSpec& spec, const Dictionary& d) {
  return gram_matrix(spec, d.matrix());
}

Eigen::VectorXd kernel_vector(const KernelSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& atoms,
                              const Eigen::Ref<const Eigen::VectorXd>& y) {
  validate(spec);
  if (y.size() != atoms.rows()) {
    throw ArgumentError("query has length " + std::to_string(y.size()) + ", atoms have " +
                        std::to_string(atoms.rows()) + " rows");
  }
  if (spec.kind == KernelKind::linear) {
    Eigen::VectorXd k(atoms.cols());
    for (Index i = 0; i < atoms.cols(); ++i) k(i) = atoms.col(i).dot(y);
    return k;
  }
  const auto metric = kernel_metric(spec);
  const Eigen::VectorXd to_query = distances_to(metric, atoms, y);
  if (spec.kind != KernelKind::dist_polarization) {
    return kernel_vector_from_distances(spec, to_query, Eigen::VectorXd(), 0.0);
  }
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(y.size());
  return kernel_vector_from_distances(spec, to_query, origin_distances(metric, atoms),
                                      distance(metric, y, zero));
}

Eigen::VectorXd kernel_vector(const KernelSpec& spec, const Dictionary& d,
                              const Eigen::Ref<const Eigen::VectorXd>& y) {
  return kernel_vector(spec, d.matrix(), y);
}

KernelSpec resolve_beta(const KernelSpec& spec, const Eigen::MatrixXd& pairwise) {
  KernelSpec out = spec;
  if (out.beta) return out;
  const double median = median_off_diagonal(pairwise);
  if (spec.kind == KernelKind::rbf) {
    out.beta = median > 0.0 ? 1.0 / (2.0 * median * median) : 1.0;
  } else if (spec.kind == KernelKind::dist_exponential) {
    out.beta = median > 0.0 ? std::sqrt(median) : 1.0;
  }
  return out;
}

KernelSpec resolve_kernel(const KernelSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& atoms) {
  validate(spec);
  if (spec.beta || spec.kind == KernelKind::linear ||
      spec.kind == KernelKind::dist_polarization) {
    return spec;
  }
  return resolve_beta(spec, self_distances(kernel_metric(spec), atoms));
}

double min_eigenvalue(const Eigen::MatrixXd& symmetric) {
  if (symmetric.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetric, Eigen::EigenvaluesOnly);
  return eig.eigenvalues()(0);
}

GramMatrix psd_repair(GramMatrix g) {
  if (g.values.size() == 0) return g;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g.values);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("eigendecomposition failed during PSD repair");
  }
  if (eig.eigenvalues()(0) >= -kPsdTolerance) return g;
  const Eigen::VectorXd clamped = eig.eigenvalues().cwiseMax(0.0);
  const auto& v = eig.eigenvectors();
  Eigen::MatrixXd repaired = v * clamped.asDiagonal() * v.transpose();
  g.values = 0.5 * (repaired + repaired.transpose());
  return g;
}

}  // namespace kcrc
