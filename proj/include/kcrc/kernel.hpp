#pragma once

#include <optional>
#include <string_view>

#include <Eigen/Core>

#include "kcrc/dataset.hpp"
#include "kcrc/distance.hpp"

namespace kcrc {

enum class KernelKind { linear, rbf, dist_polarization, dist_exponential };

/// Kernel choice. `beta` left empty is resolved from the atoms a model is fit
/// on (see resolve_kernel). `metric` is required exactly for the two
/// distance-derived kinds.
struct KernelSpec {
  KernelKind kind = KernelKind::linear;
  std::optional<double> beta;
  std::optional<MetricSpec> metric;

  static KernelSpec linear() { return {}; }
  static KernelSpec rbf(std::optional<double> beta = std::nullopt) {
    return {KernelKind::rbf, beta, std::nullopt};
  }
  static KernelSpec polarization(MetricSpec metric) {
    return {KernelKind::dist_polarization, std::nullopt, metric};
  }
  static KernelSpec exponential(MetricSpec metric, std::optional<double> beta = std::nullopt) {
    return {KernelKind::dist_exponential, beta, metric};
  }
};

/// CLI names: "linear", "rbf", "dist-poly", "dist-exp".
std::string_view kernel_name(KernelKind kind);
KernelKind parse_kernel(std::string_view name);

constexpr bool is_distance_kernel(KernelKind kind) {
  return kind == KernelKind::dist_polarization || kind == KernelKind::dist_exponential;
}

/// Throws ArgumentError if the spec violates its invariants.
void validate(const KernelSpec& spec);

/// Metric whose distances the kernel consumes (euclidean for rbf).
/// Meaningless for the linear kernel.
MetricSpec kernel_metric(const KernelSpec& spec);

/// Kernel value from precomputed distances. `d_uv` is Dist(u, v); `d_u0` and
/// `d_v0` are distances to the origin and only used by dist_polarization.
///
///   rbf               exp(-beta * d_uv^2)
///   dist_polarization 0.5 * (d_u0^2 + d_v0^2 - d_uv^2)
///   dist_exponential  exp(-d_uv / beta^2)
double kernel_from_distances(const KernelSpec& spec, double d_uv, double d_u0, double d_v0);

double kernel_eval(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& u,
                   const Eigen::Ref<const Eigen::VectorXd>& v);

struct GramMatrix {
  Eigen::MatrixXd values;
  KernelSpec spec;
};

/// G(i, j) = kernel_eval(spec, atom i, atom j); upper triangle mirrored.
GramMatrix gram_matrix(const KernelSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& atoms);
GramMatrix gram_matrix(const KernelSpec& spec, const Dictionary& d);

/// K(D, y): entry k is kernel_eval(spec, atom k, y).
Eigen::VectorXd kernel_vector(const KernelSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& atoms,
                              const Eigen::Ref<const Eigen::VectorXd>& y);
Eigen::VectorXd kernel_vector(const KernelSpec& spec, const Dictionary& d,
                              const Eigen::Ref<const Eigen::VectorXd>& y);

/// Gram matrix of a distance-consuming kernel from a symmetric distance matrix
/// and per-atom distances to the origin.
Eigen::MatrixXd gram_from_distances(const KernelSpec& spec, const Eigen::MatrixXd& pairwise,
                                    const Eigen::VectorXd& origin);

Eigen::VectorXd kernel_vector_from_distances(const KernelSpec& spec,
                                             const Eigen::VectorXd& query_to_atoms,
                                             const Eigen::VectorXd& atom_origin,
                                             double query_origin);

/// Per-atom distances to the zero vector under `metric`.
Eigen::VectorXd origin_distances(const MetricSpec& metric,
                                 const Eigen::Ref<const Eigen::MatrixXd>& atoms);

/// Fills an unset beta from the median m of the off-diagonal entries of
/// `pairwise` (distances under kernel_metric): rbf gets 1 / (2 m^2),
/// dist_exponential gets sqrt(m). A zero median yields beta = 1.
KernelSpec resolve_beta(const KernelSpec& spec, const Eigen::MatrixXd& pairwise);
KernelSpec resolve_kernel(const KernelSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& atoms);

inline constexpr double kPsdTolerance = 1e-8;

double min_eigenvalue(const Eigen::MatrixXd& symmetric);

/// Clamps negative eigenvalues to zero. Returns the input untouched when its
/// smallest eigenvalue is already >= -kPsdTolerance.
GramMatrix psd_repair(GramMatrix g);

}  // namespace kcrc
