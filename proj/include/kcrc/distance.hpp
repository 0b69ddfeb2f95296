#pragma once

#include <span>
#include <string>
#include <string_view>

#include <Eigen/Core>

#include "kcrc/types.hpp"

namespace kcrc {

enum class Metric { euclidean, manhattan, chessboard, correlation, chi_square };

// No metric currently takes parameters.
struct MetricSpec {
  Metric kind = Metric::euclidean;

  friend bool operator==(const MetricSpec&, const MetricSpec&) = default;
};

std::string_view metric_name(Metric m);
/// Throws ArgumentError for unknown names.
Metric parse_metric(std::string_view name);
std::span<const Metric> all_metrics();

inline constexpr double kChiSquareEps = 1e-12;

/// Distance between two vectors of equal length.
///
/// euclidean, manhattan and chessboard are the l2, l1 and l-infinity norms of
/// a - b. correlation is 1 - Pearson r, with r = 0 when either input is
/// constant. chi_square is 0.5 * sum (a_i - b_i)^2 / (a_i + b_i + eps) and
/// requires non-negative entries (histograms).
double distance(const MetricSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& a,
                const Eigen::Ref<const Eigen::VectorXd>& b);

/// Entry (i, j) is distance(spec, a.col(i), b.col(j)).
Eigen::MatrixXd pairwise_distances(const MetricSpec& spec,
                                   const Eigen::Ref<const Eigen::MatrixXd>& a,
                                   const Eigen::Ref<const Eigen::MatrixXd>& b);

/// Symmetric matrix of distances between the columns of `a`, zero diagonal.
Eigen::MatrixXd self_distances(const MetricSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& a);

/// Distance from each column of `a` to `y`.
Eigen::VectorXd distances_to(const MetricSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& a,
                             const Eigen::Ref<const Eigen::VectorXd>& y);

/// Median of the strictly-upper-triangular entries of a square matrix.
/// Returns 0 when there are no off-diagonal entries.
double median_off_diagonal(const Eigen::Ref<const Eigen::MatrixXd>& pairwise);

}  // namespace kcrc
