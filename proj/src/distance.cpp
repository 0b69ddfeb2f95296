#include "kcrc/distance.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "kcrc/errors.hpp"

namespace kcrc {

namespace {

constexpr std::array kMetrics{Metric::euclidean, Metric::manhattan, Metric::chessboard,
                              Metric::correlation, Metric::chi_square};

double pearson(const Eigen::Ref<const Eigen::VectorXd>& a,
               const Eigen::Ref<const Eigen::VectorXd>& b) {
  const auto n = static_cast<double>(a.size());
  const Eigen::ArrayXd ca = a.array() - a.sum() / n;
  const Eigen::ArrayXd cb = b.array() - b.sum() / n;
  const double sa = std::sqrt((ca * ca).sum());
  const double sb = std::sqrt((cb * cb).sum());
  if (sa == 0.0 || sb == 0.0) return 0.0;
  // Clamp rounding excursions so the distance stays inside [0, 2].
  return std::clamp((ca * cb).sum() / (sa * sb), -1.0, 1.0);
}

}  // namespace

std::string_view metric_name(Metric m) {
  switch (m) {
    case Metric::euclidean: return "euclidean";
    case Metric::manhattan: return "manhattan";
    case Metric::chessboard: return "chessboard";
    case Metric::correlation: return "correlation";
    case Metric::chi_square: return "chi_square";
  }
  return "unknown";
}

Metric parse_metric(std::string_view name) {
  for (const auto m : kMetrics) {
    if (metric_name(m) == name) return m;
  }
  throw ArgumentError("unknown metric '" + std::string(name) +
                      "' (expected euclidean, manhattan, chessboard, correlation, chi_square)");
}

std::span<const Metric> all_metrics() { return kMetrics; }

double distance(const MetricSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& a,
                const Eigen::Ref<const Eigen::VectorXd>& b) {
  if (a.size() != b.size()) {
    throw ArgumentError("distance between vectors of length " + std::to_string(a.size()) +
                        " and " + std::to_string(b.size()));
  }
  switch (spec.kind) {
    case Metric::euclidean: return (a - b).norm();
    case Metric::manhattan: return (a - b).lpNorm<1>();
    case Metric::chessboard: return a.size() == 0 ? 0.0 : (a - b).lpNorm<Eigen::Infinity>();
    case Metric::correlation: return 1.0 - pearson(a, b);
    case Metric::chi_square: {
      if ((a.array() < 0.0).any() || (b.array() < 0.0).any()) {
        throw DomainError("chi_square distance requires non-negative entries");
      }
      const Eigen::ArrayXd diff = a.array() - b.array();
      return 0.5 * (diff.square() / (a.array() + b.array() + kChiSquareEps)).sum();
    }
  }
  throw ArgumentError("unsupported metric");
}

Eigen::MatrixXd pairwise_distances(const MetricSpec& spec,
                                   const Eigen::Ref<const Eigen::MatrixXd>& a,
                                   const Eigen::Ref<const Eigen::MatrixXd>& b) {
  if (a.rows() != b.rows()) {
    throw ArgumentError("pairwise distances between " + std::to_string(a.rows()) + "-row and " +
                        std::to_string(b.rows()) + "-row matrices");
  }
  Eigen::MatrixXd out(a.cols(), b.cols());
  for (Index j = 0; j < b.cols(); ++j) {
    for (Index i = 0; i < a.cols(); ++i) {
      out(i, j) = distance(spec, a.col(i), b.col(j));
    }
  }
  return out;
}

Eigen::MatrixXd self_distances(const MetricSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& a) {
  const Index n = a.cols();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < j; ++i) {
      out(i, j) = distance(spec, a.col(i), a.col(j));
      out(j, i) = out(i, j);
    }
  }
  return out;
}

Eigen::VectorXd distances_to(const MetricSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& a,
                             const Eigen::Ref<const Eigen::VectorXd>& y) {
  if (a.rows() != y.size()) {
    throw ArgumentError("query has length " + std::to_string(y.size()) + ", atoms have " +
                        std::to_string(a.rows()) + " rows");
  }
  Eigen::VectorXd out(a.cols());
  for (Index k = 0; k < a.cols(); ++k) out(k) = distance(spec, a.col(k), y);
  return out;
}

double median_off_diagonal(const Eigen::Ref<const Eigen::MatrixXd>& pairwise) {
  const Index n = pairwise.rows();
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Index j = 1; j < n; ++j) {
    for (Index i = 0; i < j; ++i) values.push_back(pairwise(i, j));
  }
  if (values.empty()) return 0.0;
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
  std::nth_element(values.begin(), mid, values.end());
  if (values.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(values.begin(), mid);
  return 0.5 * (lower + upper);
}

}  // namespace kcrc
