#pragma once

#include <map>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "kcrc/classifiers.hpp"
#include "kcrc/dataset.hpp"
#include "kcrc/distance.hpp"

namespace kcrc {

struct LcdConfig {
  Index k = 50;                    // fine neighbourhood size
  std::optional<Index> coarse_k;   // set: coarse-to-fine, coarse_k >= k
  std::vector<MetricSpec> fine_metrics{MetricSpec{}};
  MetricSpec coarse_metric{};
  bool early_exit = true;

  /// Throws ArgumentError unless 1 <= k <= n, k <= coarse_k <= n and
  /// fine_metrics is non-empty.
  void validate(Index n) const;
};

/// Atoms of `source` nearest to a query. `indices` is strictly increasing.
struct LocalDictionary {
  std::vector<Index> indices;
  Dictionary view;
  const Dictionary* source = nullptr;
};

/// The k atoms nearest to y under `metric`, ties broken by smaller index.
LocalDictionary select_lcd(const MetricSpec& metric, const Dictionary& d,
                           const Eigen::Ref<const Eigen::VectorXd>& y, Index k);

/// Sorted union of the selections; all must share one source dictionary.
LocalDictionary unify_lcds(std::span<const LocalDictionary> selections);

/// Pairwise atom distances of a dictionary, computed once per metric and
/// shared read-only between queries.
class DistanceCache {
 public:
  DistanceCache(const Dictionary& d, std::span<const MetricSpec> metrics);

  /// nullptr when the metric was not cached.
  const Eigen::MatrixXd* pairwise(const MetricSpec& metric) const;

 private:
  std::map<Metric, Eigen::MatrixXd> pairwise_;
};

/// KCRC over a per-query locality constrained dictionary.
///
/// Each query selects the k nearest atoms under every fine metric (within the
/// coarse_k nearest under the coarse metric when coarse_k is set) and takes
/// their union. If every selected atom carries one label the query gets that
/// label directly. Otherwise a KCRC model is fit on the selected atoms alone,
/// with beta defaults resolved from them.
///
/// Distance-derived kernels consume the fine metric distances; with several
/// fine metrics each one is divided by its median over the selected pairs and
/// the results are averaged. The kernel's own metric field is ignored here.
class LcdClassifier {
 public:
  /// `d` must outlive the classifier. With `use_cache` the pairwise distances
  /// the kernel needs are computed up front for the whole dictionary.
  LcdClassifier(const Dictionary& d, LcdConfig lcd, KcrcConfig kcrc, bool use_cache = false);

  ClassificationResult classify(const Eigen::Ref<const Eigen::VectorXd>& y) const;

  const LcdConfig& lcd_config() const noexcept { return lcd_; }
  const KcrcConfig& kcrc_config() const noexcept { return kcrc_; }

 private:
  const Dictionary* dict_;
  LcdConfig lcd_;
  KcrcConfig kcrc_;
  std::optional<DistanceCache> cache_;
};

/// One-shot naive pipeline; requires cfg.coarse_k unset.
ClassificationResult classify_naive(const Dictionary& d, const Eigen::Ref<const Eigen::VectorXd>& y,
                                    const LcdConfig& cfg, const KcrcConfig& kcrc);
/// One-shot coarse-to-fine pipeline; requires cfg.coarse_k set.
ClassificationResult classify_practical(const Dictionary& d,
                                        const Eigen::Ref<const Eigen::VectorXd>& y,
                                        const LcdConfig& cfg, const KcrcConfig& kcrc);

}  // namespace kcrc
