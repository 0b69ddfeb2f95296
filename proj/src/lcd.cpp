#include "kcrc/lcd.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "kcrc/errors.hpp"
#include "kcrc/kernel.hpp"

namespace kcrc {

void LcdConfig::validate(Index n) const {
  if (k < 1 || k > n) {
    throw ArgumentError("lcd k = " + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
  }
  if (coarse_k && (*coarse_k < k || *coarse_k > n)) {
    throw ArgumentError("lcd coarse k = " + std::to_string(*coarse_k) + " outside [" +
                        std::to_string(k) + ", " + std::to_string(n) + "]");
  }
  if (fine_metrics.empty()) throw ArgumentError("lcd needs at least one fine metric");
}

namespace {

// The k entries of `candidates` with the smallest dist(c), ties to the smaller
// index, returned in increasing index order. `dist` is indexed by atom.
std::vector<Index> nearest(const Eigen::VectorXd& dist, std::vector<Index> candidates, Index k) {
  const auto mid = candidates.begin() + k;
  std::nth_element(candidates.begin(), mid - 1, candidates.end(), [&](Index a, Index b) {
    return dist(a) < dist(b) || (dist(a) == dist(b) && a < b);
  });
  candidates.resize(static_cast<std::size_t>(k));
  std::sort(candidates.begin(), candidates.end());
  return candidates;
}

std::vector<Index> all_indices(Index n) {
  std::vector<Index> out(static_cast<std::size_t>(n));
  std::iota(out.begin(), out.end(), Index{0});
  return out;
}

LocalDictionary make_local(const Dictionary& d, std::vector<Index> indices) {
  Dictionary view = d.select(indices);
  return LocalDictionary{std::move(indices), std::move(view), &d};
}

Eigen::VectorXd gather(const Eigen::VectorXd& v, const std::vector<Index>& idx) {
  Eigen::VectorXd out(static_cast<Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Index>(i)) = v(idx[i]);
  return out;
}

Eigen::MatrixXd gather(const Eigen::MatrixXd& m, const std::vector<Index>& idx) {
  const auto n = static_cast<Index>(idx.size());
  Eigen::MatrixXd out(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      out(i, j) = m(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
  }
  return out;
}

// Query-to-atom distances for one metric, valid on the atoms visited so far.
struct QueryDistances {
  MetricSpec metric;
  Eigen::VectorXd values;
};

// Distances consumed by the kernel over the selected atoms.
struct KernelDistances {
  Eigen::MatrixXd pairwise;
  Eigen::VectorXd query;
  Eigen::VectorXd origin;
  double query_origin = 0.0;
};

}  // namespace

LocalDictionary select_lcd(const MetricSpec& metric, const Dictionary& d,
                           const Eigen::Ref<const Eigen::VectorXd>& y, Index k) {
  if (k < 1 || k > d.size()) {
    throw ArgumentError("lcd k = " + std::to_string(k) + " outside [1, " +
                        std::to_string(d.size()) + "]");
  }
  const Eigen::VectorXd dist = distances_to(metric, d.matrix(), y);
  return make_local(d, nearest(dist, all_indices(d.size()), k));
}

LocalDictionary unify_lcds(std::span<const LocalDictionary> selections) {
  if (selections.empty()) throw ArgumentError("cannot unify an empty list of selections");
  const Dictionary* source = selections.front().source;
  if (source == nullptr) throw ArgumentError("selection has no source dictionary");
  std::vector<Index> merged;
  for (const auto& s : selections) {
    if (s.source != source) {
      throw ArgumentError("cannot unify selections from different dictionaries");
    }
    std::vector<Index> next;
    next.reserve(merged.size() + s.indices.size());
    std::set_union(merged.begin(), merged.end(), s.indices.begin(), s.indices.end(),
                   std::back_inserter(next));
    merged = std::move(next);
  }
  return make_local(*source, std::move(merged));
}

DistanceCache::DistanceCache(const Dictionary& d, std::span<const MetricSpec> metrics) {
  for (const auto& m : metrics) {
    if (!pairwise_.contains(m.kind)) pairwise_.emplace(m.kind, self_distances(m, d.matrix()));
  }
}

const Eigen::MatrixXd* DistanceCache::pairwise(const MetricSpec& metric) const {
  const auto it = pairwise_.find(metric.kind);
  return it == pairwise_.end() ? nullptr : &it->second;
}

LcdClassifier::LcdClassifier(const Dictionary& d, LcdConfig lcd, KcrcConfig kcrc, bool use_cache)
    : dict_(&d), lcd_(std::move(lcd)), kcrc_(std::move(kcrc)) {
  if (d.empty()) throw ArgumentError("lcd needs a non-empty dictionary");
  lcd_.validate(d.size());
  validate(kcrc_.kernel);
  if (use_cache && kcrc_.kernel.kind != KernelKind::linear) {
    if (is_distance_kernel(kcrc_.kernel.kind)) {
      cache_.emplace(d, lcd_.fine_metrics);
    } else {
      const MetricSpec metric = kernel_metric(kcrc_.kernel);
      cache_.emplace(d, std::span<const MetricSpec>(&metric, 1));
    }
  }
}

ClassificationResult LcdClassifier::classify(const Eigen::Ref<const Eigen::VectorXd>& y) const {
  const Dictionary& d = *dict_;
  if (y.size() != d.dim()) {
    throw ArgumentError("query has dimension " + std::to_string(y.size()) +
                        ", dictionary expects " + std::to_string(d.dim()));
  }

  std::vector<QueryDistances> known;
  auto find_known = [&](const MetricSpec& m) -> QueryDistances* {
    for (auto& q : known) {
      if (q.metric == m) return &q;
    }
    return nullptr;
  };

  // Coarse stage.
  std::vector<Index> candidates = all_indices(d.size());
  const bool coarse = lcd_.coarse_k.has_value();
  if (coarse) {
    known.push_back({lcd_.coarse_metric, distances_to(lcd_.coarse_metric, d.matrix(), y)});
    candidates = nearest(known.back().values, std::move(candidates), *lcd_.coarse_k);
  }

  // Fine stage: per-metric selection within the candidates, then their union.
  std::vector<Index> selected;
  for (const auto& metric : lcd_.fine_metrics) {
    QueryDistances* q = find_known(metric);
    if (q == nullptr) {
      Eigen::VectorXd values;
      if (coarse) {
        values = Eigen::VectorXd::Zero(d.size());
        for (const Index c : candidates) values(c) = distance(metric, d.atom(c), y);
      } else {
        values = distances_to(metric, d.matrix(), y);
      }
      known.push_back({metric, std::move(values)});
      q = &known.back();
    }
    const auto chosen = nearest(q->values, candidates, lcd_.k);
    std::vector<Index> next;
    std::set_union(selected.begin(), selected.end(), chosen.begin(), chosen.end(),
                   std::back_inserter(next));
    selected = std::move(next);
  }

  const Label first = d.label(selected.front());
  const bool single_label = std::all_of(selected.begin(), selected.end(),
                                        [&](Index i) { return d.label(i) == first; });
  if (lcd_.early_exit && single_label) {
    ClassificationResult out;
    out.label = first;
    out.early_exit = true;
    out.support = std::move(selected);
    return out;
  }

  const Dictionary view = d.select(selected);
  const auto kernel_distances = [&](const MetricSpec& m, bool with_origin) {
    KernelDistances kd;
    if (const QueryDistances* q = find_known(m)) {
      kd.query = gather(q->values, selected);
    } else {
      kd.query = distances_to(m, view.matrix(), y);
    }
    const Eigen::MatrixXd* cached = cache_ ? cache_->pairwise(m) : nullptr;
    kd.pairwise = cached ? gather(*cached, selected) : self_distances(m, view.matrix());
    if (with_origin) {
      kd.origin = origin_distances(m, view.matrix());
      kd.query_origin = distance(m, y, Eigen::VectorXd::Zero(y.size()));
    }
    return kd;
  };

  KernelSpec spec = kcrc_.kernel;
  GramMatrix gram;
  Eigen::VectorXd kvec;
  if (spec.kind == KernelKind::linear) {
    gram = gram_matrix(spec, view);
    kvec = kernel_vector(spec, view, y);
  } else {
    const bool with_origin = spec.kind == KernelKind::dist_polarization;
    KernelDistances kd;
    if (!is_distance_kernel(spec.kind)) {
      kd = kernel_distances(kernel_metric(spec), false);
    } else if (lcd_.fine_metrics.size() == 1) {
      spec.metric = lcd_.fine_metrics.front();
      kd = kernel_distances(*spec.metric, with_origin);
    } else {
      // Unified distance: scale-aligned mean of the fine metrics.
      spec.metric = lcd_.fine_metrics.front();
      const auto n = static_cast<Index>(selected.size());
      kd.pairwise = Eigen::MatrixXd::Zero(n, n);
      kd.query = Eigen::VectorXd::Zero(n);
      if (with_origin) kd.origin = Eigen::VectorXd::Zero(n);
      const double weight = 1.0 / static_cast<double>(lcd_.fine_metrics.size());
      for (const auto& m : lcd_.fine_metrics) {
        const KernelDistances part = kernel_distances(m, with_origin);
        const double median = median_off_diagonal(part.pairwise);
        const double scale = weight / (median > 0.0 ? median : 1.0);
        kd.pairwise += scale * part.pairwise;
        kd.query += scale * part.query;
        if (with_origin) {
          kd.origin += scale * part.origin;
          kd.query_origin += scale * part.query_origin;
        }
      }
    }
    spec = resolve_beta(spec, kd.pairwise);
    gram = GramMatrix{gram_from_distances(spec, kd.pairwise, kd.origin), spec};
    kvec = kernel_vector_from_distances(spec, kd.query, kd.origin, kd.query_origin);
  }

  KcrcConfig local = kcrc_;
  if (local.dim) {
    const Index limit = view.size() - (local.psi == PsiMethod::graph ? 1 : 0);
    local.dim = std::min(*local.dim, std::max<Index>(limit, 1));
  }
  const KcrcModel model = kcrc_fit_gram(view, std::move(gram), local);
  ClassificationResult out = kcrc_classify_kernel(model, kvec);
  out.support = std::move(selected);
  return out;
}

ClassificationResult classify_naive(const Dictionary& d, const Eigen::Ref<const Eigen::VectorXd>& y,
                                    const LcdConfig& cfg, const KcrcConfig& kcrc) {
  if (cfg.coarse_k) throw ArgumentError("naive lcd pipeline takes no coarse k");
  return LcdClassifier(d, cfg, kcrc).classify(y);
}

ClassificationResult classify_practical(const Dictionary& d,
                                        const Eigen::Ref<const Eigen::VectorXd>& y,
                                        const LcdConfig& cfg, const KcrcConfig& kcrc) {
  if (!cfg.coarse_k) throw ArgumentError("coarse-to-fine lcd pipeline needs a coarse k");
  return LcdClassifier(d, cfg, kcrc).classify(y);
}

}  // namespace kcrc
