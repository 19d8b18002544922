#include "alignaudit/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace alignaudit::aggregate {

std::string_view to_string(Method m) {
  return m == Method::rounded_average ? "rounded_average" : "majority";
}

Method parse_method(std::string_view s) {
  if (s == "avg" || s == "rounded_average" || s == "average")
    return Method::rounded_average;
  if (s == "majority") return Method::majority;
  throw ConfigError("unknown aggregation method: " + std::string(s));
}

int rounded_average(std::span<const int> labels) {
  if (labels.empty()) throw NoSupportError("rounded_average of empty multiset");
  long long sum = std::accumulate(labels.begin(), labels.end(), 0LL);
  const long long n = static_cast<long long>(labels.size());
  // floor((sum + n/2) / n) with exact half-away-from-zero for positive labels
  return static_cast<int>((2 * sum + n) / (2 * n));
}

int majority(std::span<const int> labels) {
  if (labels.empty()) throw NoSupportError("majority of empty multiset");
  std::map<int, int> counts;
  for (int v : labels) ++counts[v];
  int best_label = 0;
  int best_count = -1;
  for (const auto& [label, count] : counts) {
    if (count >= best_count) {  // ties resolve to the larger label
      best_count = count;
      best_label = label;
    }
  }
  return best_label;
}

int aggregate_labels(std::span<const int> labels, Method m) {
  return m == Method::rounded_average ? rounded_average(labels)
                                      : majority(labels);
}

bool GroupFilter::matches(const Demographics& d) const {
  if (gender && (!d.gender || *d.gender != *gender)) return false;
  if (ethnicity && (!d.ethnicity || *d.ethnicity != *ethnicity)) return false;
  return true;
}

GroupFilter GroupFilter::for_group(Axis axis, std::string_view category) {
  GroupFilter f;
  if (axis == Axis::gender) {
    f.gender = parse_gender(category);
    if (!f.gender) throw ConfigError("unknown gender: " + std::string(category));
  } else {
    f.ethnicity = parse_ethnicity(category);
    if (!f.ethnicity)
      throw ConfigError("unknown ethnicity: " + std::string(category));
  }
  return f;
}

GroundTruth group_ground_truth(const AnnotationStore& store,
                               const DatasetId& dataset,
                               const std::string& doc_id, Method method,
                               const GroupFilter& filter) {
  auto it = store.docs().find({dataset.name(), doc_id});
  if (it == store.docs().end())
    throw NoSupportError("document not in store: (" + dataset.name() + ", " +
                         doc_id + ")");
  std::vector<int> labels;
  for (std::size_t i = it->second.begin; i < it->second.end; ++i) {
    const auto& r = store.records()[i];
    if (filter.matches(r.demographics)) labels.push_back(r.label);
  }
  if (labels.empty())
    throw NoSupportError("no annotations match the group filter on (" +
                         dataset.name() + ", " + doc_id + ")");
  GroundTruth gt;
  gt.dataset = dataset;
  gt.doc_id = doc_id;
  gt.method = method;
  gt.filter = filter;
  gt.value = aggregate_labels(labels, method);
  gt.support = static_cast<int>(labels.size());
  return gt;
}

std::map<DocKey, GroundTruth> ground_truths(
    const AnnotationStore& store, Method method, const GroupFilter& filter,
    std::span<const Demographics> demo_override) {
  if (!demo_override.empty() && demo_override.size() != store.size())
    throw PreconditionError("demographics override size mismatch");
  std::map<DocKey, GroundTruth> out;
  std::vector<int> labels;
  for (const auto& [key, span] : store.docs()) {
    labels.clear();
    for (std::size_t i = span.begin; i < span.end; ++i) {
      const Demographics& demo = demo_override.empty()
                                     ? store.records()[i].demographics
                                     : demo_override[i];
      if (filter.matches(demo)) labels.push_back(store.records()[i].label);
    }
    if (labels.empty()) continue;
    GroundTruth gt;
    gt.dataset = DatasetId(key.first);
    gt.doc_id = key.second;
    gt.method = method;
    gt.filter = filter;
    gt.value = aggregate_labels(labels, method);
    gt.support = static_cast<int>(labels.size());
    out.emplace(key, std::move(gt));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Leave-one-out
// ---------------------------------------------------------------------------

namespace {

// Pearson r over integer pairs; nullopt when either side is constant.
std::optional<double> pearson_int(const std::vector<int>& x,
                                  const std::vector<int>& y) {
  const std::size_t n = x.size();
  if (n < 2) return std::nullopt;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

LeaveOneOutResult leave_one_out_agreement(const AnnotationStore& store,
                                          Method method, int min_documents) {
  // Per (annotator, doc): ground truth from the remaining labels. Documents
  // are contiguous runs, so each doc's label multiset is assembled once.
  struct Pair {
    int own;
    int recomputed;
  };
  std::map<AnnotatorKey, std::vector<Pair>> pairs;
  std::vector<int> others;
  for (const auto& [key, span] : store.docs()) {
    if (span.size() < 2) continue;  // no other annotation to recompute from
    for (std::size_t i = span.begin; i < span.end; ++i) {
      others.clear();
      for (std::size_t j = span.begin; j < span.end; ++j)
        if (j != i) others.push_back(store.records()[j].label);
      const auto& r = store.records()[i];
      pairs[{r.dataset.name(), r.annotator_id}].push_back(
          {r.label, aggregate_labels(others, method)});
    }
  }

  LeaveOneOutResult result;
  double sum_r = 0.0;
  for (const auto& [key, pv] : pairs) {
    if (static_cast<int>(pv.size()) < min_documents) {
      result.excluded.push_back({DatasetId(key.first), key.second,
                                 "fewer than " + std::to_string(min_documents) +
                                     " usable documents"});
      continue;
    }
    std::vector<int> own, recomputed;
    own.reserve(pv.size());
    recomputed.reserve(pv.size());
    for (const auto& p : pv) {
      own.push_back(p.own);
      recomputed.push_back(p.recomputed);
    }
    const auto r = pearson_int(own, recomputed);
    if (!r) {
      result.excluded.push_back(
          {DatasetId(key.first), key.second, "zero variance"});
      continue;
    }
    result.per_annotator.push_back(
        {DatasetId(key.first), key.second, *r, static_cast<int>(pv.size())});
    sum_r += *r;
  }
  // Annotators who never co-labeled a document are also reported.
  for (const auto& [key, idx] : store.annotators()) {
    if (!pairs.count(key)) {
      result.excluded.push_back(
          {DatasetId(key.first), key.second, "no co-labeled documents"});
    }
  }
  if (!result.per_annotator.empty())
    result.mean_r = sum_r / static_cast<double>(result.per_annotator.size());
  return result;
}

}  // namespace alignaudit::aggregate
