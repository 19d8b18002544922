#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "alignaudit/core.hpp"
#include "alignaudit/store.hpp"

namespace alignaudit::aggregate {

enum class Method { rounded_average, majority };

std::string_view to_string(Method m);
Method parse_method(std::string_view s);  // accepts "avg" and "majority"

// Arithmetic mean rounded half-away-from-zero to the nearest category.
// Exact at .5 boundaries (integer arithmetic, no float ties).
int rounded_average(std::span<const int> labels);

// Modal label; ties broken toward the more offensive (larger) label.
int majority(std::span<const int> labels);

int aggregate_labels(std::span<const int> labels, Method m);

// Conjunctive demographic predicate: every set field must be present on the
// annotator and equal. Annotators missing a filtered field never match.
struct GroupFilter {
  std::optional<Gender> gender;
  std::optional<Ethnicity> ethnicity;

  bool trivial() const { return !gender && !ethnicity; }
  bool matches(const Demographics& d) const;

  static GroupFilter for_group(Axis axis, std::string_view category);
};

struct GroundTruth {
  DatasetId dataset;
  std::string doc_id;
  Method method = Method::rounded_average;
  GroupFilter filter;
  int value = 0;    // harmonized label
  int support = 0;  // contributing annotations, >= 1
};

// Aggregates one document over annotations matching the filter; throws
// NoSupportError when nothing matches.
GroundTruth group_ground_truth(const AnnotationStore& store,
                               const DatasetId& dataset,
                               const std::string& doc_id, Method method,
                               const GroupFilter& filter = {});

// Bulk pass over every document. Documents with no matching annotation are
// omitted. `demo_override`, when non-empty, supplies per-record demographics
// aligned with store.records() (used by permutation tests).
std::map<DocKey, GroundTruth> ground_truths(
    const AnnotationStore& store, Method method, const GroupFilter& filter = {},
    std::span<const Demographics> demo_override = {});

// ---------------------------------------------------------------------------
// Leave-one-out human agreement
// ---------------------------------------------------------------------------

struct AnnotatorAgreement {
  DatasetId dataset;
  std::string annotator_id;
  double r = 0.0;
  int n_pairs = 0;
};

struct LeaveOneOutResult {
  std::vector<AnnotatorAgreement> per_annotator;
  struct Excluded {
    DatasetId dataset;
    std::string annotator_id;
    std::string reason;
  };
  std::vector<Excluded> excluded;
  double mean_r = 0.0;  // unweighted over included annotators
};

// For each annotator, correlates their labels with ground truth recomputed
// from the remaining labels, over documents retaining at least one other
// annotation. Annotators with fewer than min_documents usable pairs or zero
// variance on either side are excluded and reported.
LeaveOneOutResult leave_one_out_agreement(const AnnotationStore& store,
                                          Method method,
                                          int min_documents = 5);

}  // namespace alignaudit::aggregate
