#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "alignaudit/core.hpp"

namespace alignaudit {

// Annotator identity is scoped to a dataset; no cross-dataset resolution.
using AnnotatorKey = std::pair<std::string, std::string>;  // (dataset, annotator)
using DocKey = std::pair<std::string, std::string>;        // (dataset, doc)

// Immutable collection of harmonized annotations, sorted by
// (dataset, doc_id, annotator_id) so each document is a contiguous run.
class AnnotationStore {
 public:
  struct DocSpan {
    std::size_t begin = 0;  // index range into records()
    std::size_t end = 0;
    std::size_t size() const { return end - begin; }
  };

  AnnotationStore() = default;

  // Sorts and indexes; throws DuplicateRecordError on a repeated key.
  static AnnotationStore from_records(std::vector<AnnotationRecord> records);

  const std::vector<AnnotationRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  const std::map<DocKey, DocSpan>& docs() const { return docs_; }
  const std::map<AnnotatorKey, std::vector<std::size_t>>& annotators() const {
    return annotators_;
  }
  std::vector<DatasetId> datasets() const;

  AnnotationStore subset(const DatasetId& dataset) const;

  // Flat delimited store: UTF-8 TSV, header row required, columns
  // (dataset, doc_id, annotator_id, raw_label, label, gender, ethnicity).
  static AnnotationStore read_tsv(const std::filesystem::path& path);
  void write_tsv(const std::filesystem::path& path) const;

 private:
  std::vector<AnnotationRecord> records_;
  std::map<DocKey, DocSpan> docs_;
  std::map<AnnotatorKey, std::vector<std::size_t>> annotators_;
};

// Model labels on the same harmonized scales, sorted by (dataset, doc, model).
class ModelLabelStore {
 public:
  ModelLabelStore() = default;

  static ModelLabelStore from_records(std::vector<ModelLabelRecord> records);

  const std::vector<ModelLabelRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  std::vector<std::string> model_ids() const;
  // nullopt when the (dataset, doc) pair was not labeled by the model.
  std::optional<int> label_for(const DatasetId& dataset, const std::string& doc,
                               const std::string& model) const;

  // Sibling TSV: columns (dataset, doc_id, model, label).
  static ModelLabelStore read_tsv(const std::filesystem::path& path);
  void write_tsv(const std::filesystem::path& path) const;

 private:
  std::vector<ModelLabelRecord> records_;
  std::map<std::tuple<std::string, std::string, std::string>, int> index_;
};

// Shared TSV plumbing.
std::vector<std::vector<std::string>> read_delimited(
    const std::filesystem::path& path, char delimiter);
void check_field_clean(std::string_view value, std::string_view what);

}  // namespace alignaudit
