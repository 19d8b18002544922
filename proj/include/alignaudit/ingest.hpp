#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "alignaudit/core.hpp"
#include "alignaudit/store.hpp"

namespace alignaudit::ingest {

// Per-dataset harmonization contract, loaded from a JSON config file so new
// datasets need no code changes.
struct DatasetSchema {
  DatasetId dataset;
  char delimiter = ',';
  // canonical field -> source column; doc_id, annotator_id, label required
  std::map<std::string, std::string> columns;
  LabelScale scale;
  // source string (lowercased) -> canonical category; "" maps to absent
  std::map<std::string, std::string> gender_map;
  std::map<std::string, std::string> ethnicity_map;
  std::vector<std::string> require_nonempty;          // row filters
  std::map<std::string, std::vector<std::string>> drop_values;

  void validate() const;  // throws SchemaError / ConfigError

  static DatasetSchema from_json_file(const std::filesystem::path& path);
};

struct IngestReport {
  std::size_t rows_read = 0;
  std::size_t rows_emitted = 0;
  std::map<std::string, std::size_t> excluded_by_reason;
  // axis -> category -> percentage over emitted annotations carrying the axis
  std::map<std::string, std::map<std::string, double>> demographic_percentages;
  // source demographic values outside the closed category sets
  std::map<std::string, std::size_t> unmapped_demographics;

  std::size_t total_excluded() const;
};

struct IngestResult {
  AnnotationStore fragment;
  IngestReport report;
};

// Reads one dataset's native delimited file and emits a harmonized store
// fragment. Unparseable rows are counted and skipped, never silently
// dropped; a missing mapped column raises SchemaError.
IngestResult ingest(const std::filesystem::path& source,
                    const DatasetSchema& schema);

// Unifies pairwise-disjoint fragments; a key collision raises
// DuplicateRecordError naming the key.
AnnotationStore merge(const std::vector<AnnotationStore>& fragments);

// RFC-4180 delimited reader (quoted fields, embedded delimiters/newlines).
std::vector<std::vector<std::string>> read_csv(
    const std::filesystem::path& path, char delimiter);

}  // namespace alignaudit::ingest
