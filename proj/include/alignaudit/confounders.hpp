#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "alignaudit/core.hpp"
#include "alignaudit/store.hpp"

namespace alignaudit::confounders {

// 1 iff the two labels coincide; both must lie on the same 1..K scale.
int alignment(int human_label, int model_label, int cardinality);

// Negative KL divergence from uniform over K categories, natural log:
// H(empirical) - ln K, in [-ln K, 0]; 0 at a uniform label distribution.
double difficulty(std::span<const int> doc_labels, int cardinality);

// Mid-rank of the annotator's label among the document's m labels, ascending
// in offensiveness, normalized to [0,1] as (rank-1)/(m-1); m = 1 -> 0.5.
double sensitivity(int annotator_label, std::span<const int> doc_labels);

// Negative absolute deviation from the same-group mean label on the document
// (annotator included); <= 0, and 0 for a singleton group.
double agreement(int annotator_label, std::span<const int> group_labels);

// One regression observation: one human annotation joined with one model's
// label on the same document. Demographic and dataset fields are raw 0/1
// indicators here; centering happens in standardize().
struct ConfounderRow {
  DatasetId dataset;
  std::string doc_id;
  std::string annotator_id;
  int alignment = 0;
  double woman = 0.0;
  double asian = 0.0;
  double black = 0.0;
  double hispanic = 0.0;
  double difficulty = 0.0;
  double sensitivity = 0.0;
  double agreement_ethnicity = 0.0;
  double agreement_gender = 0.0;
  double label = 0.0;  // the annotator's own harmonized label
};

struct RowBuildReport {
  std::size_t annotations_seen = 0;
  std::size_t rows_built = 0;
  std::size_t dropped_no_model_label = 0;
  std::size_t dropped_missing_gender = 0;
  std::size_t dropped_missing_ethnicity = 0;
};

// Complete-case build: annotations lacking gender or ethnicity, or whose
// document the model left unlabeled, are dropped and counted. Per-dataset
// cardinality is inferred as the largest harmonized label observed; the
// difficulty offset this may shift is constant within a dataset and washes
// out in the within-dataset standardization.
std::vector<ConfounderRow> build_rows(const AnnotationStore& store,
                                      const ModelLabelStore& model_labels,
                                      const std::string& model_id,
                                      RowBuildReport* report = nullptr);

enum class ColumnKind {
  dataset_indicator,  // per-dataset intercept device, left untouched
  binary,             // centered within dataset
  continuous,         // centered and divided by two sample SDs within dataset
};

struct DesignMatrix {
  std::vector<std::string> columns;
  std::vector<ColumnKind> kinds;
  std::vector<std::string> row_dataset;  // grouping key per row
  std::vector<double> response;          // alignment indicator
  std::vector<double> values;            // row-major, rows x columns

  std::size_t rows() const { return row_dataset.size(); }
  std::size_t cols() const { return columns.size(); }
  double at(std::size_t i, std::size_t j) const {
    return values[i * cols() + j];
  }
  double& at(std::size_t i, std::size_t j) { return values[i * cols() + j]; }
};

// Builds the regression column layout: dataset indicators (reference level
// = lexicographically first dataset, awa in the five-corpus setting),
// gender=woman, ethnicity={asian, black, hispanic} (white reference), then
// the confounders.
DesignMatrix to_design(std::span<const ConfounderRow> rows);

struct ColumnScaling {
  std::string dataset;
  std::string column;
  double mean = 0.0;
  double scale = 1.0;  // divisor applied after centering (1 for binary)
};

struct ScalingReport {
  std::vector<ColumnScaling> entries;
};

// In-place per-dataset standardization: binary columns centered, continuous
// columns centered and divided by 2 * sample SD (n-1 denominator). Dataset
// indicator columns pass through. A continuous column constant within a
// dataset raises DegenerateColumnError naming both.
ScalingReport standardize(DesignMatrix& design);

// Delimited export with the response first, one column per regressor.
void write_design_tsv(const DesignMatrix& design,
                      const std::filesystem::path& path);

}  // namespace alignaudit::confounders
