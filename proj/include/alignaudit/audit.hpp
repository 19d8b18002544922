#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "alignaudit/aggregate.hpp"
#include "alignaudit/confounders.hpp"
#include "alignaudit/core.hpp"
#include "alignaudit/regression.hpp"
#include "alignaudit/stats.hpp"
#include "alignaudit/store.hpp"

namespace alignaudit::audit {

struct AuditOptions {
  aggregate::Method method = aggregate::Method::rounded_average;
  int bootstrap_samples = 1000;     // 0 disables bootstrap CIs
  int permutation_iterations = 1000;  // 0 disables permutation tests
  RngSpec rng;
  int threads = 1;
  int min_loo_documents = 5;
};

// ---------------------------------------------------------------------------
// RQ0: model vs aggregate human labels, with the leave-one-out human baseline
// ---------------------------------------------------------------------------

struct Rq0Row {
  std::string dataset;
  std::string model;
  aggregate::Method method = aggregate::Method::rounded_average;
  stats::CorrelationResult corr;
  double loo_mean = 0.0;
  std::optional<std::pair<double, double>> loo_ci;
  int loo_annotators = 0;
};

std::vector<Rq0Row> run_rq0(const AnnotationStore& store,
                            const ModelLabelStore& model_labels,
                            const AuditOptions& options,
                            std::vector<std::string>* warnings = nullptr);

// ---------------------------------------------------------------------------
// RQ1: per-demographic correlations and dependent correlation differences
// ---------------------------------------------------------------------------

struct Rq1CorrRow {
  std::string dataset;
  std::string model;
  aggregate::Method method = aggregate::Method::rounded_average;
  Axis axis = Axis::gender;
  std::string group;
  stats::CorrelationResult corr;
  std::optional<double> permutation_p;
  std::optional<double> permutation_null_mean;
};

struct DeltaRow {
  std::string dataset;
  std::string model;
  aggregate::Method method = aggregate::Method::rounded_average;
  Axis axis = Axis::gender;
  std::string group1;
  std::string group2;
  double r1 = 0.0;     // r(model, group1) on the shared documents
  double r2 = 0.0;     // r(model, group2) on the shared documents
  double delta = 0.0;  // r1 - r2
  double z = 0.0;
  double p_raw = 1.0;
  double p_holm = 1.0;
  std::optional<std::pair<double, double>> ci;
  int n = 0;  // documents with both group ground truths defined
  int stars = 0;  // per the delta-table legend: 0.1 / 0.05 / 0.001
};

int delta_stars(double p);

struct Rq1Result {
  std::vector<Rq1CorrRow> correlations;
  std::vector<DeltaRow> deltas;
  std::vector<std::string> skipped;  // unavailable groups/pairs, with reasons
};

Rq1Result run_rq1(const AnnotationStore& store,
                  const ModelLabelStore& model_labels,
                  const std::vector<Axis>& axes, const AuditOptions& options);

// ---------------------------------------------------------------------------
// RQ2: alignment regressions (demographics-only, then confounder-augmented)
// ---------------------------------------------------------------------------

struct Rq2Result {
  std::string model_id;
  regression::RegressionSummary model1;
  regression::RegressionSummary model2;
  confounders::RowBuildReport build_report;
};

std::vector<Rq2Result> run_rq2(const AnnotationStore& store,
                               const ModelLabelStore& model_labels,
                               const AuditOptions& options);

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

struct AuditReport {
  std::vector<Rq0Row> rq0;
  Rq1Result rq1;
  std::vector<Rq2Result> rq2;

  std::string to_json_string() const;
  static AuditReport from_json_string(const std::string& text);
};

struct RunManifest {
  std::string command;
  std::string tool_version;
  std::uint64_t master_seed = 0;
  std::map<std::string, std::string> input_hashes;  // name -> fnv1a64 hex
  std::string timestamp;  // the only field allowed to differ across reruns

  std::string to_json_string() const;
};

std::string hash_file_hex(const std::filesystem::path& path);

RunManifest make_manifest(const std::string& command, std::uint64_t seed,
                          const std::vector<std::filesystem::path>& inputs);

// Writes one delimited file per result table plus report.json and
// manifest.json; byte-identical across reruns with the same inputs and seed.
void write_report(const AuditReport& report, const RunManifest& manifest,
                  const std::filesystem::path& out_dir);

}  // namespace alignaudit::audit
