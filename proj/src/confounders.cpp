#include "alignaudit/confounders.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace alignaudit::confounders {

int alignment(int human_label, int model_label, int cardinality) {
  if (human_label < 1 || human_label > cardinality || model_label < 1 ||
      model_label > cardinality)
    throw PreconditionError(
        "alignment: labels must share the harmonized 1..K scale");
  return human_label == model_label ? 1 : 0;
}

double difficulty(std::span<const int> doc_labels, int cardinality) {
  if (doc_labels.empty())
    throw PreconditionError("difficulty: need >= 1 label");
  if (cardinality < 2)
    throw PreconditionError("difficulty: cardinality must be >= 2");
  std::vector<int> counts(static_cast<std::size_t>(cardinality), 0);
  for (int label : doc_labels) {
    if (label < 1 || label > cardinality)
      throw PreconditionError("difficulty: label outside 1..K");
    ++counts[static_cast<std::size_t>(label - 1)];
  }
  const double n = static_cast<double>(doc_labels.size());
  double entropy = 0.0;  // 0 ln 0 := 0
  for (int c : counts) {
    if (c == 0) continue;
    const double p = c / n;
    entropy -= p * std::log(p);
  }
  return entropy - std::log(static_cast<double>(cardinality));
}

double sensitivity(int annotator_label, std::span<const int> doc_labels) {
  const std::size_t m = doc_labels.size();
  if (m == 0) throw PreconditionError("sensitivity: need >= 1 label");
  if (m == 1) return 0.5;
  std::size_t less = 0, equal = 0;
  for (int label : doc_labels) {
    if (label < annotator_label) ++less;
    if (label == annotator_label) ++equal;
  }
  if (equal == 0)
    throw PreconditionError(
        "sensitivity: annotator's label not among the document's labels");
  const double mid_rank =
      static_cast<double>(less) + (static_cast<double>(equal) + 1.0) / 2.0;
  return (mid_rank - 1.0) / (static_cast<double>(m) - 1.0);
}

double agreement(int annotator_label, std::span<const int> group_labels) {
  if (group_labels.empty())
    throw PreconditionError("agreement: group must include the annotator");
  double sum = 0.0;
  for (int label : group_labels) sum += label;
  const double mean = sum / static_cast<double>(group_labels.size());
  return -std::abs(static_cast<double>(annotator_label) - mean);
}

// ---------------------------------------------------------------------------
// Row building
// ---------------------------------------------------------------------------

std::vector<ConfounderRow> build_rows(const AnnotationStore& store,
                                      const ModelLabelStore& model_labels,
                                      const std::string& model_id,
                                      RowBuildReport* report) {
  RowBuildReport local;
  RowBuildReport& rep = report ? *report : local;

  std::map<std::string, int> cardinality;
  for (const auto& r : store.records()) {
    auto& k = cardinality[r.dataset.name()];
    k = std::max(k, r.label);
  }
  for (const auto& r : model_labels.records()) {
    if (r.model_id != model_id) continue;
    auto it = cardinality.find(r.dataset.name());
    if (it != cardinality.end()) it->second = std::max(it->second, r.label);
  }

  std::vector<ConfounderRow> rows;
  std::vector<int> doc_labels, group_labels;
  for (const auto& [doc_key, span] : store.docs()) {
    const DatasetId dataset(doc_key.first);
    const auto model_label =
        model_labels.label_for(dataset, doc_key.second, model_id);
    const int k = cardinality.at(doc_key.first);

    doc_labels.clear();
    for (std::size_t i = span.begin; i < span.end; ++i)
      doc_labels.push_back(store.records()[i].label);
    const double doc_difficulty = difficulty(doc_labels, k);

    for (std::size_t i = span.begin; i < span.end; ++i) {
      const auto& r = store.records()[i];
      ++rep.annotations_seen;
      if (!model_label) {
        ++rep.dropped_no_model_label;
        continue;
      }
      if (!r.demographics.gender) {
        ++rep.dropped_missing_gender;
        continue;
      }
      if (!r.demographics.ethnicity) {
        ++rep.dropped_missing_ethnicity;
        continue;
      }

      ConfounderRow row;
      row.dataset = r.dataset;
      row.doc_id = r.doc_id;
      row.annotator_id = r.annotator_id;
      row.alignment = alignment(r.label, *model_label, k);
      row.woman = r.demographics.gender == Gender::woman ? 1.0 : 0.0;
      row.asian = r.demographics.ethnicity == Ethnicity::asian ? 1.0 : 0.0;
      row.black = r.demographics.ethnicity == Ethnicity::black ? 1.0 : 0.0;
      row.hispanic =
          r.demographics.ethnicity == Ethnicity::hispanic ? 1.0 : 0.0;
      row.difficulty = doc_difficulty;
      row.sensitivity = sensitivity(r.label, doc_labels);

      for (Axis axis : {Axis::ethnicity, Axis::gender}) {
        group_labels.clear();
        for (std::size_t j = span.begin; j < span.end; ++j) {
          const auto& other = store.records()[j].demographics;
          if (!has_axis(other, axis)) continue;
          const bool same = axis == Axis::gender
                                ? other.gender == r.demographics.gender
                                : other.ethnicity == r.demographics.ethnicity;
          if (same) group_labels.push_back(store.records()[j].label);
        }
        const double value = agreement(r.label, group_labels);
        if (axis == Axis::ethnicity)
          row.agreement_ethnicity = value;
        else
          row.agreement_gender = value;
      }
      row.label = static_cast<double>(r.label);
      rows.push_back(std::move(row));
      ++rep.rows_built;
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Design matrix
// ---------------------------------------------------------------------------

DesignMatrix to_design(std::span<const ConfounderRow> rows) {
  if (rows.empty()) throw PreconditionError("to_design: no rows");

  // Dataset indicator columns for every dataset after the reference
  // (lexicographically first; awa in the five-corpus setting).
  std::vector<std::string> datasets;
  for (const auto& row : rows) {
    if (std::find(datasets.begin(), datasets.end(), row.dataset.name()) ==
        datasets.end())
      datasets.push_back(row.dataset.name());
  }
  std::sort(datasets.begin(), datasets.end());

  DesignMatrix design;
  std::vector<std::string> indicator_datasets(datasets.begin() + 1,
                                              datasets.end());
  // Conventional reporting order when all five source corpora are present.
  const std::vector<std::string> paper_order = {"popq", "nlpos", "sbic",
                                                "mhsc"};
  if (datasets.size() == 5 && datasets.front() == "awa" &&
      std::is_permutation(indicator_datasets.begin(), indicator_datasets.end(),
                          paper_order.begin(), paper_order.end()))
    indicator_datasets = paper_order;

  for (const auto& name : indicator_datasets) {
    design.columns.push_back("dataset=" + name);
    design.kinds.push_back(ColumnKind::dataset_indicator);
  }
  const auto add = [&](const std::string& name, ColumnKind kind) {
    design.columns.push_back(name);
    design.kinds.push_back(kind);
  };
  add("gender=woman", ColumnKind::binary);
  add("ethnicity=asian", ColumnKind::binary);
  add("ethnicity=black", ColumnKind::binary);
  add("ethnicity=hispanic", ColumnKind::binary);
  add("difficulty", ColumnKind::continuous);
  add("sensitivity", ColumnKind::continuous);
  add("agreement_ethnicity", ColumnKind::continuous);
  add("agreement_gender", ColumnKind::continuous);
  add("label", ColumnKind::continuous);

  const std::size_t p = design.columns.size();
  design.values.assign(rows.size() * p, 0.0);
  design.response.reserve(rows.size());
  design.row_dataset.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    design.row_dataset.push_back(row.dataset.name());
    design.response.push_back(static_cast<double>(row.alignment));
    std::size_t j = 0;
    for (const auto& name : indicator_datasets)
      design.values[i * p + j++] = row.dataset.name() == name ? 1.0 : 0.0;
    design.values[i * p + j++] = row.woman;
    design.values[i * p + j++] = row.asian;
    design.values[i * p + j++] = row.black;
    design.values[i * p + j++] = row.hispanic;
    design.values[i * p + j++] = row.difficulty;
    design.values[i * p + j++] = row.sensitivity;
    design.values[i * p + j++] = row.agreement_ethnicity;
    design.values[i * p + j++] = row.agreement_gender;
    design.values[i * p + j++] = row.label;
  }
  return design;
}

ScalingReport standardize(DesignMatrix& design) {
  const std::size_t p = design.cols();

  // Rows grouped by dataset.
  std::map<std::string, std::vector<std::size_t>> by_dataset;
  for (std::size_t i = 0; i < design.rows(); ++i)
    by_dataset[design.row_dataset[i]].push_back(i);

  ScalingReport report;
  for (const auto& [dataset, row_idx] : by_dataset) {
    for (std::size_t j = 0; j < p; ++j) {
      if (design.kinds[j] == ColumnKind::dataset_indicator) continue;
      double mean = 0.0;
      for (std::size_t i : row_idx) mean += design.at(i, j);
      mean /= static_cast<double>(row_idx.size());

      double scale = 1.0;
      if (design.kinds[j] == ColumnKind::continuous) {
        double ss = 0.0;
        for (std::size_t i : row_idx) {
          const double d = design.at(i, j) - mean;
          ss += d * d;
        }
        const double sd =
            row_idx.size() > 1
                ? std::sqrt(ss / static_cast<double>(row_idx.size() - 1))
                : 0.0;
        if (sd == 0.0)
          throw DegenerateColumnError("column '" + design.columns[j] +
                                      "' is constant within dataset '" +
                                      dataset + "'");
        scale = 2.0 * sd;
      }
      for (std::size_t i : row_idx)
        design.at(i, j) = (design.at(i, j) - mean) / scale;
      report.entries.push_back({dataset, design.columns[j], mean, scale});
    }
  }
  return report;
}

void write_design_tsv(const DesignMatrix& design,
                      const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "alignment";
  for (const auto& name : design.columns) out << '\t' << name;
  out << '\n';
  char buffer[64];
  for (std::size_t i = 0; i < design.rows(); ++i) {
    std::snprintf(buffer, sizeof buffer, "%g", design.response[i]);
    out << buffer;
    for (std::size_t j = 0; j < design.cols(); ++j) {
      std::snprintf(buffer, sizeof buffer, "%.10g", design.at(i, j));
      out << '\t' << buffer;
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace alignaudit::confounders
