#include "alignaudit/store.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <tuple>

namespace alignaudit {

namespace {

std::tuple<const std::string&, const std::string&, const std::string&> key_of(
    const AnnotationRecord& r) {
  return {r.dataset.name(), r.doc_id, r.annotator_id};
}

std::tuple<const std::string&, const std::string&, const std::string&> key_of(
    const ModelLabelRecord& r) {
  return {r.dataset.name(), r.doc_id, r.model_id};
}

int parse_int_field(const std::string& s, std::string_view what) {
  std::size_t pos = 0;
  int value = 0;
  try {
    value = std::stoi(s, &pos);
  } catch (const std::exception&) {
    throw MalformedRecordError("bad integer for " + std::string(what) + ": '" +
                               s + "'");
  }
  if (pos != s.size())
    throw MalformedRecordError("bad integer for " + std::string(what) + ": '" +
                               s + "'");
  return value;
}

std::string demographic_field(const std::optional<Gender>& g) {
  return g ? std::string(to_string(*g)) : std::string();
}

std::string demographic_field(const std::optional<Ethnicity>& e) {
  return e ? std::string(to_string(*e)) : std::string();
}

}  // namespace

void check_field_clean(std::string_view value, std::string_view what) {
  if (value.find_first_of("\t\n\r") != std::string_view::npos)
    throw MalformedRecordError(std::string(what) +
                               " contains a tab or newline");
}

std::vector<std::vector<std::string>> read_delimited(
    const std::filesystem::path& path, char delimiter) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, delimiter)) fields.push_back(field);
    if (!line.empty() && line.back() == delimiter) fields.emplace_back();
    rows.push_back(std::move(fields));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// AnnotationStore
// ---------------------------------------------------------------------------

AnnotationStore AnnotationStore::from_records(
    std::vector<AnnotationRecord> records) {
  std::sort(records.begin(), records.end(),
            [](const AnnotationRecord& a, const AnnotationRecord& b) {
              return key_of(a) < key_of(b);
            });
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (key_of(records[i - 1]) == key_of(records[i]))
      throw DuplicateRecordError(
          "duplicate annotation key (" + records[i].dataset.name() + ", " +
          records[i].doc_id + ", " + records[i].annotator_id + ")");
  }
  AnnotationStore store;
  store.records_ = std::move(records);
  for (std::size_t i = 0; i < store.records_.size(); ++i) {
    const auto& r = store.records_[i];
    DocKey doc{r.dataset.name(), r.doc_id};
    auto [it, inserted] = store.docs_.try_emplace(doc, DocSpan{i, i + 1});
    if (!inserted) it->second.end = i + 1;
    store.annotators_[{r.dataset.name(), r.annotator_id}].push_back(i);
  }
  return store;
}

std::vector<DatasetId> AnnotationStore::datasets() const {
  std::vector<DatasetId> out;
  for (const auto& r : records_) {
    if (out.empty() || out.back() != r.dataset) out.push_back(r.dataset);
  }
  return out;
}

AnnotationStore AnnotationStore::subset(const DatasetId& dataset) const {
  std::vector<AnnotationRecord> filtered;
  for (const auto& r : records_)
    if (r.dataset == dataset) filtered.push_back(r);
  return from_records(std::move(filtered));
}

AnnotationStore AnnotationStore::read_tsv(const std::filesystem::path& path) {
  const auto rows = read_delimited(path, '\t');
  if (rows.empty()) throw IoError("store file has no header: " + path.string());
  const std::vector<std::string> expected = {
      "dataset", "doc_id", "annotator_id", "raw_label",
      "label",   "gender", "ethnicity"};
  if (rows.front() != expected)
    throw IoError("unexpected store header in " + path.string());
  std::vector<AnnotationRecord> records;
  records.reserve(rows.size() - 1);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& f = rows[i];
    if (f.size() != expected.size())
      throw MalformedRecordError("row " + std::to_string(i + 1) + " in " +
                                 path.string() + " has " +
                                 std::to_string(f.size()) + " fields");
    AnnotationRecord r;
    r.dataset = DatasetId(f[0]);
    r.doc_id = f[1];
    r.annotator_id = f[2];
    r.raw_label = parse_int_field(f[3], "raw_label");
    r.label = parse_int_field(f[4], "label");
    if (r.label < 1)
      throw MalformedRecordError("harmonized label must be >= 1, got " +
                                 f[4] + " in row " + std::to_string(i + 1));
    r.demographics.gender = parse_gender(f[5]);
    r.demographics.ethnicity = parse_ethnicity(f[6]);
    records.push_back(std::move(r));
  }
  return from_records(std::move(records));
}

void AnnotationStore::write_tsv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "dataset\tdoc_id\tannotator_id\traw_label\tlabel\tgender\tethnicity\n";
  for (const auto& r : records_) {
    check_field_clean(r.doc_id, "doc_id");
    check_field_clean(r.annotator_id, "annotator_id");
    out << r.dataset.name() << '\t' << r.doc_id << '\t' << r.annotator_id
        << '\t' << r.raw_label << '\t' << r.label << '\t'
        << demographic_field(r.demographics.gender) << '\t'
        << demographic_field(r.demographics.ethnicity) << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

// ---------------------------------------------------------------------------
// ModelLabelStore
// ---------------------------------------------------------------------------

ModelLabelStore ModelLabelStore::from_records(
    std::vector<ModelLabelRecord> records) {
  std::sort(records.begin(), records.end(),
            [](const ModelLabelRecord& a, const ModelLabelRecord& b) {
              return key_of(a) < key_of(b);
            });
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (key_of(records[i - 1]) == key_of(records[i]))
      throw DuplicateRecordError("duplicate model label key (" +
                                 records[i].dataset.name() + ", " +
                                 records[i].doc_id + ", " +
                                 records[i].model_id + ")");
  }
  ModelLabelStore store;
  store.records_ = std::move(records);
  for (const auto& r : store.records_)
    store.index_[{r.dataset.name(), r.doc_id, r.model_id}] = r.label;
  return store;
}

std::vector<std::string> ModelLabelStore::model_ids() const {
  std::vector<std::string> out;
  for (const auto& r : records_)
    if (std::find(out.begin(), out.end(), r.model_id) == out.end())
      out.push_back(r.model_id);
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<int> ModelLabelStore::label_for(const DatasetId& dataset,
                                              const std::string& doc,
                                              const std::string& model) const {
  auto it = index_.find({dataset.name(), doc, model});
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

ModelLabelStore ModelLabelStore::read_tsv(const std::filesystem::path& path) {
  const auto rows = read_delimited(path, '\t');
  if (rows.empty()) throw IoError("model label file has no header: " + path.string());
  const std::vector<std::string> expected = {"dataset", "doc_id", "model",
                                             "label"};
  if (rows.front() != expected)
    throw IoError("unexpected model label header in " + path.string());
  std::vector<ModelLabelRecord> records;
  records.reserve(rows.size() - 1);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& f = rows[i];
    if (f.size() != expected.size())
      throw MalformedRecordError("row " + std::to_string(i + 1) + " in " +
                                 path.string() + " has " +
                                 std::to_string(f.size()) + " fields");
    ModelLabelRecord r;
    r.dataset = DatasetId(f[0]);
    r.doc_id = f[1];
    r.model_id = f[2];
    r.label = parse_int_field(f[3], "label");
    if (r.label < 1)
      throw MalformedRecordError("harmonized label must be >= 1, got " +
                                 f[3] + " in row " + std::to_string(i + 1));
    records.push_back(std::move(r));
  }
  return from_records(std::move(records));
}

void ModelLabelStore::write_tsv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "dataset\tdoc_id\tmodel\tlabel\n";
  for (const auto& r : records_) {
    check_field_clean(r.doc_id, "doc_id");
    check_field_clean(r.model_id, "model");
    out << r.dataset.name() << '\t' << r.doc_id << '\t' << r.model_id << '\t'
        << r.label << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace alignaudit
