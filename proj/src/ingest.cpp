#include "alignaudit/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include <json.hpp>

namespace alignaudit::ingest {

namespace {

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

std::vector<std::vector<std::string>> read_csv(
    const std::filesystem::path& path, char delimiter) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> fields;
  std::string field;
  bool in_quotes = false;
  bool row_started = false;
  char c;
  while (in.get(c)) {
    row_started = true;
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field += '"';
        } else {
          in_quotes = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"' && field.empty()) {
      in_quotes = true;
    } else if (c == delimiter) {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      if (!field.empty() || !fields.empty()) {
        fields.push_back(std::move(field));
        field.clear();
        rows.push_back(std::move(fields));
        fields.clear();
      }
      row_started = false;
    } else if (c != '\r') {
      field += c;
    }
  }
  if (row_started && (!field.empty() || !fields.empty())) {
    fields.push_back(std::move(field));
    rows.push_back(std::move(fields));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Schema
// ---------------------------------------------------------------------------

void DatasetSchema::validate() const {
  if (dataset.empty()) throw SchemaError("schema missing dataset id");
  for (const char* field : {"doc_id", "annotator_id", "label"})
    if (!columns.count(field))
      throw SchemaError(std::string("schema column map missing '") + field +
                        "'");
  scale.validate();
  for (const auto& [from, to] : gender_map)
    if (!to.empty() && !parse_gender(to))
      throw SchemaError("gender map targets unknown category '" + to + "'");
  for (const auto& [from, to] : ethnicity_map)
    if (!to.empty() && !parse_ethnicity(to))
      throw SchemaError("ethnicity map targets unknown category '" + to + "'");
}

DatasetSchema DatasetSchema::from_json_file(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open schema " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("schema " + path.string() + " is not valid JSON: " +
                      e.what());
  }
  DatasetSchema schema;
  try {
    schema.dataset = DatasetId(j.at("dataset").get<std::string>());
    if (j.contains("delimiter")) {
      const auto d = j["delimiter"].get<std::string>();
      if (d == "\\t" || d == "tab")
        schema.delimiter = '\t';
      else if (d.size() == 1)
        schema.delimiter = d[0];
      else
        throw SchemaError("delimiter must be a single character or 'tab'");
    }
    for (const auto& [key, value] : j.at("columns").items())
      schema.columns[key] = value.get<std::string>();
    const auto& scale = j.at("label_scale");
    schema.scale.cardinality = scale.at("cardinality").get<int>();
    schema.scale.raw_lo = scale.value("raw_lo", 1);
    schema.scale.descending = scale.value("descending", false);
    for (const auto& v : scale.value("excluded", nlohmann::json::array()))
      schema.scale.excluded.insert(v.get<int>());
    for (const char* axis : {"gender_map", "ethnicity_map"}) {
      if (!j.contains(axis)) continue;
      auto& target = std::string(axis) == "gender_map" ? schema.gender_map
                                                       : schema.ethnicity_map;
      for (const auto& [key, value] : j[axis].items())
        target[lowercase(key)] = value.get<std::string>();
    }
    if (j.contains("row_filters")) {
      const auto& filters = j["row_filters"];
      for (const auto& v :
           filters.value("require_nonempty", nlohmann::json::array()))
        schema.require_nonempty.push_back(v.get<std::string>());
      if (filters.contains("drop_values")) {
        for (const auto& [column, values] : filters["drop_values"].items())
          for (const auto& v : values)
            schema.drop_values[column].push_back(lowercase(v.get<std::string>()));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("schema " + path.string() + ": " + e.what());
  }
  schema.validate();
  return schema;
}

// ---------------------------------------------------------------------------
// Ingest
// ---------------------------------------------------------------------------

std::size_t IngestReport::total_excluded() const {
  std::size_t sum = 0;
  for (const auto& [reason, count] : excluded_by_reason) sum += count;
  return sum;
}

IngestResult ingest(const std::filesystem::path& source,
                    const DatasetSchema& schema) {
  schema.validate();
  const auto rows = read_csv(source, schema.delimiter);
  IngestResult result;
  if (rows.empty()) {
    result.fragment = AnnotationStore::from_records({});
    return result;
  }

  // Resolve the column map against the header.
  std::map<std::string, std::size_t> position;  // canonical field -> index
  const auto& header = rows.front();
  for (const auto& [field, column] : schema.columns) {
    auto it = std::find(header.begin(), header.end(), column);
    if (it == header.end())
      throw SchemaError("source " + source.string() + " lacks column '" +
                        column + "' mapped to " + field);
    position[field] = static_cast<std::size_t>(it - header.begin());
  }

  const auto field_of = [&](const std::vector<std::string>& row,
                            const std::string& name) -> const std::string* {
    auto it = position.find(name);
    if (it == position.end() || it->second >= row.size()) return nullptr;
    return &row[it->second];
  };

  std::vector<AnnotationRecord> records;
  std::set<std::pair<std::string, std::string>> seen_keys;
  auto& report = result.report;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    ++report.rows_read;

    bool dropped = false;
    for (const auto& field : schema.require_nonempty) {
      const auto* value = field_of(row, field);
      if (!value || trim(*value).empty()) {
        ++report.excluded_by_reason["missing " + field];
        dropped = true;
        break;
      }
    }
    if (dropped) continue;
    for (const auto& [field, bad_values] : schema.drop_values) {
      const auto* value = field_of(row, field);
      if (value && std::find(bad_values.begin(), bad_values.end(),
                             lowercase(trim(*value))) != bad_values.end()) {
        ++report.excluded_by_reason["filtered " + field];
        dropped = true;
        break;
      }
    }
    if (dropped) continue;

    const auto* doc = field_of(row, "doc_id");
    const auto* annotator = field_of(row, "annotator_id");
    const auto* label_text = field_of(row, "label");
    if (!doc || !annotator || !label_text) {
      ++report.excluded_by_reason["short row"];
      continue;
    }

    int raw = 0;
    try {
      std::size_t pos = 0;
      const std::string trimmed = trim(*label_text);
      // tolerate float-formatted integers like "3.0"
      const double as_double = std::stod(trimmed, &pos);
      if (pos != trimmed.size() || as_double != std::floor(as_double))
        throw MalformedRecordError("non-integer label");
      raw = static_cast<int>(as_double);
    } catch (const std::exception&) {
      ++report.excluded_by_reason["unparseable label"];
      continue;
    }

    std::optional<int> harmonized;
    try {
      harmonized = harmonize_label(raw, schema.scale);
    } catch (const MalformedRecordError&) {
      ++report.excluded_by_reason["label outside scale"];
      continue;
    }
    if (!harmonized) {
      ++report.excluded_by_reason["excluded label value"];
      continue;
    }

    AnnotationRecord record;
    record.dataset = schema.dataset;
    record.doc_id = trim(*doc);
    record.annotator_id = trim(*annotator);
    if (!seen_keys.emplace(record.doc_id, record.annotator_id).second) {
      ++report.excluded_by_reason["duplicate key"];
      continue;
    }
    record.raw_label = raw;
    record.label = *harmonized;

    const auto map_demographic =
        [&](const char* field, const std::map<std::string, std::string>& map,
            auto parser) -> decltype(parser("")) {
      const auto* raw_value = field_of(row, field);
      if (!raw_value) return std::nullopt;
      const std::string value = lowercase(trim(*raw_value));
      if (value.empty()) return std::nullopt;
      auto it = map.find(value);
      if (it != map.end()) {
        if (it->second.empty()) return std::nullopt;  // mapped to absent
        return parser(it->second);
      }
      // Direct hit on a canonical category even without a map entry.
      if (auto direct = parser(value)) return direct;
      ++report.unmapped_demographics[std::string(field) + "='" + value + "'"];
      return std::nullopt;
    };
    record.demographics.gender =
        map_demographic("gender", schema.gender_map,
                        [](std::string_view s) { return parse_gender(s); });
    record.demographics.ethnicity = map_demographic(
        "ethnicity", schema.ethnicity_map,
        [](std::string_view s) { return parse_ethnicity(s); });

    records.push_back(std::move(record));
    ++report.rows_emitted;
  }

  result.fragment = AnnotationStore::from_records(std::move(records));

  // Percentages over emitted annotations carrying each axis.
  for (Axis axis : {Axis::gender, Axis::ethnicity}) {
    std::map<std::string, std::size_t> counts;
    std::size_t total = 0;
    for (const auto& r : result.fragment.records()) {
      if (!has_axis(r.demographics, axis)) continue;
      ++total;
      const std::string category =
          axis == Axis::gender
              ? std::string(to_string(*r.demographics.gender))
              : std::string(to_string(*r.demographics.ethnicity));
      ++counts[category];
    }
    if (total == 0) continue;
    auto& out = report.demographic_percentages[std::string(to_string(axis))];
    for (const auto& [category, count] : counts)
      out[category] = 100.0 * static_cast<double>(count) /
                      static_cast<double>(total);
  }
  return result;
}

AnnotationStore merge(const std::vector<AnnotationStore>& fragments) {
  std::vector<AnnotationRecord> all;
  std::size_t total = 0;
  for (const auto& f : fragments) total += f.size();
  all.reserve(total);
  for (const auto& f : fragments)
    all.insert(all.end(), f.records().begin(), f.records().end());
  return AnnotationStore::from_records(std::move(all));  // collision -> throw
}

}  // namespace alignaudit::ingest
