#include "alignaudit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

namespace alignaudit::synth {

namespace {

constexpr double kMarginalTolerance = 1e-9;

void check_marginals(const std::map<std::string, double>& marginals,
                     const char* axis) {
  double sum = 0.0;
  for (const auto& [category, p] : marginals) {
    if (p < 0.0)
      throw ConfigError(std::string("negative marginal for ") + axis);
    sum += p;
  }
  if (std::abs(sum - 1.0) > kMarginalTolerance)
    throw ConfigError(std::string(axis) + " marginals must sum to 1, got " +
                      std::to_string(sum));
}

// Categorical draw; keys iterate in map order, so results are deterministic.
std::string draw_category(const std::map<std::string, double>& marginals,
                          RngStream& stream) {
  const double u = stream.next_double();
  double acc = 0.0;
  for (const auto& [category, p] : marginals) {
    acc += p;
    if (u < acc) return category;
  }
  return marginals.rbegin()->first;
}

int clamp_round(double value, int cardinality) {
  const long rounded = std::lround(value);
  return static_cast<int>(
      std::clamp<long>(rounded, 1, static_cast<long>(cardinality)));
}

std::string group_key(Axis axis, std::string_view category) {
  return std::string(to_string(axis)) + "=" + std::string(category);
}

std::string padded_id(const char* prefix, int index, int width) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%s%0*d", prefix, width, index);
  return buffer;
}

}  // namespace

void SynthConfig::validate() const {
  if (n_documents < 1 || n_annotators < 1 || labels_per_document < 1)
    throw ConfigError("synth config counts must be positive");
  if (labels_per_document > n_annotators)
    throw ConfigError("labels_per_document cannot exceed n_annotators");
  if (cardinality < 2) throw ConfigError("synth cardinality must be >= 2");
  for (double spread : {doc_spread, annotator_bias_spread, model_noise_sd,
                        label_noise_sd}) {
    if (spread < 0.0) throw ConfigError("synth spreads must be >= 0");
  }
  check_marginals(gender_marginals, "gender");
  check_marginals(ethnicity_marginals, "ethnicity");
  for (const auto& [key, value] : delta) {
    if (key.find('=') == std::string::npos)
      throw ConfigError("delta key must look like axis=category: " + key);
  }
}

SynthConfig SynthConfig::from_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open synth config " + path.string());
  nlohmann::json j;
  SynthConfig c;
  try {
    in >> j;
    c.dataset = j.value("dataset", c.dataset);
    c.n_documents = j.value("n_documents", c.n_documents);
    c.n_annotators = j.value("n_annotators", c.n_annotators);
    c.labels_per_document = j.value("labels_per_document", c.labels_per_document);
    c.cardinality = j.value("cardinality", c.cardinality);
    c.doc_mean = j.value("doc_mean", c.doc_mean);
    c.doc_spread = j.value("doc_spread", c.doc_spread);
    c.annotator_bias_spread =
        j.value("annotator_bias_spread", c.annotator_bias_spread);
    c.model_bias = j.value("model_bias", c.model_bias);
    c.model_shared_weight = j.value("model_shared_weight", c.model_shared_weight);
    c.model_noise_sd = j.value("model_noise_sd", c.model_noise_sd);
    c.label_noise_sd = j.value("label_noise_sd", c.label_noise_sd);
    c.model_id = j.value("model_id", c.model_id);
    const auto read_map = [&](const char* name,
                              std::map<std::string, double>& target) {
      if (!j.contains(name)) return;
      target.clear();
      for (const auto& [key, value] : j[name].items())
        target[key] = value.get<double>();
    };
    read_map("group_bias", c.group_bias);
    read_map("delta", c.delta);
    read_map("gender_marginals", c.gender_marginals);
    read_map("ethnicity_marginals", c.ethnicity_marginals);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("synth config " + path.string() + ": " + e.what());
  }
  c.validate();
  return c;
}

void SynthConfig::write_json_file(const std::filesystem::path& path) const {
  nlohmann::json j = {
      {"dataset", dataset},
      {"n_documents", n_documents},
      {"n_annotators", n_annotators},
      {"labels_per_document", labels_per_document},
      {"cardinality", cardinality},
      {"doc_mean", doc_mean},
      {"doc_spread", doc_spread},
      {"annotator_bias_spread", annotator_bias_spread},
      {"group_bias", group_bias},
      {"delta", delta},
      {"model_bias", model_bias},
      {"model_shared_weight", model_shared_weight},
      {"model_noise_sd", model_noise_sd},
      {"label_noise_sd", label_noise_sd},
      {"gender_marginals", gender_marginals},
      {"ethnicity_marginals", ethnicity_marginals},
      {"model_id", model_id},
  };
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

SynthOutput generate(const SynthConfig& config, const RngSpec& rng) {
  config.validate();
  const DatasetId dataset(config.dataset);

  struct Annotator {
    std::string id;
    Demographics demographics;
    double bias = 0.0;
    double shared_weight = 0.0;  // sum of the groups' deltas
  };

  const auto lookup = [](const std::map<std::string, double>& m,
                         const std::string& key) {
    auto it = m.find(key);
    return it == m.end() ? 0.0 : it->second;
  };

  const int id_width =
      static_cast<int>(std::to_string(
          std::max(config.n_annotators, config.n_documents)).size());
  std::vector<Annotator> annotators(config.n_annotators);
  {
    RngStream stream(rng, "synth/annotators", 0);
    for (int i = 0; i < config.n_annotators; ++i) {
      Annotator& a = annotators[i];
      a.id = padded_id("a", i, id_width);
      const std::string gender = draw_category(config.gender_marginals, stream);
      const std::string ethnicity =
          draw_category(config.ethnicity_marginals, stream);
      a.demographics.gender = parse_gender(gender);
      a.demographics.ethnicity = parse_ethnicity(ethnicity);
      a.bias = config.annotator_bias_spread * stream.next_normal();
      if (a.demographics.gender) {
        const auto key = group_key(Axis::gender, gender);
        a.bias += lookup(config.group_bias, key);
        a.shared_weight += lookup(config.delta, key);
      }
      if (a.demographics.ethnicity) {
        const auto key = group_key(Axis::ethnicity, ethnicity);
        a.bias += lookup(config.group_bias, key);
        a.shared_weight += lookup(config.delta, key);
      }
    }
  }

  std::vector<AnnotationRecord> annotations;
  annotations.reserve(static_cast<std::size_t>(config.n_documents) *
                      config.labels_per_document);
  std::vector<ModelLabelRecord> model_labels;
  model_labels.reserve(config.n_documents);

  std::vector<std::size_t> pool(annotators.size());
  for (int d = 0; d < config.n_documents; ++d) {
    RngStream stream(rng, "synth/doc", static_cast<std::uint64_t>(d));
    const std::string doc_id = padded_id("d", d, id_width);
    const double theta = config.doc_mean + config.doc_spread * stream.next_normal();
    const double shared = stream.next_normal();

    ModelLabelRecord model;
    model.dataset = dataset;
    model.doc_id = doc_id;
    model.model_id = config.model_id;
    model.label = clamp_round(theta + config.model_bias +
                                  config.model_shared_weight * shared +
                                  config.model_noise_sd * stream.next_normal(),
                              config.cardinality);
    model_labels.push_back(std::move(model));

    // Partial Fisher-Yates: first labels_per_document entries of a shuffle.
    for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
    for (int k = 0; k < config.labels_per_document; ++k) {
      const std::size_t j =
          k + static_cast<std::size_t>(stream.uniform_below(pool.size() - k));
      std::swap(pool[k], pool[j]);
      const Annotator& a = annotators[pool[k]];
      AnnotationRecord record;
      record.dataset = dataset;
      record.doc_id = doc_id;
      record.annotator_id = a.id;
      const double value = theta + a.bias + a.shared_weight * shared +
                           config.label_noise_sd * stream.next_normal();
      record.label = clamp_round(value, config.cardinality);
      record.raw_label = record.label;  // synthetic scale is already 1..K
      record.demographics = a.demographics;
      annotations.push_back(std::move(record));
    }
  }

  SynthOutput out;
  out.store = AnnotationStore::from_records(std::move(annotations));
  out.model_labels = ModelLabelStore::from_records(std::move(model_labels));
  out.ledger.delta = config.delta;
  out.ledger.group_bias = config.group_bias;
  out.ledger.model_bias = config.model_bias;
  out.ledger.label_noise_sd = config.label_noise_sd;
  for (Axis axis : {Axis::gender, Axis::ethnicity}) {
    const auto categories = axis_categories(axis);
    for (std::size_t i = 0; i < categories.size(); ++i) {
      for (std::size_t j = i + 1; j < categories.size(); ++j) {
        PlantedEffects::PairGap gap;
        gap.axis = axis;
        gap.group1 = categories[i];
        gap.group2 = categories[j];
        gap.gap = lookup(config.delta, group_key(axis, categories[i])) -
                  lookup(config.delta, group_key(axis, categories[j]));
        out.ledger.pair_gaps.push_back(std::move(gap));
      }
    }
  }
  return out;
}

std::vector<ComparisonRow> planted_vs_recovered(
    const PlantedEffects& ledger, const std::vector<RecoveredPair>& recovered) {
  std::vector<ComparisonRow> rows;
  for (const auto& r : recovered) {
    ComparisonRow row;
    row.axis = r.axis;
    row.group1 = r.group1;
    row.group2 = r.group2;
    row.recovered_delta_r = r.delta_r;
    row.ci_lo = r.ci_lo;
    row.ci_hi = r.ci_hi;
    row.p_holm = r.p_holm;
    row.significant = r.p_holm < 0.05;
    for (const auto& gap : ledger.pair_gaps) {
      const bool same = gap.axis == r.axis && gap.group1 == r.group1 &&
                        gap.group2 == r.group2;
      const bool flipped = gap.axis == r.axis && gap.group1 == r.group2 &&
                           gap.group2 == r.group1;
      if (same || flipped) {
        row.planted_gap = same ? gap.gap : -gap.gap;
        break;
      }
    }
    if (row.planted_gap == 0.0) {
      row.sign_match = !row.significant;
    } else {
      row.sign_match =
          row.significant && (row.planted_gap > 0) == (row.recovered_delta_r > 0);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace alignaudit::synth
