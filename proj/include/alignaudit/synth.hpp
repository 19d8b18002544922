#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "alignaudit/core.hpp"
#include "alignaudit/store.hpp"

namespace alignaudit::synth {

// Synthetic annotator population. Group keys are "axis=category" strings,
// e.g. "ethnicity=white". Marginals may route mass to "" (attribute absent).
struct SynthConfig {
  std::string dataset = "synth";
  int n_documents = 200;
  int n_annotators = 50;
  int labels_per_document = 5;
  int cardinality = 5;

  double doc_mean = 3.0;    // latent offensiveness distribution
  double doc_spread = 1.0;

  double annotator_bias_spread = 0.0;
  // Mean annotator bias per group; drives confounder-only scenarios where
  // sensitivity, not identity, produces apparent demographic effects.
  std::map<std::string, double> group_bias;
  // Alignment gap: weight of the model-shared noise in a group's labels.
  std::map<std::string, double> delta;

  double model_bias = 0.0;
  double model_shared_weight = 1.0;  // model's loading on the shared noise
  double model_noise_sd = 0.0;
  double label_noise_sd = 0.5;

  std::map<std::string, double> gender_marginals = {{"man", 0.5},
                                                    {"woman", 0.5}};
  std::map<std::string, double> ethnicity_marginals = {
      {"asian", 0.1}, {"black", 0.3}, {"hispanic", 0.1}, {"white", 0.5}};

  std::string model_id = "synth-model";

  void validate() const;  // spreads >= 0, marginals sum to 1 per axis

  static SynthConfig from_json_file(const std::filesystem::path& path);
  void write_json_file(const std::filesystem::path& path) const;
};

// Every planted effect, for comparison against audit output.
struct PlantedEffects {
  std::map<std::string, double> delta;       // group -> shared-noise weight
  std::map<std::string, double> group_bias;  // group -> mean annotator bias
  double model_bias = 0.0;
  double label_noise_sd = 0.0;
  // Pairwise planted alignment gaps per axis: positive means the first group
  // of the pair shares more noise with the model.
  struct PairGap {
    Axis axis;
    std::string group1, group2;
    double gap = 0.0;  // delta[group1] - delta[group2]
  };
  std::vector<PairGap> pair_gaps;
};

struct SynthOutput {
  AnnotationStore store;
  ModelLabelStore model_labels;
  PlantedEffects ledger;
};

// Deterministic under RngSpec; outputs satisfy all store invariants.
SynthOutput generate(const SynthConfig& config, const RngSpec& rng);

// Recovered estimate for one demographic pair (filled from audit output).
struct RecoveredPair {
  Axis axis;
  std::string group1, group2;
  double delta_r = 0.0;
  double ci_lo = 0.0, ci_hi = 0.0;
  double p_holm = 1.0;
};

struct ComparisonRow {
  Axis axis;
  std::string group1, group2;
  double planted_gap = 0.0;
  double recovered_delta_r = 0.0;
  double ci_lo = 0.0, ci_hi = 0.0;
  double p_holm = 1.0;
  bool significant = false;  // holm-adjusted p < 0.05
  bool sign_match = false;   // null planted -> not significant; else sign agrees
};

std::vector<ComparisonRow> planted_vs_recovered(
    const PlantedEffects& ledger, const std::vector<RecoveredPair>& recovered);

}  // namespace alignaudit::synth
