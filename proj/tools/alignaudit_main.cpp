#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "alignaudit/aggregate.hpp"
#include "alignaudit/annotate.hpp"
#include "alignaudit/audit.hpp"
#include "alignaudit/confounders.hpp"
#include "alignaudit/core.hpp"
#include "alignaudit/ingest.hpp"
#include "alignaudit/store.hpp"
#include "alignaudit/synth.hpp"

namespace fs = std::filesystem;
using namespace alignaudit;

namespace {

struct CommonOptions {
  std::string store_path;
  std::string model_labels_path;
  std::string agg = "avg";
  std::uint64_t seed = 0;
  int boot = 1000;
  int perm = 1000;
  std::string out_dir = "out";
  int threads = 1;
};

void add_common(CLI::App* cmd, CommonOptions& opts, bool needs_labels) {
  cmd->add_option("--store", opts.store_path, "harmonized store TSV")
      ->required();
  auto* labels =
      cmd->add_option("--model-labels", opts.model_labels_path,
                      "model label TSV");
  if (needs_labels) labels->required();
  cmd->add_option("--agg", opts.agg, "aggregation: avg or majority")
      ->check(CLI::IsMember({"avg", "majority"}));
  cmd->add_option("--seed", opts.seed, "master seed");
  cmd->add_option("--boot", opts.boot, "bootstrap samples (0 disables)");
  cmd->add_option("--perm", opts.perm, "permutation iterations (0 disables)");
  cmd->add_option("--out", opts.out_dir, "output directory");
  cmd->add_option("--threads", opts.threads, "worker threads");
}

audit::AuditOptions to_audit_options(const CommonOptions& opts) {
  audit::AuditOptions out;
  out.method = aggregate::parse_method(opts.agg);
  out.bootstrap_samples = opts.boot;
  out.permutation_iterations = opts.perm;
  out.rng.master_seed = opts.seed;
  out.threads = opts.threads;
  return out;
}

std::string command_line(int argc, char** argv) {
  std::ostringstream out;
  for (int i = 0; i < argc; ++i) {
    if (i) out << ' ';
    out << argv[i];
  }
  return out.str();
}

void print_ingest_report(const ingest::IngestReport& report) {
  std::cout << "rows read: " << report.rows_read
            << ", emitted: " << report.rows_emitted << '\n';
  for (const auto& [reason, count] : report.excluded_by_reason)
    std::cout << "  excluded (" << reason << "): " << count << '\n';
  for (const auto& [axis, categories] : report.demographic_percentages) {
    std::cout << "  " << axis << ":";
    for (const auto& [category, pct] : categories) {
      char buffer[64];
      std::snprintf(buffer, sizeof buffer, " %s=%.2f%%", category.c_str(), pct);
      std::cout << buffer;
    }
    std::cout << '\n';
  }
  for (const auto& [value, count] : report.unmapped_demographics)
    std::cout << "  unmapped " << value << ": " << count << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Annotation-alignment audit toolkit"};
  app.require_subcommand(1);

  // --- ingest ---
  auto* ingest_cmd =
      app.add_subcommand("ingest", "harmonize a source dataset into the store");
  std::vector<std::string> schema_paths, source_paths;
  std::string ingest_out = "store.tsv";
  ingest_cmd->add_option("--schema", schema_paths, "dataset schema JSON")
      ->required();
  ingest_cmd->add_option("--source", source_paths, "source delimited file")
      ->required();
  ingest_cmd->add_option("--out", ingest_out, "output store TSV");

  // --- annotate ---
  auto* annotate_cmd =
      app.add_subcommand("annotate", "label documents with an LLM provider");
  std::string texts_path, provider_config_path, mock_path, cache_path =
      "cache.jsonl";
  std::string annotate_dataset, annotate_out = "model_labels.tsv";
  std::string mock_model = "mock-model";
  int annotate_concurrency = 1;
  annotate_cmd->add_option("--texts", texts_path,
                           "document texts TSV (dataset, doc_id, text)")
      ->required();
  annotate_cmd->add_option("--dataset", annotate_dataset,
                           "dataset whose prompt template to use")
      ->required();
  annotate_cmd->add_option("--provider-config", provider_config_path,
                           "HTTP provider JSON config");
  annotate_cmd->add_option("--mock", mock_path,
                           "mock provider script JSON (offline runs)");
  annotate_cmd->add_option("--mock-model", mock_model,
                           "model id recorded for the mock provider");
  annotate_cmd->add_option("--cache", cache_path, "response cache JSONL");
  annotate_cmd->add_option("--out", annotate_out, "output model label TSV");
  annotate_cmd->add_option("--concurrency", annotate_concurrency,
                           "bounded in-flight requests");

  // --- audit-rq0 ---
  auto* rq0_cmd = app.add_subcommand(
      "audit-rq0", "model vs aggregate human labels, with the human baseline");
  CommonOptions rq0_opts;
  add_common(rq0_cmd, rq0_opts, true);

  // --- audit-rq1 ---
  auto* rq1_cmd = app.add_subcommand(
      "audit-rq1", "per-demographic correlations and pairwise differences");
  CommonOptions rq1_opts;
  std::vector<std::string> axis_names = {"gender", "ethnicity"};
  add_common(rq1_cmd, rq1_opts, true);
  rq1_cmd->add_option("--axes", axis_names, "demographic axes to audit");

  // --- regress ---
  auto* rq2_cmd = app.add_subcommand(
      "regress", "alignment logistic regressions with confounders");
  CommonOptions rq2_opts;
  std::string export_design_path;
  add_common(rq2_cmd, rq2_opts, true);
  rq2_cmd->add_option("--export-design", export_design_path,
                      "also write the standardized design matrix TSV");

  // --- synth ---
  auto* synth_cmd = app.add_subcommand(
      "synth", "generate a synthetic population with planted effects");
  std::string synth_config_path, synth_out = "synth";
  std::uint64_t synth_seed = 0;
  synth_cmd->add_option("--config", synth_config_path, "synth config JSON")
      ->required();
  synth_cmd->add_option("--seed", synth_seed, "master seed");
  synth_cmd->add_option("--out", synth_out, "output directory");

  // --- report ---
  auto* report_cmd = app.add_subcommand(
      "report", "re-emit table files from a stored report.json");
  std::string report_in, report_out = "out";
  report_cmd->add_option("--in", report_in, "report.json path")->required();
  report_cmd->add_option("--out", report_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest_cmd) {
      if (schema_paths.size() != source_paths.size())
        throw ConfigError("need one --schema per --source");
      std::vector<AnnotationStore> fragments;
      for (std::size_t i = 0; i < schema_paths.size(); ++i) {
        const auto schema = ingest::DatasetSchema::from_json_file(schema_paths[i]);
        auto result = ingest::ingest(source_paths[i], schema);
        std::cout << "[" << schema.dataset.name() << "] ";
        print_ingest_report(result.report);
        fragments.push_back(std::move(result.fragment));
      }
      const auto merged = ingest::merge(fragments);
      merged.write_tsv(ingest_out);
      std::cout << "wrote " << merged.size() << " annotations to "
                << ingest_out << '\n';
    } else if (*annotate_cmd) {
      const auto& templates = annotate::builtin_templates();
      auto it = templates.find(DatasetId(annotate_dataset).name());
      if (it == templates.end())
        throw ConfigError("no built-in template for dataset " +
                          annotate_dataset);
      const auto& tmpl = it->second;
      LabelScale scale;
      scale.cardinality = static_cast<int>(tmpl.valid_options.size());
      // Built-in scales: hate/offensiveness questions with Yes-first options
      // descend; 1..5 Likert scales ascend.
      if (tmpl.dataset.name() == "mhsc" || tmpl.dataset.name() == "nlpos") {
        scale.descending = true;
      } else if (tmpl.dataset.name() == "sbic") {
        scale.cardinality = 3;
        scale.descending = true;
        scale.excluded = {4};
      }
      auto documents = annotate::read_texts_tsv(texts_path);
      const std::size_t all_docs = documents.size();
      std::erase_if(documents, [&](const annotate::DocumentText& d) {
        return d.dataset != tmpl.dataset;
      });
      if (documents.size() != all_docs)
        std::cout << "skipping " << (all_docs - documents.size())
                  << " documents outside dataset " << tmpl.dataset.name()
                  << '\n';
      std::unique_ptr<annotate::Provider> provider;
      int max_retries = 3;
      if (!mock_path.empty()) {
        provider = annotate::MockProvider::from_json_file(mock_model, mock_path);
      } else if (!provider_config_path.empty()) {
        const auto config =
            annotate::ProviderConfig::from_json_file(provider_config_path);
        max_retries = config.max_retries;
        provider = annotate::make_http_provider(config);
      } else {
        throw ConfigError("annotate needs --provider-config or --mock");
      }
      annotate::ResponseCache cache(cache_path);
      const auto result =
          annotate::annotate_corpus(documents, tmpl, scale, *provider, cache,
                                    max_retries, annotate_concurrency);
      result.labels.write_tsv(annotate_out);
      std::cout << "documents: " << result.report.documents
                << ", provider calls: " << result.report.provider_calls
                << ", cache hits: " << result.report.cache_hits
                << ", retries: " << result.report.retried_responses
                << ", unlabeled: " << result.report.unlabeled_doc_ids.size()
                << '\n';
      std::cout << "wrote " << result.labels.size() << " labels to "
                << annotate_out << '\n';
    } else if (*rq0_cmd || *rq1_cmd || *rq2_cmd) {
      const CommonOptions& opts =
          *rq0_cmd ? rq0_opts : (*rq1_cmd ? rq1_opts : rq2_opts);
      const auto store = AnnotationStore::read_tsv(opts.store_path);
      const auto labels = ModelLabelStore::read_tsv(opts.model_labels_path);
      const auto options = to_audit_options(opts);
      audit::AuditReport report;
      if (*rq0_cmd) {
        std::vector<std::string> warnings;
        report.rq0 = audit::run_rq0(store, labels, options, &warnings);
        for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
      } else if (*rq1_cmd) {
        std::vector<Axis> axes;
        for (const auto& name : axis_names) axes.push_back(parse_axis(name));
        report.rq1 = audit::run_rq1(store, labels, axes, options);
        for (const auto& s : report.rq1.skipped)
          std::cerr << "skipped: " << s << '\n';
      } else {
        report.rq2 = audit::run_rq2(store, labels, options);
        if (!export_design_path.empty()) {
          const auto models = labels.model_ids();
          for (const auto& model : models) {
            const auto rows = confounders::build_rows(store, labels, model);
            auto design = confounders::to_design(rows);
            confounders::standardize(design);
            fs::path path(export_design_path);
            if (models.size() > 1)
              path.replace_filename(path.stem().string() + "_" + model +
                                    path.extension().string());
            confounders::write_design_tsv(design, path);
          }
        }
      }
      const auto manifest = audit::make_manifest(
          command_line(argc, argv), opts.seed,
          {fs::path(opts.store_path), fs::path(opts.model_labels_path)});
      audit::write_report(report, manifest, opts.out_dir);
      std::cout << "wrote report to " << opts.out_dir << '\n';
    } else if (*synth_cmd) {
      const auto config = synth::SynthConfig::from_json_file(synth_config_path);
      RngSpec rng{synth_seed};
      const auto output = synth::generate(config, rng);
      fs::create_directories(synth_out);
      output.store.write_tsv(fs::path(synth_out) / "store.tsv");
      output.model_labels.write_tsv(fs::path(synth_out) / "model_labels.tsv");
      nlohmann::json ledger = {{"delta", output.ledger.delta},
                               {"group_bias", output.ledger.group_bias},
                               {"model_bias", output.ledger.model_bias},
                               {"label_noise_sd", output.ledger.label_noise_sd}};
      nlohmann::json gaps = nlohmann::json::array();
      for (const auto& gap : output.ledger.pair_gaps)
        gaps.push_back({{"axis", std::string(to_string(gap.axis))},
                        {"group1", gap.group1},
                        {"group2", gap.group2},
                        {"gap", gap.gap}});
      ledger["pair_gaps"] = std::move(gaps);
      std::ofstream ledger_out(fs::path(synth_out) / "ledger.json",
                               std::ios::binary);
      ledger_out << ledger.dump(2) << '\n';
      std::cout << "wrote " << output.store.size() << " annotations and "
                << output.model_labels.size() << " model labels to "
                << synth_out << '\n';
    } else if (*report_cmd) {
      std::ifstream in(report_in, std::ios::binary);
      if (!in) throw IoError("cannot open " + report_in);
      std::stringstream buffer;
      buffer << in.rdbuf();
      const auto report = audit::AuditReport::from_json_string(buffer.str());
      const auto manifest = audit::make_manifest(command_line(argc, argv), 0,
                                                 {fs::path(report_in)});
      audit::write_report(report, manifest, report_out);
      std::cout << "re-emitted report to " << report_out << '\n';
    }
  } catch (const AuditError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
