#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "alignaudit/core.hpp"
#include "alignaudit/store.hpp"

namespace alignaudit::annotate {

// Dataset prompt: the human-annotator question wording plus the directive to
// lead with one of the valid options.
struct PromptTemplate {
  DatasetId dataset;
  std::string instruction;         // full question text, directive included
  std::vector<int> valid_options;  // ordered raw label values

  void validate() const;  // throws ConfigError on empty instruction/options
};

// Built-in templates for the five source datasets (awa, mhsc, nlpos, popq,
// sbic), keyed by dataset name.
const std::map<std::string, PromptTemplate>& builtin_templates();

// document text, then a blank line, then the dataset's instruction.
std::string render_prompt(const std::string& document_text,
                          const PromptTemplate& tmpl);

// First integer token (at token boundaries) matching a valid option.
// Throws UnparseableResponseError when no option is present.
int extract_label(const std::string& response,
                  const std::vector<int>& valid_options);

// ---------------------------------------------------------------------------
// Providers
// ---------------------------------------------------------------------------

class Provider {
 public:
  virtual ~Provider() = default;
  virtual std::string model_name() const = 0;
  // Returns the raw completion text; throws TransportError on failure.
  virtual std::string complete(const std::string& prompt) = 0;
};

struct ProviderConfig {
  std::string base_url;          // e.g. https://api.example.com/v1
  std::string model;
  std::string credential_env;    // name of the env var holding the key
  int timeout_seconds = 60;
  int max_retries = 3;
  double temperature = 0.0;

  static ProviderConfig from_json_file(const std::filesystem::path& path);
};

// Chat-completion style HTTP provider. The credential is read from the
// environment at call time and never serialized.
std::unique_ptr<Provider> make_http_provider(const ProviderConfig& config);

// Scripted provider for tests and offline runs: responses per document key
// are consumed in order; "*" supplies the fallback script.
class MockProvider : public Provider {
 public:
  MockProvider(std::string model,
               std::map<std::string, std::vector<std::string>> scripts);
  std::string model_name() const override { return model_; }
  std::string complete(const std::string& prompt) override;
  int calls() const { return calls_; }

  static std::unique_ptr<MockProvider> from_json_file(
      std::string model, const std::filesystem::path& path);

 private:
  std::string model_;
  std::map<std::string, std::vector<std::string>> scripts_;
  std::map<std::string, std::size_t> cursor_;
  int calls_ = 0;
  std::mutex mutex_;
};

// ---------------------------------------------------------------------------
// Response cache
// ---------------------------------------------------------------------------

// Append-only JSONL cache keyed by a content hash of (model, prompt); raw
// responses round-trip byte-exactly.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path path);

  static std::string key_of(const std::string& model,
                            const std::string& prompt);
  std::optional<std::string> lookup(const std::string& key) const;
  void append(const std::string& key, const std::string& response);
  std::size_t size() const { return entries_.size(); }

 private:
  std::filesystem::path path_;
  std::map<std::string, std::string> entries_;
  mutable std::mutex mutex_;
};

// ---------------------------------------------------------------------------
// Corpus annotation
// ---------------------------------------------------------------------------

struct DocumentText {
  DatasetId dataset;
  std::string doc_id;
  std::string text;
};

// TSV with columns (dataset, doc_id, text).
std::vector<DocumentText> read_texts_tsv(const std::filesystem::path& path);

struct HarnessReport {
  std::size_t documents = 0;
  std::size_t cache_hits = 0;
  std::size_t provider_calls = 0;
  std::size_t retried_responses = 0;
  std::vector<std::string> unlabeled_doc_ids;
};

struct AnnotateResult {
  ModelLabelStore labels;
  HarnessReport report;
};

// Labels every document once per (dataset, document, model). Cached
// responses skip the provider; unparseable responses are re-queried up to
// max_retries times, then the document is recorded as unlabeled. Output
// order is by document id regardless of processing order.
AnnotateResult annotate_corpus(const std::vector<DocumentText>& documents,
                               const PromptTemplate& tmpl,
                               const LabelScale& scale, Provider& provider,
                               ResponseCache& cache, int max_retries = 3,
                               int concurrency = 1);

}  // namespace alignaudit::annotate
