#include "alignaudit/annotate.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

namespace alignaudit::annotate {

void PromptTemplate::validate() const {
  if (dataset.empty()) throw ConfigError("prompt template missing dataset");
  if (instruction.empty())
    throw ConfigError("prompt template for " + dataset.name() +
                      " has an empty instruction");
  if (valid_options.empty())
    throw ConfigError("prompt template for " + dataset.name() +
                      " has no valid options");
}

const std::map<std::string, PromptTemplate>& builtin_templates() {
  static const std::map<std::string, PromptTemplate> templates = [] {
    std::map<std::string, PromptTemplate> t;
    t["awa"] = {
        DatasetId("awa"),
        "How much could this post be seen as toxic/hateful/disrespectful or "
        "offensive to anyone, on a scale from 1 (not at all) to 5 (very much "
        "so)? Valid options: 1, 2, 3, 4, 5. Begin your response by selecting "
        "one of the valid options, then provide a concise explanation for "
        "your rating.",
        {1, 2, 3, 4, 5}};
    t["mhsc"] = {
        DatasetId("mhsc"),
        "Does this comment contain hate speech, defined as \"bias-motivated, "
        "hostile and malicious language targeted at a person/group because "
        "of their actual or perceived innate characteristics, especially "
        "when the group is unnecessarily labeled (e.g., \"jew bankers\", "
        "\"n-- hooligans\").\" The comment contains hate speech if slurs or "
        "derogatory language are used toward any person or group regardless "
        "of whether or not the target is a member of the slur-target group. "
        "(e.g. a comment calling Trump a faggot or a n***** still contains "
        "hate speech). Valid options are 1 (Yes), 2 (Unclear), 3 (No). Begin "
        "your response by mentioning one of the valid options, then provide "
        "a concise explanation for your rating.",
        {1, 2, 3}};
    t["nlpos"] = {
        DatasetId("nlpos"),
        "Do you think this post is hateful speech? Valid options are 1 "
        "(Yes), 2 (Not sure), 3 (No). Begin your response by mentioning one "
        "of the valid options, then provide a concise explanation for your "
        "rating.",
        {1, 2, 3}};
    t["popq"] = {
        DatasetId("popq"),
        "Consider you read the above comment on Reddit. How offensive do you "
        "think it is, on a scale from 1 (not offensive at all) to 5 (very "
        "offensive)? Valid options: 1, 2, 3, 4, 5. Begin your response by "
        "selecting one of the valid options, then provide a concise "
        "explanation for your rating.",
        {1, 2, 3, 4, 5}};
    t["sbic"] = {
        DatasetId("sbic"),
        "Could this post be considered offensive, disrespectful, or toxic to "
        "anyone/someone? Valid options are: 1 (Yes, this could be "
        "offensive), 2 (Maybe, I'm not sure), 3 (No, this is harmless), 4 (I "
        "don't understand the post). Begin your response by mentioning one "
        "of the valid options, then provide a concise explanation for your "
        "rating.",
        {1, 2, 3, 4}};
    return t;
  }();
  return templates;
}

std::string render_prompt(const std::string& document_text,
                          const PromptTemplate& tmpl) {
  tmpl.validate();
  if (document_text.empty())
    throw PreconditionError("render_prompt: document text is empty");
  return document_text + "\n\n" + tmpl.instruction;
}

int extract_label(const std::string& response,
                  const std::vector<int>& valid_options) {
  if (response.empty())
    throw PreconditionError("extract_label: empty response");
  const auto is_word = [](unsigned char c) { return std::isalnum(c) != 0; };
  std::size_t i = 0;
  const std::size_t n = response.size();
  while (i < n) {
    if (!std::isdigit(static_cast<unsigned char>(response[i]))) {
      ++i;
      continue;
    }
    std::size_t end = i;
    while (end < n && std::isdigit(static_cast<unsigned char>(response[end])))
      ++end;
    const bool bounded_left = i == 0 || !is_word(response[i - 1]);
    const bool bounded_right = end == n || !is_word(response[end]);
    if (bounded_left && bounded_right && end - i <= 9) {
      const int value = std::stoi(response.substr(i, end - i));
      if (std::find(valid_options.begin(), valid_options.end(), value) !=
          valid_options.end())
        return value;
    }
    i = end;
  }
  throw UnparseableResponseError("no valid option found in response");
}

// ---------------------------------------------------------------------------
// Providers
// ---------------------------------------------------------------------------

ProviderConfig ProviderConfig::from_json_file(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open provider config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
    ProviderConfig c;
    c.base_url = j.at("base_url").get<std::string>();
    c.model = j.at("model").get<std::string>();
    c.credential_env = j.at("credential_env").get<std::string>();
    c.timeout_seconds = j.value("timeout_seconds", 60);
    c.max_retries = j.value("max_retries", 3);
    c.temperature = j.value("temperature", 0.0);
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("provider config " + path.string() + ": " + e.what());
  }
}

namespace {

class HttpProvider : public Provider {
 public:
  explicit HttpProvider(ProviderConfig config) : config_(std::move(config)) {
    const auto scheme_end = config_.base_url.find("://");
    const std::size_t host_start =
        scheme_end == std::string::npos ? 0 : scheme_end + 3;
    const auto path_start = config_.base_url.find('/', host_start);
    if (path_start == std::string::npos) {
      host_ = config_.base_url;
    } else {
      host_ = config_.base_url.substr(0, path_start);
      path_prefix_ = config_.base_url.substr(path_start);
    }
    if (!path_prefix_.empty() && path_prefix_.back() == '/')
      path_prefix_.pop_back();
  }

  std::string model_name() const override { return config_.model; }

  std::string complete(const std::string& prompt) override {
    const char* credential = std::getenv(config_.credential_env.c_str());
    if (!credential || !*credential)
      throw ConfigError("credential environment variable " +
                        config_.credential_env + " is not set");
    nlohmann::json body = {
        {"model", config_.model},
        {"messages",
         nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
        {"temperature", config_.temperature},
    };
    httplib::Client client(host_);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);
    httplib::Headers headers = {
        {"Authorization", std::string("Bearer ") + credential}};
    auto res = client.Post(path_prefix_ + "/chat/completions", headers,
                           body.dump(), "application/json");
    if (!res)
      throw TransportError("request to " + host_ + " failed: " +
                           httplib::to_string(res.error()));
    if (res->status != 200)
      throw TransportError("provider returned HTTP " +
                           std::to_string(res->status));
    try {
      const auto parsed = nlohmann::json::parse(res->body);
      return parsed.at("choices").at(0).at("message").at("content")
          .get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw TransportError(std::string("malformed provider response: ") +
                           e.what());
    }
  }

 private:
  ProviderConfig config_;
  std::string host_;
  std::string path_prefix_;
};

}  // namespace

std::unique_ptr<Provider> make_http_provider(const ProviderConfig& config) {
  return std::make_unique<HttpProvider>(config);
}

MockProvider::MockProvider(
    std::string model, std::map<std::string, std::vector<std::string>> scripts)
    : model_(std::move(model)), scripts_(std::move(scripts)) {}

std::string MockProvider::complete(const std::string& prompt) {
  std::lock_guard<std::mutex> lock(mutex_);
  ++calls_;
  // Longest script key contained in the prompt wins; "*" is the fallback.
  const std::string* best_key = nullptr;
  for (const auto& [key, script] : scripts_) {
    if (key == "*") continue;
    if (prompt.find(key) == std::string::npos) continue;
    if (!best_key || key.size() > best_key->size()) best_key = &key;
  }
  std::string key = best_key ? *best_key : "*";
  auto it = scripts_.find(key);
  if (it == scripts_.end() || it->second.empty())
    throw TransportError("mock provider has no script for this prompt");
  auto& cursor = cursor_[key];
  const auto& script = it->second;
  const std::string& response =
      script[std::min(cursor, script.size() - 1)];
  ++cursor;
  return response;
}

std::unique_ptr<MockProvider> MockProvider::from_json_file(
    std::string model, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open mock script " + path.string());
  nlohmann::json j;
  std::map<std::string, std::vector<std::string>> scripts;
  try {
    in >> j;
    for (const auto& [key, value] : j.at("responses").items()) {
      if (value.is_string()) {
        scripts[key] = {value.get<std::string>()};
      } else {
        for (const auto& v : value) scripts[key].push_back(v.get<std::string>());
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("mock script " + path.string() + ": " + e.what());
  }
  return std::make_unique<MockProvider>(std::move(model), std::move(scripts));
}

// ---------------------------------------------------------------------------
// Cache
// ---------------------------------------------------------------------------

ResponseCache::ResponseCache(std::filesystem::path path)
    : path_(std::move(path)) {
  std::ifstream in(path_, std::ios::binary);
  if (!in) return;  // cold cache
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      entries_[j.at("key").get<std::string>()] =
          j.at("response").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw IoError("cache " + path_.string() + " line " +
                    std::to_string(line_no) + " is corrupt: " + e.what());
    }
  }
}

std::string ResponseCache::key_of(const std::string& model,
                                  const std::string& prompt) {
  const std::uint64_t h = fnv1a64(model + '\x1f' + prompt);
  char buffer[17];
  std::snprintf(buffer, sizeof buffer, "%016llx",
                static_cast<unsigned long long>(h));
  return buffer;
}

std::optional<std::string> ResponseCache::lookup(const std::string& key) const {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ResponseCache::append(const std::string& key,
                           const std::string& response) {
  std::lock_guard<std::mutex> lock(mutex_);
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) throw IoError("cannot append to cache " + path_.string());
  nlohmann::json j = {{"key", key}, {"response", response}};
  out << j.dump() << '\n';
  entries_[key] = response;
}

// ---------------------------------------------------------------------------
// Corpus annotation
// ---------------------------------------------------------------------------

std::vector<DocumentText> read_texts_tsv(const std::filesystem::path& path) {
  const auto rows = read_delimited(path, '\t');
  if (rows.empty()) throw IoError("texts file has no header: " + path.string());
  const std::vector<std::string> expected = {"dataset", "doc_id", "text"};
  if (rows.front() != expected)
    throw IoError("unexpected texts header in " + path.string());
  std::vector<DocumentText> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != 3)
      throw MalformedRecordError("texts row " + std::to_string(i + 1) +
                                 " has " + std::to_string(rows[i].size()) +
                                 " fields");
    out.push_back({DatasetId(rows[i][0]), rows[i][1], rows[i][2]});
  }
  return out;
}

AnnotateResult annotate_corpus(const std::vector<DocumentText>& documents,
                               const PromptTemplate& tmpl,
                               const LabelScale& scale, Provider& provider,
                               ResponseCache& cache, int max_retries,
                               int concurrency) {
  tmpl.validate();
  scale.validate();
  for (const auto& d : documents)
    if (d.dataset != tmpl.dataset)
      throw PreconditionError("document " + d.doc_id + " belongs to dataset " +
                              d.dataset.name() + ", template is for " +
                              tmpl.dataset.name());

  // One slot per unique (dataset, doc), sorted by document id.
  std::vector<const DocumentText*> docs;
  {
    std::map<DocKey, const DocumentText*> unique;
    for (const auto& d : documents) unique.try_emplace({d.dataset.name(), d.doc_id}, &d);
    docs.reserve(unique.size());
    for (const auto& [key, d] : unique) docs.push_back(d);
  }

  struct Slot {
    std::optional<ModelLabelRecord> record;
    bool unlabeled = false;
  };
  std::vector<Slot> slots(docs.size());
  std::atomic<std::size_t> cache_hits{0}, provider_calls{0}, retries{0};
  const std::string model = provider.model_name();

  parallel_for(docs.size(), concurrency, [&](std::size_t i) {
    const DocumentText& doc = *docs[i];
    const std::string prompt = render_prompt(doc.text, tmpl);
    const std::string key = ResponseCache::key_of(model, prompt);

    std::string response;
    bool from_cache = false;
    if (auto cached = cache.lookup(key)) {
      response = *cached;
      from_cache = true;
      ++cache_hits;
    }

    std::optional<int> raw;
    if (from_cache) {
      try {
        raw = extract_label(response, tmpl.valid_options);
      } catch (const UnparseableResponseError&) {
        // A cached failure stays failed; warm reruns make no provider calls.
      }
    } else {
      const int attempts = 1 + std::max(0, max_retries);
      for (int attempt = 0; attempt < attempts; ++attempt) {
        try {
          response = provider.complete(prompt);
          ++provider_calls;
        } catch (const TransportError& e) {
          if (attempt + 1 == attempts)
            throw TransportError("document " + doc.doc_id + ": " + e.what());
          ++retries;
          continue;
        }
        try {
          raw = extract_label(response, tmpl.valid_options);
          break;
        } catch (const UnparseableResponseError&) {
          if (attempt + 1 < attempts) ++retries;
        }
      }
      cache.append(key, response);
    }

    if (!raw) {
      slots[i].unlabeled = true;
      return;
    }
    const auto harmonized = harmonize_label(*raw, scale);
    if (!harmonized) {
      slots[i].unlabeled = true;  // model picked an excluded option
      return;
    }
    ModelLabelRecord record;
    record.dataset = doc.dataset;
    record.doc_id = doc.doc_id;
    record.model_id = model;
    record.label = *harmonized;
    record.raw_response = response;
    slots[i].record = std::move(record);
  });

  AnnotateResult result;
  result.report.documents = docs.size();
  result.report.cache_hits = cache_hits;
  result.report.provider_calls = provider_calls;
  result.report.retried_responses = retries;
  std::vector<ModelLabelRecord> records;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i].record)
      records.push_back(std::move(*slots[i].record));
    else if (slots[i].unlabeled)
      result.report.unlabeled_doc_ids.push_back(docs[i]->doc_id);
  }
  result.labels = ModelLabelStore::from_records(std::move(records));
  return result;
}

}  // namespace alignaudit::annotate
