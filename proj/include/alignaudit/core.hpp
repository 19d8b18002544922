#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace alignaudit {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct AuditError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : AuditError { using AuditError::AuditError; };
struct IoError : AuditError { using AuditError::AuditError; };
struct MalformedRecordError : AuditError { using AuditError::AuditError; };
struct SchemaError : AuditError { using AuditError::AuditError; };
struct DuplicateRecordError : AuditError { using AuditError::AuditError; };
struct NoSupportError : AuditError { using AuditError::AuditError; };
struct UndefinedCorrelationError : AuditError { using AuditError::AuditError; };
struct InvalidCorrelationMatrixError : AuditError { using AuditError::AuditError; };
struct DegenerateBootstrapError : AuditError { using AuditError::AuditError; };
struct PreconditionError : AuditError { using AuditError::AuditError; };
struct DegenerateColumnError : AuditError { using AuditError::AuditError; };
struct SeparationError : AuditError { using AuditError::AuditError; };
struct CollinearityError : AuditError { using AuditError::AuditError; };
struct UnparseableResponseError : AuditError { using AuditError::AuditError; };
struct TransportError : AuditError { using AuditError::AuditError; };

// ---------------------------------------------------------------------------
// Dataset identity
// ---------------------------------------------------------------------------

// Case-insensitive, stored lowercase. The five source corpora use
// {awa, mhsc, nlpos, popq, sbic}; synthetic stores pick their own names.
class DatasetId {
 public:
  DatasetId() = default;
  explicit DatasetId(std::string_view name);

  const std::string& name() const { return name_; }
  bool empty() const { return name_.empty(); }

  friend bool operator==(const DatasetId&, const DatasetId&) = default;
  friend auto operator<=>(const DatasetId&, const DatasetId&) = default;

 private:
  std::string name_;
};

// ---------------------------------------------------------------------------
// Label scales
// ---------------------------------------------------------------------------

// Harmonization contract for one dataset's ordinal label scale. Raw values
// occupy [raw_lo, raw_lo + cardinality - 1] plus an optional excluded set;
// harmonized labels are 1..K and always ascend in offensiveness.
struct LabelScale {
  int cardinality = 0;      // K
  int raw_lo = 1;           // lowest raw value of the ordinal range
  bool descending = false;  // raw scale descends in offensiveness
  std::set<int> excluded;   // raw values dropped before analysis

  void validate() const;  // throws ConfigError unless K >= 2
};

// Returns the harmonized label in 1..K, or nullopt for an excluded raw value.
// Raw values outside the declared domain raise MalformedRecordError.
std::optional<int> harmonize_label(int raw, const LabelScale& scale);

// ---------------------------------------------------------------------------
// Demographics
// ---------------------------------------------------------------------------

enum class Gender { man, woman };
enum class Ethnicity { asian, black, hispanic, white };

std::string_view to_string(Gender g);
std::string_view to_string(Ethnicity e);

// Closed-set parsers: anything outside the analyzed categories maps to
// nullopt (absent), never to a wrong category.
std::optional<Gender> parse_gender(std::string_view s);
std::optional<Ethnicity> parse_ethnicity(std::string_view s);

struct Demographics {
  std::optional<Gender> gender;
  std::optional<Ethnicity> ethnicity;

  bool has_any() const { return gender.has_value() || ethnicity.has_value(); }
  friend bool operator==(const Demographics&, const Demographics&) = default;
};

enum class Axis { gender, ethnicity };

std::string_view to_string(Axis a);
Axis parse_axis(std::string_view s);  // throws ConfigError

// Group labels like "woman" or "hispanic" on a given axis.
std::vector<std::string> axis_categories(Axis a);
bool in_group(const Demographics& d, Axis a, std::string_view category);
bool has_axis(const Demographics& d, Axis a);

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

// One human label on one document; (dataset, doc_id, annotator_id) is unique.
struct AnnotationRecord {
  DatasetId dataset;
  std::string doc_id;
  std::string annotator_id;
  int raw_label = 0;
  int label = 0;  // harmonized, 1..K
  Demographics demographics;
};

// One LLM label on one document; (dataset, doc_id, model_id) is unique.
struct ModelLabelRecord {
  DatasetId dataset;
  std::string doc_id;
  std::string model_id;
  int label = 0;  // same harmonized scale as the dataset's human labels
  std::optional<std::string> raw_response;
};

// ---------------------------------------------------------------------------
// Deterministic randomness
// ---------------------------------------------------------------------------

std::uint64_t fnv1a64(std::string_view s);
std::uint64_t mix64(std::uint64_t z);  // splitmix64 finalizer

struct RngSpec {
  std::uint64_t master_seed = 0;
};

// Independent substream addressed by (master seed, task label, index).
// Identical addresses yield bit-identical draw sequences regardless of
// execution order or thread count. xoshiro256++ core, splitmix64 seeding.
class RngStream {
 public:
  RngStream(const RngSpec& spec, std::string_view task, std::uint64_t index);

  std::uint64_t next_u64();
  double next_double();  // uniform [0, 1)
  double next_normal();  // standard normal, Box-Muller
  std::uint64_t uniform_below(std::uint64_t n);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Runs fn(0..n-1). Slots must be independent; with threads > 1 indices are
// striped across workers, so results match the serial order by construction.
void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace alignaudit
