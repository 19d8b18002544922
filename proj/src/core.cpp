#include "alignaudit/core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <thread>

namespace alignaudit {

namespace {

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

}  // namespace

DatasetId::DatasetId(std::string_view name) : name_(lowercase(name)) {
  if (name_.empty()) throw ConfigError("dataset id must be non-empty");
}

void LabelScale::validate() const {
  if (cardinality < 2)
    throw ConfigError("label scale cardinality must be >= 2, got " +
                      std::to_string(cardinality));
}

std::optional<int> harmonize_label(int raw, const LabelScale& scale) {
  scale.validate();
  if (scale.excluded.count(raw)) return std::nullopt;
  const int hi = scale.raw_lo + scale.cardinality - 1;
  if (raw < scale.raw_lo || raw > hi)
    throw MalformedRecordError("raw label " + std::to_string(raw) +
                               " outside declared scale domain [" +
                               std::to_string(scale.raw_lo) + ", " +
                               std::to_string(hi) + "]");
  const int shifted = raw - scale.raw_lo + 1;  // 1..K
  return scale.descending ? scale.cardinality + 1 - shifted : shifted;
}

std::string_view to_string(Gender g) {
  return g == Gender::man ? "man" : "woman";
}

std::string_view to_string(Ethnicity e) {
  switch (e) {
    case Ethnicity::asian: return "asian";
    case Ethnicity::black: return "black";
    case Ethnicity::hispanic: return "hispanic";
    case Ethnicity::white: return "white";
  }
  return "";
}

std::optional<Gender> parse_gender(std::string_view s) {
  const std::string v = lowercase(s);
  if (v == "man") return Gender::man;
  if (v == "woman") return Gender::woman;
  return std::nullopt;
}

std::optional<Ethnicity> parse_ethnicity(std::string_view s) {
  const std::string v = lowercase(s);
  if (v == "asian") return Ethnicity::asian;
  if (v == "black") return Ethnicity::black;
  if (v == "hispanic") return Ethnicity::hispanic;
  if (v == "white") return Ethnicity::white;
  return std::nullopt;
}

std::string_view to_string(Axis a) {
  return a == Axis::gender ? "gender" : "ethnicity";
}

Axis parse_axis(std::string_view s) {
  const std::string v = lowercase(s);
  if (v == "gender") return Axis::gender;
  if (v == "ethnicity") return Axis::ethnicity;
  throw ConfigError("unknown demographic axis: " + std::string(s));
}

std::vector<std::string> axis_categories(Axis a) {
  if (a == Axis::gender) return {"man", "woman"};
  return {"asian", "black", "hispanic", "white"};
}

bool has_axis(const Demographics& d, Axis a) {
  return a == Axis::gender ? d.gender.has_value() : d.ethnicity.has_value();
}

bool in_group(const Demographics& d, Axis a, std::string_view category) {
  if (a == Axis::gender)
    return d.gender && to_string(*d.gender) == category;
  return d.ethnicity && to_string(*d.ethnicity) == category;
}

// ---------------------------------------------------------------------------
// Randomness
// ---------------------------------------------------------------------------

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

namespace {

inline std::uint64_t rotl64(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace

RngStream::RngStream(const RngSpec& spec, std::string_view task,
                     std::uint64_t index) {
  std::uint64_t s = mix64(spec.master_seed + fnv1a64(task));
  s ^= mix64(index ^ 0xd1b54a32d192ed03ull);
  for (auto& word : state_) {
    s = mix64(s);
    word = s;
  }
}

std::uint64_t RngStream::next_u64() {
  // xoshiro256++
  const std::uint64_t result = rotl64(state_[0] + state_[3], 23) + state_[0];
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl64(state_[3], 45);
  return result;
}

double RngStream::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::next_normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - next_double();  // (0, 1], keeps log finite
  const double u2 = next_double();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * M_PI * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::uint64_t RngStream::uniform_below(std::uint64_t n) {
  if (n == 0) throw PreconditionError("uniform_below(0)");
  const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r >= threshold) return r % n;
  }
}

void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace alignaudit
