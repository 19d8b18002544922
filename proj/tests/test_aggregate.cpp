#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "alignaudit/aggregate.hpp"

using namespace alignaudit;
using namespace alignaudit::aggregate;

namespace {

// Independent rounding oracle: long-double mean, manual half-away-from-zero.
int oracle_rounded_average(const std::vector<int>& labels) {
  long double mean = 0.0L;
  for (int v : labels) mean += v;
  mean /= static_cast<long double>(labels.size());
  const long double floor_part = std::floor(mean);
  const long double frac = mean - floor_part;
  if (std::abs(frac - 0.5L) < 1e-12L) return static_cast<int>(floor_part) + 1;
  return static_cast<int>(std::llround(static_cast<double>(mean)));
}

AnnotationStore toy_store() {
  std::vector<AnnotationRecord> r;
  const DatasetId ds("synth");
  const auto demo = [](const char* g, const char* e) {
    return Demographics{parse_gender(g), parse_ethnicity(e)};
  };
  // 3 annotators x 4 documents
  r.push_back({ds, "d1", "a1", 1, 1, demo("man", "white")});
  r.push_back({ds, "d1", "a2", 2, 2, demo("woman", "black")});
  r.push_back({ds, "d1", "a3", 5, 5, demo("woman", "white")});
  r.push_back({ds, "d2", "a1", 2, 2, demo("man", "white")});
  r.push_back({ds, "d2", "a2", 2, 2, demo("woman", "black")});
  r.push_back({ds, "d2", "a3", 4, 4, demo("woman", "white")});
  r.push_back({ds, "d3", "a1", 3, 3, demo("man", "white")});
  r.push_back({ds, "d3", "a2", 4, 4, demo("woman", "black")});
  r.push_back({ds, "d3", "a3", 2, 2, demo("woman", "white")});
  r.push_back({ds, "d4", "a1", 5, 5, demo("man", "white")});
  r.push_back({ds, "d4", "a2", 5, 5, demo("woman", "black")});
  r.push_back({ds, "d4", "a3", 1, 1, demo("woman", "white")});
  return AnnotationStore::from_records(std::move(r));
}

}  // namespace

TEST_SUITE("aggregate") {

TEST_CASE("rounded_average: fixed examples") {
  CHECK(rounded_average(std::vector<int>{3, 3, 3}) == 3);
  CHECK(rounded_average(std::vector<int>{1, 2, 2, 5}) == 3);  // mean 2.5 -> up
  CHECK(rounded_average(std::vector<int>{1}) == 1);
  CHECK_THROWS_AS(rounded_average(std::vector<int>{}), NoSupportError);
}

TEST_CASE("rounded_average: exhaustive small multisets against the oracle") {
  // All multisets of size 1..4 over labels 1..5.
  for (int size = 1; size <= 4; ++size) {
    std::vector<int> labels(size, 1);
    for (;;) {
      CHECK(rounded_average(labels) == oracle_rounded_average(labels));
      int k = size - 1;
      while (k >= 0 && labels[k] == 5) --k;
      if (k < 0) break;
      ++labels[k];
      for (int j = k + 1; j < size; ++j) labels[j] = labels[k];
    }
  }
}

TEST_CASE("majority: fixed examples and upward tie-break") {
  CHECK(majority(std::vector<int>{1, 1, 3}) == 1);
  CHECK(majority(std::vector<int>{1, 3}) == 3);
  CHECK(majority(std::vector<int>{2, 2, 4, 4, 5}) == 4);
  CHECK_THROWS_AS(majority(std::vector<int>{}), NoSupportError);
}

TEST_CASE("aggregation is permutation-invariant") {
  RngStream stream(RngSpec{3}, "agg/perm", 0);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<int> labels;
    const int n = 1 + static_cast<int>(stream.uniform_below(8));
    for (int i = 0; i < n; ++i)
      labels.push_back(1 + static_cast<int>(stream.uniform_below(5)));
    std::vector<int> shuffled = labels;
    stream.shuffle(shuffled);
    CHECK(rounded_average(labels) == rounded_average(shuffled));
    CHECK(majority(labels) == majority(shuffled));
  }
}

TEST_CASE("binary scales: majority equals rounded average off ties") {
  RngStream stream(RngSpec{4}, "agg/k2", 0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> labels;
    const int n = 1 + static_cast<int>(stream.uniform_below(7));
    int ones = 0;
    for (int i = 0; i < n; ++i) {
      labels.push_back(1 + static_cast<int>(stream.uniform_below(2)));
      ones += labels.back() == 1;
    }
    const bool tie = 2 * ones == n;
    if (!tie)
      CHECK(majority(labels) == rounded_average(labels));
    else {
      CHECK(majority(labels) == 2);          // upward tie-break
      CHECK(rounded_average(labels) == 2);   // mean 1.5 rounds up
    }
  }
}

TEST_CASE("group_ground_truth: demographic filter") {
  // labels {man: 5, woman: 1, woman: 2} -> woman mean 1.5 rounds up to 2
  std::vector<AnnotationRecord> r;
  const DatasetId ds("synth");
  r.push_back({ds, "d1", "a1", 5, 5, {Gender::man, std::nullopt}});
  r.push_back({ds, "d1", "a2", 1, 1, {Gender::woman, std::nullopt}});
  r.push_back({ds, "d1", "a3", 2, 2, {Gender::woman, std::nullopt}});
  const auto store = AnnotationStore::from_records(std::move(r));
  GroupFilter woman;
  woman.gender = Gender::woman;
  const auto gt = group_ground_truth(store, ds, "d1",
                                     Method::rounded_average, woman);
  CHECK(gt.value == 2);
  CHECK(gt.support == 2);

  GroupFilter hispanic;
  hispanic.ethnicity = Ethnicity::hispanic;
  CHECK_THROWS_AS(group_ground_truth(store, ds, "d1",
                                     Method::rounded_average, hispanic),
                  NoSupportError);
}

TEST_CASE("group_ground_truth: trivial filter equals overall aggregation") {
  const auto store = toy_store();
  const auto overall = ground_truths(store, Method::majority);
  const auto filtered = ground_truths(store, Method::majority, GroupFilter{});
  REQUIRE(overall.size() == filtered.size());
  for (const auto& [key, gt] : overall) {
    CHECK(filtered.at(key).value == gt.value);
    CHECK(filtered.at(key).support == gt.support);
  }
}

TEST_CASE("leave_one_out: perfect agreement") {
  std::vector<AnnotationRecord> r;
  const DatasetId ds("synth");
  const int labels[6] = {1, 2, 3, 4, 5, 1};
  for (int d = 0; d < 6; ++d) {
    const std::string doc = "d" + std::to_string(d);
    r.push_back({ds, doc, "a1", labels[d], labels[d], {}});
    r.push_back({ds, doc, "a2", labels[d], labels[d], {}});
  }
  const auto store = AnnotationStore::from_records(std::move(r));
  const auto result =
      leave_one_out_agreement(store, Method::rounded_average, 5);
  REQUIRE(result.per_annotator.size() == 2);
  for (const auto& a : result.per_annotator) CHECK(a.r == doctest::Approx(1.0));
  CHECK(result.mean_r == doctest::Approx(1.0));
}

TEST_CASE("leave_one_out: majority method on identical annotators") {
  std::vector<AnnotationRecord> r;
  const DatasetId ds("synth");
  const int labels[6] = {1, 2, 3, 4, 5, 1};
  for (int d = 0; d < 6; ++d) {
    const std::string doc = "d" + std::to_string(d);
    r.push_back({ds, doc, "a1", labels[d], labels[d], {}});
    r.push_back({ds, doc, "a2", labels[d], labels[d], {}});
  }
  const auto store = AnnotationStore::from_records(std::move(r));
  const auto result = leave_one_out_agreement(store, Method::majority, 5);
  REQUIRE(result.per_annotator.size() == 2);
  for (const auto& a : result.per_annotator) CHECK(a.r == doctest::Approx(1.0));
}

TEST_CASE("leave_one_out: anti-agreement gives -1") {
  // a3's labels are a strictly decreasing function of a4's.
  std::vector<AnnotationRecord> r;
  const DatasetId ds("synth");
  const int labels[6] = {1, 2, 3, 4, 5, 2};
  for (int d = 0; d < 6; ++d) {
    const std::string doc = "d" + std::to_string(d);
    r.push_back({ds, doc, "a3", labels[d], labels[d], {}});
    r.push_back({ds, doc, "a4", 6 - labels[d], 6 - labels[d], {}});
  }
  const auto store = AnnotationStore::from_records(std::move(r));
  const auto result =
      leave_one_out_agreement(store, Method::rounded_average, 5);
  REQUIRE(result.per_annotator.size() == 2);
  for (const auto& a : result.per_annotator)
    CHECK(a.r == doctest::Approx(-1.0));
}

TEST_CASE("leave_one_out: matches brute-force enumeration on the toy store") {
  const auto store = toy_store();
  const auto result =
      leave_one_out_agreement(store, Method::rounded_average, 3);

  // Independent enumeration: for each annotator and doc, recompute the
  // ground truth over the other two labels directly.
  std::map<std::string, std::vector<std::pair<int, int>>> pairs;
  for (const auto& [doc_key, span] : store.docs()) {
    for (std::size_t i = span.begin; i < span.end; ++i) {
      std::vector<int> others;
      for (std::size_t j = span.begin; j < span.end; ++j)
        if (j != i) others.push_back(store.records()[j].label);
      const int gt = oracle_rounded_average(others);
      pairs[store.records()[i].annotator_id].push_back(
          {store.records()[i].label, gt});
    }
  }
  for (const auto& a : result.per_annotator) {
    const auto& pv = pairs.at(a.annotator_id);
    REQUIRE(static_cast<int>(pv.size()) == a.n_pairs);
    double mx = 0, my = 0;
    for (const auto& [x, y] : pv) {
      mx += x;
      my += y;
    }
    mx /= pv.size();
    my /= pv.size();
    double sxy = 0, sxx = 0, syy = 0;
    for (const auto& [x, y] : pv) {
      sxy += (x - mx) * (y - my);
      sxx += (x - mx) * (x - mx);
      syy += (y - my) * (y - my);
    }
    CHECK(a.r == doctest::Approx(sxy / std::sqrt(sxx * syy)).epsilon(1e-12));
  }
}

TEST_CASE("leave_one_out: sparse annotators are excluded and reported") {
  std::vector<AnnotationRecord> r;
  const DatasetId ds("synth");
  const int labels[6] = {1, 2, 3, 4, 5, 2};
  for (int d = 0; d < 6; ++d) {
    const std::string doc = "d" + std::to_string(d);
    r.push_back({ds, doc, "a1", labels[d], labels[d], {}});
    r.push_back({ds, doc, "a2", labels[d], labels[d], {}});
  }
  r.push_back({ds, "d0", "rare", 3, 3, {}});  // one document only
  const auto store = AnnotationStore::from_records(std::move(r));
  const auto result =
      leave_one_out_agreement(store, Method::rounded_average, 5);
  CHECK(result.per_annotator.size() == 2);
  REQUIRE(result.excluded.size() == 1);
  CHECK(result.excluded[0].annotator_id == "rare");
}

}  // TEST_SUITE
