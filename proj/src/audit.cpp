#include "alignaudit/audit.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace alignaudit::audit {

namespace {

using aggregate::GroundTruth;
using aggregate::GroupFilter;
using aggregate::Method;

std::string fmt(double v, const char* spec = "%.6g") {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, spec, v);
  return buffer;
}

// Aggregate from a per-category count vector; nullopt when empty.
std::optional<int> aggregate_counts(std::span<const int> counts,
                                    Method method) {
  long long n = 0, sum = 0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    n += counts[k];
    sum += static_cast<long long>(counts[k]) * static_cast<long long>(k + 1);
  }
  if (n == 0) return std::nullopt;
  if (method == Method::rounded_average)
    return static_cast<int>((2 * sum + n) / (2 * n));
  int best = 0, best_count = -1;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (counts[k] >= best_count && counts[k] > 0) {
      best_count = counts[k];
      best = static_cast<int>(k + 1);
    }
  }
  return best;
}

}  // namespace

int delta_stars(double p) {
  if (p < 0.001) return 3;
  if (p < 0.05) return 2;
  if (p < 0.1) return 1;
  return 0;
}

// ---------------------------------------------------------------------------
// RQ0
// ---------------------------------------------------------------------------

std::vector<Rq0Row> run_rq0(const AnnotationStore& store,
                            const ModelLabelStore& model_labels,
                            const AuditOptions& options,
                            std::vector<std::string>* warnings) {
  std::vector<Rq0Row> rows;
  const auto models = model_labels.model_ids();
  for (const auto& dataset : store.datasets()) {
    const auto sub = store.subset(dataset);
    const auto gts = aggregate::ground_truths(sub, options.method);

    const auto loo = aggregate::leave_one_out_agreement(
        sub, options.method, options.min_loo_documents);
    std::optional<std::pair<double, double>> loo_ci;
    if (options.bootstrap_samples > 0 && loo.per_annotator.size() >= 3) {
      std::vector<double> values;
      values.reserve(loo.per_annotator.size());
      for (const auto& a : loo.per_annotator) values.push_back(a.r);
      const auto ci = stats::bootstrap_ci(
          [&](std::span<const std::size_t> idx) -> std::optional<double> {
            double sum = 0.0;
            for (std::size_t k : idx) sum += values[k];
            return sum / static_cast<double>(idx.size());
          },
          values.size(), options.bootstrap_samples, options.rng,
          "rq0loo/" + dataset.name(), options.threads);
      loo_ci = {ci.lo, ci.hi};
    }

    for (const auto& model : models) {
      std::vector<double> human, machine;
      for (const auto& [key, gt] : gts) {
        const auto label = model_labels.label_for(dataset, key.second, model);
        if (!label) continue;
        human.push_back(gt.value);
        machine.push_back(*label);
      }
      if (human.size() < 3) {
        if (warnings)
          warnings->push_back("rq0: dataset " + dataset.name() + " has " +
                              std::to_string(human.size()) +
                              " co-labeled documents for model " + model +
                              "; skipped");
        continue;
      }
      Rq0Row row;
      row.dataset = dataset.name();
      row.model = model;
      row.method = options.method;
      if (options.bootstrap_samples > 0) {
        row.corr = stats::correlate(human, machine, options.bootstrap_samples,
                                    options.rng,
                                    "rq0/" + dataset.name() + "/" + model,
                                    options.threads);
      } else {
        row.corr.r = stats::pearson(human, machine);
        row.corr.n = static_cast<int>(human.size());
        row.corr.t_test = stats::corr_t_test(row.corr.r, row.corr.n);
      }
      row.loo_mean = loo.mean_r;
      row.loo_ci = loo_ci;
      row.loo_annotators = static_cast<int>(loo.per_annotator.size());
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// RQ1
// ---------------------------------------------------------------------------

namespace {

// Per-dataset scaffolding for the annotation-level delta bootstrap: the
// annotations of the two groups, bucketed by document, against fixed model
// labels.
struct PairResampler {
  int cardinality = 0;
  Method method = Method::rounded_average;
  std::vector<double> model_by_doc;       // docs with a model label
  std::vector<std::size_t> unit_doc;      // annotation -> doc slot
  std::vector<char> unit_group;           // annotation -> 0 (g1) or 1 (g2)
  std::vector<int> unit_label;

  std::size_t units() const { return unit_doc.size(); }

  // Called concurrently from bootstrap workers; all scratch is per-call.
  std::optional<double> delta(std::span<const std::size_t> idx) const {
    const std::size_t docs = model_by_doc.size();
    const std::size_t k = static_cast<std::size_t>(cardinality);
    std::vector<int> counts(docs * 2 * k, 0);
    std::vector<double> x1, y1, x2, y2;
    for (std::size_t u : idx) {
      const std::size_t base =
          (unit_doc[u] * 2 + static_cast<std::size_t>(unit_group[u])) * k;
      ++counts[base + static_cast<std::size_t>(unit_label[u] - 1)];
    }
    for (std::size_t d = 0; d < docs; ++d) {
      const auto g1 = aggregate_counts(
          std::span<const int>(counts.data() + (d * 2) * k, k), method);
      const auto g2 = aggregate_counts(
          std::span<const int>(counts.data() + (d * 2 + 1) * k, k), method);
      if (!g1 || !g2) continue;  // shared-document rule
      x1.push_back(model_by_doc[d]);
      y1.push_back(*g1);
      x2.push_back(model_by_doc[d]);
      y2.push_back(*g2);
    }
    if (x1.size() < 3) return std::nullopt;
    const auto r1 = stats::pearson_opt(x1, y1);
    const auto r2 = stats::pearson_opt(x2, y2);
    if (!r1 || !r2) return std::nullopt;
    return *r1 - *r2;
  }
};

}  // namespace

Rq1Result run_rq1(const AnnotationStore& store,
                  const ModelLabelStore& model_labels,
                  const std::vector<Axis>& axes, const AuditOptions& options) {
  Rq1Result result;
  const auto models = model_labels.model_ids();

  for (const auto& dataset : store.datasets()) {
    const auto sub = store.subset(dataset);
    int cardinality = 0;
    for (const auto& r : sub.records()) cardinality = std::max(cardinality, r.label);
    for (const auto& r : model_labels.records())
      if (r.dataset == dataset) cardinality = std::max(cardinality, r.label);

    for (const auto& model : models) {
      // Documents of this dataset the model labeled, in stable order.
      std::vector<std::string> doc_ids;
      std::vector<double> model_values;
      std::map<std::string, std::size_t> doc_slot;
      for (const auto& [key, span] : sub.docs()) {
        const auto label = model_labels.label_for(dataset, key.second, model);
        if (!label) continue;
        doc_slot[key.second] = doc_ids.size();
        doc_ids.push_back(key.second);
        model_values.push_back(*label);
      }
      if (doc_ids.size() < 3) {
        result.skipped.push_back("rq1: dataset " + dataset.name() +
                                 " has fewer than 3 documents labeled by " +
                                 model);
        continue;
      }

      std::vector<DeltaRow> family;  // Holm family: this dataset x model
      for (Axis axis : axes) {
        const auto categories = axis_categories(axis);

        // Per-group ground truths over the model-labeled documents.
        std::map<std::string, std::map<std::string, int>> group_gt;
        for (const auto& category : categories) {
          const auto filter = GroupFilter::for_group(axis, category);
          const auto gts = aggregate::ground_truths(sub, options.method, filter);
          auto& into = group_gt[category];
          for (const auto& [key, gt] : gts)
            if (doc_slot.count(key.second)) into[key.second] = gt.value;
        }

        for (const auto& category : categories) {
          const auto& gt = group_gt[category];
          if (gt.size() < 3) {
            result.skipped.push_back("rq1: group " + category + " on " +
                                     std::string(to_string(axis)) +
                                     " unavailable in " + dataset.name() +
                                     " (" + std::to_string(gt.size()) +
                                     " documents)");
            continue;
          }
          std::vector<double> x, y;
          x.reserve(gt.size());
          for (const auto& [doc, value] : gt) {
            x.push_back(model_values[doc_slot.at(doc)]);
            y.push_back(value);
          }
          Rq1CorrRow row;
          row.dataset = dataset.name();
          row.model = model;
          row.method = options.method;
          row.axis = axis;
          row.group = category;
          const std::string task = "rq1/" + dataset.name() + "/" + model +
                                   "/" + std::string(to_string(axis)) + "/" +
                                   category;
          if (options.bootstrap_samples > 0) {
            row.corr = stats::correlate(x, y, options.bootstrap_samples,
                                        options.rng, task, options.threads);
          } else {
            row.corr.r = stats::pearson(x, y);
            row.corr.n = static_cast<int>(x.size());
            row.corr.t_test = stats::corr_t_test(row.corr.r, row.corr.n);
          }

          if (options.permutation_iterations > 0) {
            const auto filter = GroupFilter::for_group(axis, category);
            const auto statistic =
                [&](std::span<const Demographics> demo)
                -> std::optional<double> {
              const auto perm_gts =
                  aggregate::ground_truths(sub, options.method, filter, demo);
              std::vector<double> px, py;
              for (const auto& [key, g] : perm_gts) {
                auto it = doc_slot.find(key.second);
                if (it == doc_slot.end()) continue;
                px.push_back(model_values[it->second]);
                py.push_back(g.value);
              }
              if (px.size() < 3) return std::nullopt;
              return stats::pearson_opt(px, py);
            };
            const auto perm = stats::permutation_test(
                sub, axis, statistic, options.permutation_iterations,
                options.rng, "perm/" + task, options.threads);
            row.permutation_p = perm.p;
            double mean = 0.0;
            for (double v : perm.null_distribution) mean += v;
            row.permutation_null_mean =
                mean / static_cast<double>(perm.null_distribution.size());
          }
          result.correlations.push_back(std::move(row));
        }

        // Pairwise dependent-correlation differences.
        for (std::size_t i = 0; i < categories.size(); ++i) {
          for (std::size_t j = i + 1; j < categories.size(); ++j) {
            const auto& g1 = group_gt[categories[i]];
            const auto& g2 = group_gt[categories[j]];
            std::vector<double> pm, p1, p2;
            for (const auto& [doc, v1] : g1) {
              auto it = g2.find(doc);
              if (it == g2.end()) continue;
              pm.push_back(model_values[doc_slot.at(doc)]);
              p1.push_back(v1);
              p2.push_back(it->second);
            }
            if (pm.size() < 4) {
              result.skipped.push_back(
                  "rq1: pair " + categories[i] + "-" + categories[j] +
                  " unavailable in " + dataset.name() + "/" + model + " (" +
                  std::to_string(pm.size()) + " shared documents)");
              continue;
            }
            const auto r1 = stats::pearson_opt(pm, p1);
            const auto r2 = stats::pearson_opt(pm, p2);
            const auto r23 = stats::pearson_opt(p1, p2);
            if (!r1 || !r2 || !r23) {
              result.skipped.push_back("rq1: pair " + categories[i] + "-" +
                                       categories[j] + " in " +
                                       dataset.name() + "/" + model +
                                       " has a degenerate correlation");
              continue;
            }
            DeltaRow row;
            row.dataset = dataset.name();
            row.model = model;
            row.method = options.method;
            row.axis = axis;
            row.group1 = categories[i];
            row.group2 = categories[j];
            row.r1 = *r1;
            row.r2 = *r2;
            row.delta = *r1 - *r2;
            row.n = static_cast<int>(pm.size());
            const auto steiger = stats::steiger_z(
                std::clamp(*r1, -0.999999, 0.999999),
                std::clamp(*r2, -0.999999, 0.999999),
                std::clamp(*r23, -0.999999, 0.999999), row.n);
            row.z = steiger.z;
            row.p_raw = steiger.p;

            if (options.bootstrap_samples > 0) {
              PairResampler resampler;
              resampler.cardinality = cardinality;
              resampler.method = options.method;
              resampler.model_by_doc = model_values;
              for (const auto& r : sub.records()) {
                auto it = doc_slot.find(r.doc_id);
                if (it == doc_slot.end()) continue;
                int group = -1;
                if (in_group(r.demographics, axis, categories[i])) group = 0;
                else if (in_group(r.demographics, axis, categories[j])) group = 1;
                if (group < 0) continue;
                resampler.unit_doc.push_back(it->second);
                resampler.unit_group.push_back(static_cast<char>(group));
                resampler.unit_label.push_back(r.label);
              }
              try {
                const auto ci = stats::bootstrap_ci(
                    [&](std::span<const std::size_t> idx) {
                      return resampler.delta(idx);
                    },
                    resampler.units(), options.bootstrap_samples, options.rng,
                    "rq1d/" + dataset.name() + "/" + model + "/" +
                        std::string(to_string(axis)) + "/" + categories[i] +
                        "-" + categories[j],
                    options.threads);
                row.ci = {ci.lo, ci.hi};
              } catch (const DegenerateBootstrapError&) {
                // Point estimates stand; only the resampled interval is
                // unavailable for this thinly-supported pair.
                result.skipped.push_back(
                    "rq1: pair " + categories[i] + "-" + categories[j] +
                    " in " + dataset.name() + "/" + model +
                    ": delta bootstrap degenerate, no CI");
              }
            }
            family.push_back(std::move(row));
          }
        }
      }

      // Holm correction within the dataset x model family.
      std::vector<double> raw;
      raw.reserve(family.size());
      for (const auto& row : family) raw.push_back(row.p_raw);
      const auto adjusted = stats::holm_adjust(raw);
      for (std::size_t k = 0; k < family.size(); ++k) {
        family[k].p_holm = adjusted[k];
        family[k].stars = delta_stars(adjusted[k]);
        result.deltas.push_back(std::move(family[k]));
      }
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// RQ2
// ---------------------------------------------------------------------------

std::vector<Rq2Result> run_rq2(const AnnotationStore& store,
                               const ModelLabelStore& model_labels,
                               const AuditOptions& options) {
  std::vector<Rq2Result> results;
  for (const auto& model : model_labels.model_ids()) {
    Rq2Result result;
    result.model_id = model;
    const auto rows = confounders::build_rows(store, model_labels, model,
                                              &result.build_report);
    if (rows.empty())
      throw NoSupportError("rq2: no confounder rows for model " + model);
    auto design = confounders::to_design(rows);
    confounders::standardize(design);

    std::vector<std::string> demographic_columns;
    std::vector<std::string> confounder_columns;
    for (std::size_t j = 0; j < design.columns.size(); ++j) {
      if (design.kinds[j] == confounders::ColumnKind::continuous)
        confounder_columns.push_back(design.columns[j]);
      else
        demographic_columns.push_back(design.columns[j]);
    }
    result.model1 = regression::fit_logistic(design, demographic_columns);
    std::vector<std::string> all_columns = demographic_columns;
    all_columns.insert(all_columns.end(), confounder_columns.begin(),
                       confounder_columns.end());
    result.model2 = regression::fit_logistic(design, all_columns);
    results.push_back(std::move(result));
  }
  return results;
}

// ---------------------------------------------------------------------------
// JSON round-trip
// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

json corr_to_json(const stats::CorrelationResult& c) {
  json j = {{"r", c.r}, {"n", c.n}};
  if (c.t_test) {
    j["t"] = c.t_test->t;
    j["p"] = c.t_test->p;
    j["df"] = c.t_test->df;
  }
  if (c.ci) {
    j["ci_lo"] = c.ci->first;
    j["ci_hi"] = c.ci->second;
  }
  return j;
}

stats::CorrelationResult corr_from_json(const json& j) {
  stats::CorrelationResult c;
  c.r = j.at("r").get<double>();
  c.n = j.at("n").get<int>();
  if (j.contains("t")) {
    stats::TTest t;
    t.t = j.at("t").get<double>();
    t.p = j.at("p").get<double>();
    t.df = j.at("df").get<int>();
    c.t_test = t;
  }
  if (j.contains("ci_lo"))
    c.ci = {j.at("ci_lo").get<double>(), j.at("ci_hi").get<double>()};
  return c;
}

json summary_to_json(const regression::RegressionSummary& s) {
  json coefficients = json::array();
  for (const auto& c : s.coefficients)
    coefficients.push_back({{"name", c.name},
                            {"estimate", c.estimate},
                            {"std_error", c.std_error},
                            {"z", c.z},
                            {"p", c.p},
                            {"stars", c.stars}});
  return {{"coefficients", coefficients},
          {"log_likelihood", s.log_likelihood},
          {"null_log_likelihood", s.null_log_likelihood},
          {"pseudo_r2", s.pseudo_r2},
          {"n_obs", s.n_obs},
          {"converged", s.converged}};
}

regression::RegressionSummary summary_from_json(const json& j) {
  regression::RegressionSummary s;
  for (const auto& c : j.at("coefficients")) {
    regression::Coefficient coefficient;
    coefficient.name = c.at("name").get<std::string>();
    coefficient.estimate = c.at("estimate").get<double>();
    coefficient.std_error = c.at("std_error").get<double>();
    coefficient.z = c.at("z").get<double>();
    coefficient.p = c.at("p").get<double>();
    coefficient.stars = c.at("stars").get<int>();
    s.coefficients.push_back(std::move(coefficient));
  }
  s.log_likelihood = j.at("log_likelihood").get<double>();
  s.null_log_likelihood = j.at("null_log_likelihood").get<double>();
  s.pseudo_r2 = j.at("pseudo_r2").get<double>();
  s.n_obs = j.at("n_obs").get<std::size_t>();
  s.converged = j.at("converged").get<bool>();
  return s;
}

}  // namespace

std::string AuditReport::to_json_string() const {
  json j;
  j["rq0"] = json::array();
  for (const auto& row : rq0) {
    json r = {{"dataset", row.dataset},
              {"model", row.model},
              {"method", std::string(aggregate::to_string(row.method))},
              {"corr", corr_to_json(row.corr)},
              {"loo_mean", row.loo_mean},
              {"loo_annotators", row.loo_annotators}};
    if (row.loo_ci) {
      r["loo_ci_lo"] = row.loo_ci->first;
      r["loo_ci_hi"] = row.loo_ci->second;
    }
    j["rq0"].push_back(std::move(r));
  }
  j["rq1_correlations"] = json::array();
  for (const auto& row : rq1.correlations) {
    json r = {{"dataset", row.dataset},
              {"model", row.model},
              {"method", std::string(aggregate::to_string(row.method))},
              {"axis", std::string(to_string(row.axis))},
              {"group", row.group},
              {"corr", corr_to_json(row.corr)}};
    if (row.permutation_p) r["permutation_p"] = *row.permutation_p;
    if (row.permutation_null_mean)
      r["permutation_null_mean"] = *row.permutation_null_mean;
    j["rq1_correlations"].push_back(std::move(r));
  }
  j["rq1_deltas"] = json::array();
  for (const auto& row : rq1.deltas) {
    json r = {{"dataset", row.dataset},
              {"model", row.model},
              {"method", std::string(aggregate::to_string(row.method))},
              {"axis", std::string(to_string(row.axis))},
              {"group1", row.group1},
              {"group2", row.group2},
              {"r1", row.r1},
              {"r2", row.r2},
              {"delta", row.delta},
              {"z", row.z},
              {"p_raw", row.p_raw},
              {"p_holm", row.p_holm},
              {"n", row.n},
              {"stars", row.stars}};
    if (row.ci) {
      r["ci_lo"] = row.ci->first;
      r["ci_hi"] = row.ci->second;
    }
    j["rq1_deltas"].push_back(std::move(r));
  }
  j["rq1_skipped"] = rq1.skipped;
  j["rq2"] = json::array();
  for (const auto& result : rq2) {
    j["rq2"].push_back(
        {{"model_id", result.model_id},
         {"model1", summary_to_json(result.model1)},
         {"model2", summary_to_json(result.model2)},
         {"rows_built", result.build_report.rows_built},
         {"annotations_seen", result.build_report.annotations_seen},
         {"dropped_no_model_label", result.build_report.dropped_no_model_label},
         {"dropped_missing_gender", result.build_report.dropped_missing_gender},
         {"dropped_missing_ethnicity",
          result.build_report.dropped_missing_ethnicity}});
  }
  return j.dump(2);
}

AuditReport AuditReport::from_json_string(const std::string& text) {
  const json j = json::parse(text);
  AuditReport report;
  for (const auto& r : j.at("rq0")) {
    Rq0Row row;
    row.dataset = r.at("dataset").get<std::string>();
    row.model = r.at("model").get<std::string>();
    row.method = aggregate::parse_method(r.at("method").get<std::string>());
    row.corr = corr_from_json(r.at("corr"));
    row.loo_mean = r.at("loo_mean").get<double>();
    row.loo_annotators = r.at("loo_annotators").get<int>();
    if (r.contains("loo_ci_lo"))
      row.loo_ci = {r.at("loo_ci_lo").get<double>(),
                    r.at("loo_ci_hi").get<double>()};
    report.rq0.push_back(std::move(row));
  }
  for (const auto& r : j.at("rq1_correlations")) {
    Rq1CorrRow row;
    row.dataset = r.at("dataset").get<std::string>();
    row.model = r.at("model").get<std::string>();
    row.method = aggregate::parse_method(r.at("method").get<std::string>());
    row.axis = parse_axis(r.at("axis").get<std::string>());
    row.group = r.at("group").get<std::string>();
    row.corr = corr_from_json(r.at("corr"));
    if (r.contains("permutation_p"))
      row.permutation_p = r.at("permutation_p").get<double>();
    if (r.contains("permutation_null_mean"))
      row.permutation_null_mean = r.at("permutation_null_mean").get<double>();
    report.rq1.correlations.push_back(std::move(row));
  }
  for (const auto& r : j.at("rq1_deltas")) {
    DeltaRow row;
    row.dataset = r.at("dataset").get<std::string>();
    row.model = r.at("model").get<std::string>();
    row.method = aggregate::parse_method(r.at("method").get<std::string>());
    row.axis = parse_axis(r.at("axis").get<std::string>());
    row.group1 = r.at("group1").get<std::string>();
    row.group2 = r.at("group2").get<std::string>();
    row.r1 = r.at("r1").get<double>();
    row.r2 = r.at("r2").get<double>();
    row.delta = r.at("delta").get<double>();
    row.z = r.at("z").get<double>();
    row.p_raw = r.at("p_raw").get<double>();
    row.p_holm = r.at("p_holm").get<double>();
    row.n = r.at("n").get<int>();
    row.stars = r.at("stars").get<int>();
    if (r.contains("ci_lo"))
      row.ci = {r.at("ci_lo").get<double>(), r.at("ci_hi").get<double>()};
    report.rq1.deltas.push_back(std::move(row));
  }
  report.rq1.skipped = j.at("rq1_skipped").get<std::vector<std::string>>();
  for (const auto& r : j.at("rq2")) {
    Rq2Result result;
    result.model_id = r.at("model_id").get<std::string>();
    result.model1 = summary_from_json(r.at("model1"));
    result.model2 = summary_from_json(r.at("model2"));
    result.build_report.rows_built = r.at("rows_built").get<std::size_t>();
    result.build_report.annotations_seen =
        r.at("annotations_seen").get<std::size_t>();
    result.build_report.dropped_no_model_label =
        r.at("dropped_no_model_label").get<std::size_t>();
    result.build_report.dropped_missing_gender =
        r.at("dropped_missing_gender").get<std::size_t>();
    result.build_report.dropped_missing_ethnicity =
        r.at("dropped_missing_ethnicity").get<std::size_t>();
    report.rq2.push_back(std::move(result));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Manifest and files
// ---------------------------------------------------------------------------

std::string hash_file_hex(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot hash " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buffer[8192];
  while (in.read(buffer, sizeof buffer) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buffer[i]);
      h *= 0x100000001b3ull;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

RunManifest make_manifest(const std::string& command, std::uint64_t seed,
                          const std::vector<std::filesystem::path>& inputs) {
  RunManifest manifest;
  manifest.command = command;
  manifest.tool_version = "0.1.0";
  manifest.master_seed = seed;
  for (const auto& path : inputs)
    manifest.input_hashes[path.filename().string()] = hash_file_hex(path);
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  manifest.timestamp = stamp;
  return manifest;
}

std::string RunManifest::to_json_string() const {
  json j = {{"command", command},
            {"tool_version", tool_version},
            {"master_seed", master_seed},
            {"input_hashes", input_hashes},
            {"timestamp", timestamp}};
  return j.dump(2);
}

namespace {

std::string stars_text(int stars) { return std::string(stars, '*'); }

std::string safe_filename(const std::string& name) {
  std::string out = name;
  for (char& c : out)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '.')
      c = '_';
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

void write_report(const AuditReport& report, const RunManifest& manifest,
                  const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);

  if (!report.rq0.empty()) {
    std::ostringstream out;
    out << "dataset\tmodel\tmethod\tr\tn\tt\tp\tci_lo\tci_hi\t"
           "loo_mean\tloo_ci_lo\tloo_ci_hi\tloo_annotators\n";
    for (const auto& row : report.rq0) {
      out << row.dataset << '\t' << row.model << '\t'
          << aggregate::to_string(row.method) << '\t' << fmt(row.corr.r)
          << '\t' << row.corr.n << '\t'
          << (row.corr.t_test ? fmt(row.corr.t_test->t) : "") << '\t'
          << (row.corr.t_test ? fmt(row.corr.t_test->p, "%.4g") : "") << '\t'
          << (row.corr.ci ? fmt(row.corr.ci->first) : "") << '\t'
          << (row.corr.ci ? fmt(row.corr.ci->second) : "") << '\t'
          << fmt(row.loo_mean) << '\t'
          << (row.loo_ci ? fmt(row.loo_ci->first) : "") << '\t'
          << (row.loo_ci ? fmt(row.loo_ci->second) : "") << '\t'
          << row.loo_annotators << '\n';
    }
    write_file(out_dir / "rq0.tsv", out.str());
  }

  if (!report.rq1.correlations.empty()) {
    std::ostringstream out;
    out << "dataset\tmodel\tmethod\taxis\tgroup\tr\tn\tt\tp\tci_lo\tci_hi\t"
           "permutation_p\tpermutation_null_mean\n";
    for (const auto& row : report.rq1.correlations) {
      out << row.dataset << '\t' << row.model << '\t'
          << aggregate::to_string(row.method) << '\t' << to_string(row.axis)
          << '\t' << row.group << '\t' << fmt(row.corr.r) << '\t'
          << row.corr.n << '\t'
          << (row.corr.t_test ? fmt(row.corr.t_test->t) : "") << '\t'
          << (row.corr.t_test ? fmt(row.corr.t_test->p, "%.4g") : "") << '\t'
          << (row.corr.ci ? fmt(row.corr.ci->first) : "") << '\t'
          << (row.corr.ci ? fmt(row.corr.ci->second) : "") << '\t'
          << (row.permutation_p ? fmt(*row.permutation_p, "%.4g") : "") << '\t'
          << (row.permutation_null_mean ? fmt(*row.permutation_null_mean)
                                        : "")
          << '\n';
    }
    write_file(out_dir / "rq1_correlations.tsv", out.str());
  }

  if (!report.rq1.deltas.empty()) {
    std::ostringstream out;
    out << "dataset\tmodel\tmethod\taxis\tgroup1\tgroup2\tr1\tr2\tdelta\t"
           "z\tp_raw\tp_holm\tstars\tci_lo\tci_hi\tn\n";
    for (const auto& row : report.rq1.deltas) {
      out << row.dataset << '\t' << row.model << '\t'
          << aggregate::to_string(row.method) << '\t' << to_string(row.axis)
          << '\t' << row.group1 << '\t' << row.group2 << '\t' << fmt(row.r1)
          << '\t' << fmt(row.r2) << '\t' << fmt(row.delta) << '\t'
          << fmt(row.z) << '\t' << fmt(row.p_raw, "%.4g") << '\t'
          << fmt(row.p_holm, "%.4g") << '\t' << stars_text(row.stars) << '\t'
          << (row.ci ? fmt(row.ci->first) : "") << '\t'
          << (row.ci ? fmt(row.ci->second) : "") << '\t' << row.n << '\n';
    }
    write_file(out_dir / "rq1_deltas.tsv", out.str());
  }

  for (const auto& result : report.rq2) {
    // One table per model, mirroring the two-specification layout.
    std::map<std::string, std::pair<const regression::Coefficient*,
                                    const regression::Coefficient*>> merged;
    std::vector<std::string> order;
    for (const auto& c : result.model2.coefficients) {
      order.push_back(c.name);
      merged[c.name].second = &c;
    }
    for (const auto& c : result.model1.coefficients) {
      if (!merged.count(c.name)) order.insert(order.end() - 1, c.name);
      merged[c.name].first = &c;
    }
    std::ostringstream out;
    out << "regressor\tmodel1\tmodel1_stars\tmodel2\tmodel2_stars\n";
    for (const auto& name : order) {
      const auto& [m1, m2] = merged[name];
      out << name << '\t' << (m1 ? fmt(m1->estimate, "%.4f") : "") << '\t'
          << (m1 ? stars_text(m1->stars) : "") << '\t'
          << (m2 ? fmt(m2->estimate, "%.4f") : "") << '\t'
          << (m2 ? stars_text(m2->stars) : "") << '\n';
    }
    out << "observations\t" << result.model1.n_obs << "\t\t"
        << result.model2.n_obs << "\t\n";
    out << "pseudo_r2\t" << fmt(result.model1.pseudo_r2, "%.4f") << "\t\t"
        << fmt(result.model2.pseudo_r2, "%.4f") << "\t\n";
    write_file(out_dir / ("rq2_" + safe_filename(result.model_id) + ".tsv"),
               out.str());
  }

  write_file(out_dir / "report.json", report.to_json_string() + "\n");
  write_file(out_dir / "manifest.json", manifest.to_json_string() + "\n");
}

}  // namespace alignaudit::audit
