// Acceptance gate: runs every criterion at its stated tolerance and prints
// one pass/fail line each. Exit code is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "alignaudit/aggregate.hpp"
#include "alignaudit/audit.hpp"
#include "alignaudit/confounders.hpp"
#include "alignaudit/core.hpp"
#include "alignaudit/regression.hpp"
#include "alignaudit/stats.hpp"
#include "alignaudit/store.hpp"
#include "alignaudit/synth.hpp"

using namespace alignaudit;

namespace {

struct Check {
  std::string label;
  bool ok;
  std::string detail;
};

std::vector<Check> g_checks;

void expect(bool ok, const std::string& label, const std::string& detail) {
  g_checks.push_back({label, ok, detail});
}

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

// ---------------------------------------------------------------------------
// Criterion 1: statistical-core oracle suite
// ---------------------------------------------------------------------------

// Formula transcriptions independent of src/stats.cpp.
double oracle_artanh(double r) { return 0.5 * std::log((1 + r) / (1 - r)); }

double oracle_steiger(double r12, double r13, double r23, int n) {
  const double rm = (r12 + r13) / 2.0;
  const double psi = r23 * (1 - 2 * rm * rm) -
                     (rm * rm / 2.0) * (1 - 2 * rm * rm - r23 * r23);
  const double s = psi / ((1 - rm * rm) * (1 - rm * rm));
  return (oracle_artanh(r12) - oracle_artanh(r13)) *
         std::sqrt((n - 3) / (2.0 - 2.0 * s));
}

void criterion_1() {
  const std::vector<double> x = {1, 2, 3};
  const double r_hand = stats::pearson(x, std::vector<double>{1, 2, 2});
  expect(near(r_hand, 0.8660, 1e-4), "pearson hand value",
         "r([1,2,3],[1,2,2]) = " + std::to_string(r_hand));
  expect(near(stats::pearson(x, x), 1.0, 1e-12), "pearson identity", "");
  expect(near(stats::pearson(x, std::vector<double>{3, 2, 1}), -1.0, 1e-12),
         "pearson reversal", "");

  const auto t_null = stats::corr_t_test(0.0, 37);
  expect(near(t_null.t, 0.0, 1e-12) && near(t_null.p, 1.0, 1e-12),
         "t-test null value", "");
  const auto t_small = stats::corr_t_test(r_hand, 3);
  expect(near(t_small.t, 1.732, 1e-4) && t_small.df == 1,
         "t-test plug-in formula", "t = " + std::to_string(t_small.t));
  const auto t_sig = stats::corr_t_test(0.5, 103);
  expect(t_sig.p < 0.05 && t_sig.t > 1.9837, "t-test vs table oracle",
         "t = " + std::to_string(t_sig.t) + ", p = " + std::to_string(t_sig.p));

  expect(near(stats::fisher_z(0.0), 0.0, 1e-12), "fisher zero", "");
  expect(near(stats::fisher_z(0.5), 0.5493, 1e-4), "fisher closed form",
         std::to_string(stats::fisher_z(0.5)));
  expect(near(stats::fisher_z(-0.7), -stats::fisher_z(0.7), 1e-14),
         "fisher odd symmetry", "");

  const auto holm1 = stats::holm_adjust(std::vector<double>{0.5});
  const auto holm3 = stats::holm_adjust(std::vector<double>{0.04, 0.01, 0.03});
  expect(near(holm1[0], 0.5, 1e-12), "holm m=1", "");
  expect(near(holm3[0], 0.06, 1e-12) && near(holm3[1], 0.03, 1e-12) &&
             near(holm3[2], 0.06, 1e-12),
         "holm step-down hand case", "");

  const auto sym_a = stats::steiger_z(0.6, 0.4, 0.5, 103);
  const auto sym_b = stats::steiger_z(0.4, 0.6, 0.5, 103);
  expect(near(sym_a.z, -sym_b.z, 1e-12), "steiger antisymmetry", "");
  const auto equal = stats::steiger_z(0.45, 0.45, 0.2, 60);
  expect(near(equal.z, 0.0, 1e-12) && near(equal.p, 1.0, 1e-12),
         "steiger null at equal correlations", "");
  const double oracle_z = oracle_steiger(0.6, 0.4, 0.5, 103);
  expect(near(sym_a.z, oracle_z, 1e-9) && near(sym_a.z, 2.4377, 1e-3),
         "steiger derived case vs independent formula",
         "z = " + std::to_string(sym_a.z) + ", oracle = " +
             std::to_string(oracle_z));
}

// ---------------------------------------------------------------------------
// Criterion 2: Monte Carlo calibration
// ---------------------------------------------------------------------------

double ks_uniform_p(std::vector<double> sample) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = std::clamp(sample[i], 0.0, 1.0);
    d = std::max(d, (i + 1) / n - f);
    d = std::max(d, f - i / n);
  }
  const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
  double p = 0.0;
  for (int j = 1; j <= 100; ++j)
    p += 2.0 * (j % 2 == 1 ? 1.0 : -1.0) * std::exp(-2.0 * j * j * lambda *
                                                    lambda);
  return std::clamp(p, 0.0, 1.0);
}

double pearson_acc(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    syy += y[i] * y[i];
    sxy += x[i] * y[i];
  }
  const double cov = sxy - sx * sy / n;
  const double vx = sxx - sx * sx / n;
  const double vy = syy - sy * sy / n;
  return cov / std::sqrt(vx * vy);
}

void criterion_2() {
  // (a) Steiger null rejection rate over 10,000 trivariate-normal draws.
  {
    // Cholesky of [[1, .4, .4], [.4, 1, .5], [.4, .5, 1]].
    const double l21 = 0.4, l22 = std::sqrt(1 - 0.16);
    const double l31 = 0.4, l32 = (0.5 - 0.16) / l22;
    const double l33 = std::sqrt(1 - l31 * l31 - l32 * l32);
    const int sims = 10000, n = 200;
    int rejections = 0;
    std::vector<double> v1(n), v2(n), v3(n);
    for (int s = 0; s < sims; ++s) {
      RngStream stream(RngSpec{920}, "acc/steiger_null", s);
      for (int i = 0; i < n; ++i) {
        const double z1 = stream.next_normal();
        const double z2 = stream.next_normal();
        const double z3 = stream.next_normal();
        v1[i] = z1;
        v2[i] = l21 * z1 + l22 * z2;
        v3[i] = l31 * z1 + l32 * z2 + l33 * z3;
      }
      const double r12 = pearson_acc(v1, v2);
      const double r13 = pearson_acc(v1, v3);
      const double r23 = pearson_acc(v2, v3);
      if (stats::steiger_z(r12, r13, r23, n).p < 0.05) ++rejections;
    }
    const double rate = rejections / static_cast<double>(sims);
    expect(rate >= 0.04 && rate <= 0.06, "steiger null rejection rate",
           "rate = " + std::to_string(rate));
  }

  // (b) Permutation p-values uniform under a demographics-free null.
  {
    const int runs = 300, iterations = 199;
    std::vector<double> pvalues;
    pvalues.reserve(runs);
    for (int run = 0; run < runs; ++run) {
      synth::SynthConfig config;
      config.n_documents = 50;
      config.n_annotators = 48;
      config.labels_per_document = 5;
      config.doc_spread = 1.2;
      config.annotator_bias_spread = 0.3;
      config.label_noise_sd = 0.9;
      const auto population =
          synth::generate(config, RngSpec{3000 + static_cast<std::uint64_t>(run)});
      const auto& store = population.store;
      const auto& models = population.model_labels;
      const auto statistic =
          [&](std::span<const Demographics> demo) -> std::optional<double> {
        aggregate::GroupFilter filter;
        filter.gender = Gender::man;
        const auto gts = aggregate::ground_truths(
            store, aggregate::Method::rounded_average, filter, demo);
        std::vector<double> x, y;
        for (const auto& [key, gt] : gts) {
          const auto label =
              models.label_for(gt.dataset, gt.doc_id, "synth-model");
          if (!label) continue;
          x.push_back(*label);
          y.push_back(gt.value);
        }
        if (x.size() < 3) return std::nullopt;
        return stats::pearson_opt(x, y);
      };
      const auto result = stats::permutation_test(
          store, Axis::gender, statistic, iterations,
          RngSpec{9000 + static_cast<std::uint64_t>(run)}, "acc/perm_null");
      pvalues.push_back(result.p);
    }
    const double ks_p = ks_uniform_p(pvalues);
    expect(ks_p > 0.01, "permutation p-values uniform under null",
           "KS p = " + std::to_string(ks_p));
  }

  // (c) Percentile bootstrap CI coverage for rho = 0.5, n = 200.
  {
    const int replications = 1000, n = 200, b = 1000;
    const double rho = 0.5;
    int covered = 0;
    std::vector<double> x(n), y(n);
    for (int rep = 0; rep < replications; ++rep) {
      RngStream stream(RngSpec{77}, "acc/coverage_data", rep);
      for (int i = 0; i < n; ++i) {
        const double shared = stream.next_normal();
        x[i] = shared;
        y[i] = rho * shared + std::sqrt(1 - rho * rho) * stream.next_normal();
      }
      const auto statistic =
          [&](std::span<const std::size_t> idx) -> std::optional<double> {
        double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
        for (std::size_t k : idx) {
          sx += x[k];
          sy += y[k];
          sxx += x[k] * x[k];
          syy += y[k] * y[k];
          sxy += x[k] * y[k];
        }
        const double m = static_cast<double>(idx.size());
        const double cov = sxy - sx * sy / m;
        const double vx = sxx - sx * sx / m;
        const double vy = syy - sy * sy / m;
        if (vx <= 0 || vy <= 0) return std::nullopt;
        return cov / std::sqrt(vx * vy);
      };
      const auto ci = stats::bootstrap_ci(
          statistic, n, b, RngSpec{78},
          "acc/coverage_boot/" + std::to_string(rep));
      if (ci.lo <= rho && rho <= ci.hi) ++covered;
    }
    const double coverage = covered / static_cast<double>(replications);
    expect(coverage >= 0.93 && coverage <= 0.97,
           "bootstrap CI coverage at rho = 0.5",
           "coverage = " + std::to_string(coverage));
  }
}

// ---------------------------------------------------------------------------
// Criterion 3: regression oracle
// ---------------------------------------------------------------------------

double acc_ll(const std::vector<double>& x, std::size_t n, std::size_t p,
              const std::vector<double>& y, const std::vector<double>& beta) {
  double ll = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double eta = 0.0;
    for (std::size_t j = 0; j < p; ++j) eta += x[i * p + j] * beta[j];
    ll += y[i] * eta - std::log1p(std::exp(eta));
  }
  return ll;
}

std::vector<double> acc_grid_fit(const std::vector<double>& x, std::size_t n,
                                 std::size_t p, const std::vector<double>& y) {
  // Coordinate-wise golden-section ascent; independent of the IRLS path.
  std::vector<double> beta(p, 0.0);
  const double golden = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int sweep = 0; sweep < 500; ++sweep) {
    double moved = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      double lo = beta[j] - 4.0, hi = beta[j] + 4.0;
      const auto value = [&](double b) {
        std::vector<double> trial = beta;
        trial[j] = b;
        return acc_ll(x, n, p, y, trial);
      };
      double c = hi - golden * (hi - lo), d = lo + golden * (hi - lo);
      double fc = value(c), fd = value(d);
      for (int iter = 0; iter < 120; ++iter) {
        if (fc > fd) {
          hi = d;
          d = c;
          fd = fc;
          c = hi - golden * (hi - lo);
          fc = value(c);
        } else {
          lo = c;
          c = d;
          fc = fd;
          d = lo + golden * (hi - lo);
          fd = value(d);
        }
      }
      const double updated = (lo + hi) / 2.0;
      moved = std::max(moved, std::abs(updated - beta[j]));
      beta[j] = updated;
    }
    if (moved < 1e-11) break;
  }
  return beta;
}

void criterion_3() {
  // Intercept-only closed form.
  {
    std::vector<double> y(40, 1.0);
    for (int i = 0; i < 10; ++i) y[i] = 0.0;
    const auto fit = regression::fit_logistic({}, {}, y.size(), y, {});
    expect(near(fit.coefficients[0].estimate, std::log(3.0), 1e-10),
           "intercept-only closed form",
           "beta = " + std::to_string(fit.coefficients[0].estimate));
  }

  // 50-row synthetic designs vs the grid oracle.
  bool all_match = true;
  std::string worst;
  double worst_gap = 0.0;
  for (std::uint64_t seed : {401, 402, 403}) {
    const std::size_t n = 50, p = 3;
    std::vector<double> x, y;
    RngStream stream(RngSpec{seed}, "acc/reg_design", 0);
    const double beta_true[3] = {0.8, -1.2, 0.3};
    for (std::size_t i = 0; i < n; ++i) {
      double eta = 0.0;
      for (std::size_t j = 0; j < p; ++j) {
        const double value = j + 1 == p ? 1.0 : stream.next_normal();
        x.push_back(value);
        eta += value * beta_true[j];
      }
      y.push_back(stream.next_double() < 1.0 / (1.0 + std::exp(-eta)) ? 1.0
                                                                      : 0.0);
    }
    regression::RegressionSpec spec;
    spec.intercept = false;
    const auto fit = regression::fit_logistic({"x1", "x2", "const"}, x, n, y,
                                              spec);
    const auto oracle = acc_grid_fit(x, n, p, y);
    for (std::size_t j = 0; j < p; ++j) {
      const double gap = std::abs(fit.coefficients[j].estimate - oracle[j]);
      if (gap > worst_gap) {
        worst_gap = gap;
        worst = "seed " + std::to_string(seed) + " coef " + std::to_string(j);
      }
      if (gap > 1e-4) all_match = false;
    }
  }
  expect(all_match, "IRLS matches the likelihood-grid oracle within 1e-4",
         "max gap = " + std::to_string(worst_gap) + " at " + worst);

  // Analytic gradient vs central finite differences away from the optimum,
  // and score max-norm at the optimum.
  {
    const std::size_t n = 60, p = 3;
    std::vector<double> x, y;
    RngStream stream(RngSpec{404}, "acc/reg_grad", 0);
    for (std::size_t i = 0; i < n; ++i) {
      double eta = 0.0;
      const double beta_true[3] = {0.6, -0.5, 0.1};
      for (std::size_t j = 0; j < p; ++j) {
        const double value = j + 1 == p ? 1.0 : stream.next_normal();
        x.push_back(value);
        eta += value * beta_true[j];
      }
      y.push_back(stream.next_double() < 1.0 / (1.0 + std::exp(-eta)) ? 1.0
                                                                      : 0.0);
    }
    const auto analytic = [&](const std::vector<double>& beta) {
      std::vector<double> g(p, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        double eta = 0.0;
        for (std::size_t j = 0; j < p; ++j) eta += x[i * p + j] * beta[j];
        const double mu = 1.0 / (1.0 + std::exp(-eta));
        for (std::size_t j = 0; j < p; ++j)
          g[j] += x[i * p + j] * (y[i] - mu);
      }
      return g;
    };
    bool fd_ok = true;
    double worst_rel = 0.0;
    for (const std::vector<double> beta :
         {std::vector<double>{0, 0, 0}, std::vector<double>{0.4, -0.2, 0.3},
          std::vector<double>{-0.5, 0.8, -0.1}}) {
      const auto g = analytic(beta);
      for (std::size_t j = 0; j < p; ++j) {
        std::vector<double> plus = beta, minus = beta;
        const double h = 1e-5;
        plus[j] += h;
        minus[j] -= h;
        const double fd =
            (acc_ll(x, n, p, y, plus) - acc_ll(x, n, p, y, minus)) / (2 * h);
        const double rel = std::abs(fd - g[j]) / std::max(1.0, std::abs(fd));
        worst_rel = std::max(worst_rel, rel);
        if (rel >= 1e-5) fd_ok = false;
      }
    }
    expect(fd_ok, "analytic gradient matches central differences",
           "worst relative error = " + std::to_string(worst_rel));

    regression::RegressionSpec spec;
    spec.intercept = false;
    const auto fit = regression::fit_logistic({"x1", "x2", "const"}, x, n, y,
                                              spec);
    std::vector<double> beta_hat;
    for (const auto& c : fit.coefficients) beta_hat.push_back(c.estimate);
    const auto score = analytic(beta_hat);
    double max_norm = 0.0;
    for (double g : score) max_norm = std::max(max_norm, std::abs(g));
    expect(max_norm < 1e-6, "score max-norm at the optimum",
           "max |g| = " + std::to_string(max_norm));
  }
}

// ---------------------------------------------------------------------------
// Criterion 4: planted-bias recovery and null false-positive control
// ---------------------------------------------------------------------------

// The validity experiment needs a design that satisfies the audit's own
// assumptions: equal group marginals (so no group's ground truth is
// mechanically less noisy than another's) and a fresh annotator pool (panel
// reuse plants a run-level true correlation difference through the realized
// pool composition -- measured during development as z-overdispersion 1.13
// at a 200-annotator panel). The two arms differ only in the planted delta.
synth::SynthConfig recovery_config(bool planted) {
  synth::SynthConfig config;
  config.n_documents = 1000;
  config.n_annotators = 20000;
  config.labels_per_document = 20;  // 20,000 annotations
  config.doc_spread = 1.0;
  config.annotator_bias_spread = 0.0;
  config.model_noise_sd = 0.2;
  config.label_noise_sd = 0.45;
  config.gender_marginals = {{"man", 0.5}, {"woman", 0.5}};
  config.ethnicity_marginals = {
      {"asian", 0.25}, {"black", 0.25}, {"hispanic", 0.25}, {"white", 0.25}};
  if (planted) config.delta = {{"ethnicity=white", 0.1}};
  return config;
}

void criterion_4() {
  audit::AuditOptions options;
  options.bootstrap_samples = 0;  // Steiger + Holm carry the significance
  options.permutation_iterations = 0;

  const int power_runs = 100;
  int recovered = 0;
  for (int run = 0; run < power_runs; ++run) {
    const auto population = synth::generate(
        recovery_config(true), RngSpec{5000 + static_cast<std::uint64_t>(run)});
    const auto rq1 =
        audit::run_rq1(population.store, population.model_labels,
                       {Axis::gender, Axis::ethnicity}, options);
    for (const auto& row : rq1.deltas) {
      const bool is_pair = row.axis == Axis::ethnicity &&
                           row.group1 == "black" && row.group2 == "white";
      if (!is_pair) continue;
      // Planted: white more aligned, so delta r(black) - r(white) < 0.
      if (row.delta < 0 && row.p_holm < 0.05) ++recovered;
    }
  }
  const double power = recovered / static_cast<double>(power_runs);
  expect(power >= 0.95, "planted white-black gap recovered with Holm p < 0.05",
         "power = " + std::to_string(power));

  const int null_runs = 300;
  int false_positive_runs = 0;
  int significant_pairs = 0, total_pairs = 0;
  for (int run = 0; run < null_runs; ++run) {
    const auto population = synth::generate(
        recovery_config(false), RngSpec{6000 + static_cast<std::uint64_t>(run)});
    const auto rq1 =
        audit::run_rq1(population.store, population.model_labels,
                       {Axis::gender, Axis::ethnicity}, options);
    bool any = false;
    for (const auto& row : rq1.deltas) {
      ++total_pairs;
      if (row.p_holm < 0.05) {
        any = true;
        ++significant_pairs;
      }
    }
    if (any) ++false_positive_runs;
  }
  const double fwer = false_positive_runs / static_cast<double>(null_runs);
  expect(fwer <= 0.05, "null population family-wise false-positive rate",
         "fwer = " + std::to_string(fwer) + " (" +
             std::to_string(false_positive_runs) + "/" +
             std::to_string(null_runs) + " runs, significant pairs " +
             std::to_string(significant_pairs) + "/" +
             std::to_string(total_pairs) + ")");
}

// ---------------------------------------------------------------------------
// Criterion 5: confounder mechanism
// ---------------------------------------------------------------------------

void criterion_5() {
  const int runs = 50;
  std::vector<double> ratios;
  ratios.reserve(runs);
  audit::AuditOptions options;
  for (int run = 0; run < runs; ++run) {
    synth::SynthConfig config;
    config.n_documents = 400;
    config.n_annotators = 120;
    config.labels_per_document = 10;
    config.doc_spread = 1.0;
    config.annotator_bias_spread = 0.2;
    config.model_bias = 0.8;  // the model leans offensive
    config.model_noise_sd = 0.5;
    config.label_noise_sd = 0.8;
    // Confounder-only: no delta, but annotator sensitivity differs by group.
    config.group_bias = {{"ethnicity=black", -0.6},
                         {"ethnicity=asian", 0.4},
                         {"ethnicity=hispanic", -0.3},
                         {"gender=woman", 0.5}};
    config.gender_marginals = {{"man", 0.5}, {"woman", 0.5}};
    config.ethnicity_marginals = {
        {"asian", 0.15}, {"black", 0.3}, {"hispanic", 0.15}, {"white", 0.4}};
    const auto population = synth::generate(
        config, RngSpec{7000 + static_cast<std::uint64_t>(run)});
    const auto results =
        audit::run_rq2(population.store, population.model_labels, options);
    const auto mean_demo_beta =
        [](const regression::RegressionSummary& summary) {
          double sum = 0.0;
          int count = 0;
          for (const auto& c : summary.coefficients) {
            if (c.name.rfind("gender=", 0) == 0 ||
                c.name.rfind("ethnicity=", 0) == 0) {
              sum += std::abs(c.estimate);
              ++count;
            }
          }
          return sum / count;
        };
    ratios.push_back(mean_demo_beta(results[0].model2) /
                     mean_demo_beta(results[0].model1));
  }
  std::sort(ratios.begin(), ratios.end());
  const double median = ratios[ratios.size() / 2];
  expect(median <= 0.5,
         "confounder model halves the demographic coefficients",
         "median |beta2|/|beta1| = " + std::to_string(median));
}

// ---------------------------------------------------------------------------
// Criterion 6: determinism
// ---------------------------------------------------------------------------

void criterion_6() {
  synth::SynthConfig config;
  config.n_documents = 80;
  config.n_annotators = 30;
  config.labels_per_document = 5;
  config.annotator_bias_spread = 0.3;
  config.label_noise_sd = 0.7;
  config.delta = {{"ethnicity=white", 0.2}};

  const auto run_pipeline = [&](int threads) {
    const auto population = synth::generate(config, RngSpec{31337});
    audit::AuditOptions options;
    options.bootstrap_samples = 300;
    options.permutation_iterations = 100;
    options.threads = threads;
    options.rng = RngSpec{4242};
    audit::AuditReport report;
    report.rq0 =
        audit::run_rq0(population.store, population.model_labels, options);
    report.rq1 = audit::run_rq1(population.store, population.model_labels,
                                {Axis::gender, Axis::ethnicity}, options);
    report.rq2 =
        audit::run_rq2(population.store, population.model_labels, options);
    return report.to_json_string();
  };

  const std::string first = run_pipeline(1);
  const std::string second = run_pipeline(1);
  expect(first == second, "full pipeline byte-identical across reruns",
         first == second ? "" : "reports differ");
  const std::string threaded = run_pipeline(4);
  expect(first == threaded, "full pipeline independent of thread count",
         first == threaded ? "" : "reports differ");
}

int run_criterion(int number, const std::string& name,
                  const std::function<void()>& body) {
  const auto start = std::chrono::steady_clock::now();
  g_checks.clear();
  std::string error;
  try {
    body();
  } catch (const std::exception& e) {
    error = e.what();
  }
  int failed = error.empty() ? 0 : 1;
  for (const auto& check : g_checks)
    if (!check.ok) ++failed;
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  std::printf("%s criterion %d (%s) [%.1fs]\n", failed ? "FAIL" : "PASS",
              number, name.c_str(), seconds);
  for (const auto& check : g_checks) {
    if (!check.ok || !check.detail.empty())
      std::printf("       %s %s%s%s\n", check.ok ? "ok:" : "FAILED:",
                  check.label.c_str(), check.detail.empty() ? "" : " -- ",
                  check.detail.c_str());
  }
  if (!error.empty()) std::printf("       exception: %s\n", error.c_str());
  return failed ? 1 : 0;
}

}  // namespace

int main() {
  int failures = 0;
  failures += run_criterion(1, "statistical-core oracle suite", criterion_1);
  failures += run_criterion(2, "Monte Carlo calibration", criterion_2);
  failures += run_criterion(3, "regression oracle", criterion_3);
  failures += run_criterion(4, "planted-bias recovery", criterion_4);
  failures += run_criterion(5, "confounder mechanism", criterion_5);
  failures += run_criterion(6, "determinism", criterion_6);
  std::printf(
      "SKIP criterion 7 (paper-number replication) -- requires the five "
      "source datasets and the released model labels; run the CLI on the "
      "original corpora to evaluate it\n");
  if (failures == 0) std::printf("ALL ACCEPTANCE CRITERIA PASSED\n");
  return failures;
}
