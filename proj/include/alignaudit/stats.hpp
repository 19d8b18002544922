#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "alignaudit/core.hpp"
#include "alignaudit/store.hpp"

namespace alignaudit::stats {

// ---------------------------------------------------------------------------
// Distribution helpers
// ---------------------------------------------------------------------------

double normal_cdf(double z);
double normal_two_sided_p(double z);
// Two-sided p for a Student t statistic with df degrees of freedom.
double student_t_two_sided_p(double t, int df);
// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double incomplete_beta(double a, double b, double x);

// ---------------------------------------------------------------------------
// Correlation
// ---------------------------------------------------------------------------

// Product-moment correlation; throws UndefinedCorrelationError on zero
// variance or fewer than 2 pairs.
double pearson(std::span<const double> x, std::span<const double> y);
// Same, but nullopt instead of throwing (for resampling hot loops).
std::optional<double> pearson_opt(std::span<const double> x,
                                  std::span<const double> y) noexcept;

struct TTest {
  double t = 0.0;
  double p = 1.0;
  int df = 0;
};

// t = r * sqrt(n-2) / sqrt(1-r^2), two-sided p from Student t with n-2 df.
// |r| = 1 yields an infinite statistic and p = 0.
TTest corr_t_test(double r, int n);

double fisher_z(double r);  // artanh(r); domain error for |r| >= 1

struct SteigerResult {
  double z = 0.0;
  double p = 1.0;
};

// Dependent-correlation test for r12 vs r13 sharing variable 1, pooled-mean
// variant: rbar = (r12+r13)/2, psi = r23(1-2rbar^2) - rbar^2/2 (1-2rbar^2-r23^2),
// sbar = psi/(1-rbar^2)^2, Z = (artanh r12 - artanh r13) sqrt((n-3)/(2-2 sbar)).
SteigerResult steiger_z(double r12, double r13, double r23, int n);

// Holm-Bonferroni step-down adjustment; output in the input order.
std::vector<double> holm_adjust(std::span<const double> p_values);

struct CorrelationResult {
  double r = 0.0;
  int n = 0;
  std::optional<TTest> t_test;                   // populated when n >= 3
  std::optional<std::pair<double, double>> ci;   // 95% bootstrap, n >= 3
};

// ---------------------------------------------------------------------------
// Resampling engines
// ---------------------------------------------------------------------------

// Statistic over a resample given as unit indices (with repetition).
using ResampleStatistic =
    std::function<std::optional<double>(std::span<const std::size_t>)>;

struct BootstrapCi {
  double lo = 0.0;
  double hi = 0.0;
  int redraws = 0;  // resamples discarded because the statistic was undefined
};

// B resamples with replacement over n_units units; percentile 2.5/97.5 CI.
// Undefined resamples are redrawn within their substream (at most 10 attempts
// per slot, 10*B overall) so results are independent of thread count.
BootstrapCi bootstrap_ci(const ResampleStatistic& statistic,
                         std::size_t n_units, int b, const RngSpec& rng,
                         std::string_view task, int threads = 1);

// Convenience: paired-sample correlation with t-test and a bootstrap CI over
// the pairs themselves.
CorrelationResult correlate(std::span<const double> x,
                            std::span<const double> y, int b,
                            const RngSpec& rng, std::string_view task,
                            int threads = 1);

// ---------------------------------------------------------------------------
// Permutation test
// ---------------------------------------------------------------------------

// Statistic over per-record demographics aligned with store.records().
using PermutationStatistic =
    std::function<std::optional<double>(std::span<const Demographics>)>;

struct PermutationResult {
  double observed = 0.0;
  std::vector<double> null_distribution;
  double p = 1.0;  // (1 + #{null >= observed}) / (N + 1)
  int redraws = 0;
};

// Shuffles the axis attribute across annotators (each annotator keeps one
// coherent identity; records inherit their annotator's permuted attribute).
// Permutations where the statistic is undefined (e.g. an empty group) are
// redrawn within their substream. Requires >= 2 groups present on the axis.
PermutationResult permutation_test(const AnnotationStore& store, Axis axis,
                                   const PermutationStatistic& statistic,
                                   int n_iterations, const RngSpec& rng,
                                   std::string_view task, int threads = 1);

}  // namespace alignaudit::stats
