#include "alignaudit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace alignaudit::stats {

// ---------------------------------------------------------------------------
// Distributions
// ---------------------------------------------------------------------------

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_two_sided_p(double z) {
  return std::erfc(std::abs(z) / std::sqrt(2.0));
}

namespace {

// Continued fraction for the incomplete beta (modified Lentz).
double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) -
                          std::lgamma(b) + a * std::log(x) +
                          b * std::log(1.0 - x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, int df) {
  if (df < 1) throw PreconditionError("t distribution needs df >= 1");
  if (std::isinf(t)) return 0.0;
  const double x = df / (df + t * t);
  return incomplete_beta(0.5 * df, 0.5, x);
}

// ---------------------------------------------------------------------------
// Correlation
// ---------------------------------------------------------------------------

std::optional<double> pearson_opt(std::span<const double> x,
                                  std::span<const double> y) noexcept {
  const std::size_t n = x.size();
  if (n != y.size() || n < 2) return std::nullopt;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw PreconditionError("pearson: length mismatch");
  if (x.size() < 2) throw PreconditionError("pearson: need >= 2 pairs");
  const auto r = pearson_opt(x, y);
  if (!r)
    throw UndefinedCorrelationError(
        "pearson undefined: zero variance in an argument");
  return *r;
}

TTest corr_t_test(double r, int n) {
  if (n < 3) throw PreconditionError("corr_t_test: need n >= 3");
  TTest out;
  out.df = n - 2;
  if (std::abs(r) >= 1.0) {
    out.t = r > 0 ? std::numeric_limits<double>::infinity()
                  : -std::numeric_limits<double>::infinity();
    out.p = 0.0;
    return out;
  }
  out.t = r * std::sqrt(static_cast<double>(n - 2)) /
          std::sqrt(1.0 - r * r);
  out.p = student_t_two_sided_p(out.t, out.df);
  return out;
}

double fisher_z(double r) {
  if (std::abs(r) >= 1.0)
    throw PreconditionError("fisher_z: |r| must be < 1");
  return std::atanh(r);
}

SteigerResult steiger_z(double r12, double r13, double r23, int n) {
  if (n < 4) throw PreconditionError("steiger_z: need n >= 4");
  for (double r : {r12, r13, r23})
    if (std::abs(r) >= 1.0)
      throw PreconditionError("steiger_z: correlations must be in (-1, 1)");
  // 3x3 correlation matrix PSD check via its determinant.
  const double det = 1.0 + 2.0 * r12 * r13 * r23 - r12 * r12 - r13 * r13 -
                     r23 * r23;
  if (det < -1e-12)
    throw InvalidCorrelationMatrixError(
        "correlation triple is not positive semidefinite");
  const double rbar = 0.5 * (r12 + r13);
  const double rbar2 = rbar * rbar;
  const double psi = r23 * (1.0 - 2.0 * rbar2) -
                     0.5 * rbar2 * (1.0 - 2.0 * rbar2 - r23 * r23);
  const double one_minus = 1.0 - rbar2;
  const double sbar = psi / (one_minus * one_minus);
  SteigerResult out;
  out.z = (std::atanh(r12) - std::atanh(r13)) *
          std::sqrt(static_cast<double>(n - 3) / (2.0 - 2.0 * sbar));
  out.p = normal_two_sided_p(out.z);
  return out;
}

std::vector<double> holm_adjust(std::span<const double> p_values) {
  const std::size_t m = p_values.size();
  for (double p : p_values)
    if (!(p >= 0.0 && p <= 1.0))
      throw PreconditionError("holm_adjust: p-values must lie in [0, 1]");
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return p_values[a] < p_values[b];
  });
  std::vector<double> adjusted(m);
  double running_max = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double scaled =
        std::min(1.0, p_values[order[i]] * static_cast<double>(m - i));
    running_max = std::max(running_max, scaled);
    adjusted[order[i]] = running_max;
  }
  return adjusted;
}

// ---------------------------------------------------------------------------
// Bootstrap
// ---------------------------------------------------------------------------

namespace {

double percentile(std::vector<double> sorted, double q) {
  // Linear interpolation between order statistics.
  const std::size_t n = sorted.size();
  const double pos = q * static_cast<double>(n - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, n - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

constexpr int kMaxAttemptsPerSlot = 10;

}  // namespace

BootstrapCi bootstrap_ci(const ResampleStatistic& statistic,
                         std::size_t n_units, int b, const RngSpec& rng,
                         std::string_view task, int threads) {
  if (n_units < 3)
    throw PreconditionError("bootstrap_ci: need >= 3 resample units");
  if (b < 2) throw PreconditionError("bootstrap_ci: need B >= 2");

  std::vector<double> values(static_cast<std::size_t>(b));
  std::vector<int> attempts(static_cast<std::size_t>(b), 0);
  std::vector<char> ok(static_cast<std::size_t>(b), 0);
  const std::string task_name(task);

  parallel_for(static_cast<std::size_t>(b), threads, [&](std::size_t i) {
    RngStream stream(rng, task_name, i);
    std::vector<std::size_t> indices(n_units);
    for (int attempt = 0; attempt < kMaxAttemptsPerSlot; ++attempt) {
      ++attempts[i];
      for (auto& idx : indices) idx = stream.uniform_below(n_units);
      if (auto v = statistic(indices)) {
        values[i] = *v;
        ok[i] = 1;
        return;
      }
    }
  });

  BootstrapCi out;
  long long total_attempts = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    total_attempts += attempts[i];
    out.redraws += attempts[i] - 1;
    if (!ok[i])
      throw DegenerateBootstrapError(
          "statistic undefined after repeated redraws (task " + task_name +
          ")");
  }
  if (total_attempts > 10LL * b)
    throw DegenerateBootstrapError("statistic undefined on most resamples (task " +
                                   task_name + ")");
  std::sort(values.begin(), values.end());
  out.lo = percentile(values, 0.025);
  out.hi = percentile(std::move(values), 0.975);
  return out;
}

CorrelationResult correlate(std::span<const double> x,
                            std::span<const double> y, int b,
                            const RngSpec& rng, std::string_view task,
                            int threads) {
  CorrelationResult out;
  out.r = pearson(x, y);
  out.n = static_cast<int>(x.size());
  if (out.n < 3) return out;
  out.t_test = corr_t_test(out.r, out.n);
  const auto ci = bootstrap_ci(
      [&](std::span<const std::size_t> idx) -> std::optional<double> {
        std::vector<double> bx(idx.size()), by(idx.size());
        for (std::size_t k = 0; k < idx.size(); ++k) {
          bx[k] = x[idx[k]];
          by[k] = y[idx[k]];
        }
        return pearson_opt(bx, by);
      },
      x.size(), b, rng, task, threads);
  out.ci = {ci.lo, ci.hi};
  return out;
}

// ---------------------------------------------------------------------------
// Permutation
// ---------------------------------------------------------------------------

PermutationResult permutation_test(const AnnotationStore& store, Axis axis,
                                   const PermutationStatistic& statistic,
                                   int n_iterations, const RngSpec& rng,
                                   std::string_view task, int threads) {
  if (n_iterations < 1)
    throw PreconditionError("permutation_test: need >= 1 iteration");

  // Annotators carrying the axis attribute, in deterministic store order.
  std::vector<AnnotatorKey> keys;
  std::vector<Demographics> base;  // per-annotator demographics
  std::vector<std::size_t> attr_holders;  // indices into keys with the attribute
  for (const auto& [key, record_idx] : store.annotators()) {
    const auto& demo = store.records()[record_idx.front()].demographics;
    keys.push_back(key);
    base.push_back(demo);
    if (has_axis(demo, axis)) attr_holders.push_back(keys.size() - 1);
  }
  {
    std::set<std::string> groups;
    for (std::size_t i : attr_holders) {
      if (axis == Axis::gender)
        groups.insert(std::string(to_string(*base[i].gender)));
      else
        groups.insert(std::string(to_string(*base[i].ethnicity)));
    }
    if (groups.size() < 2)
      throw PreconditionError(
          "permutation_test: axis has fewer than 2 groups");
  }

  // Record -> annotator slot, for materializing per-record demographics.
  std::map<AnnotatorKey, std::size_t> slot_of;
  for (std::size_t i = 0; i < keys.size(); ++i) slot_of.emplace(keys[i], i);
  std::vector<std::size_t> record_slot(store.size());
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto& r = store.records()[i];
    record_slot[i] = slot_of.at({r.dataset.name(), r.annotator_id});
  }

  const auto evaluate =
      [&](const std::vector<Demographics>& per_annotator)
      -> std::optional<double> {
    std::vector<Demographics> per_record(store.size());
    for (std::size_t i = 0; i < store.size(); ++i)
      per_record[i] = per_annotator[record_slot[i]];
    return statistic(per_record);
  };

  const auto observed = evaluate(base);
  if (!observed)
    throw PreconditionError(
        "permutation_test: statistic undefined on the observed assignment");

  PermutationResult out;
  out.observed = *observed;
  out.null_distribution.assign(static_cast<std::size_t>(n_iterations), 0.0);
  std::vector<int> attempts(static_cast<std::size_t>(n_iterations), 0);
  std::vector<char> ok(static_cast<std::size_t>(n_iterations), 0);
  const std::string task_name(task);

  parallel_for(static_cast<std::size_t>(n_iterations), threads,
               [&](std::size_t i) {
    RngStream stream(rng, task_name, i);
    std::vector<std::size_t> order(attr_holders);
    std::vector<Demographics> permuted(base);
    for (int attempt = 0; attempt < kMaxAttemptsPerSlot; ++attempt) {
      ++attempts[i];
      stream.shuffle(order);
      // Reassign the axis attribute across attribute-carrying annotators.
      for (std::size_t k = 0; k < attr_holders.size(); ++k) {
        const Demographics& source = base[order[k]];
        Demographics& target = permuted[attr_holders[k]];
        if (axis == Axis::gender)
          target.gender = source.gender;
        else
          target.ethnicity = source.ethnicity;
      }
      if (auto v = evaluate(permuted)) {
        out.null_distribution[i] = *v;
        ok[i] = 1;
        return;
      }
    }
  });

  for (std::size_t i = 0; i < ok.size(); ++i) {
    out.redraws += attempts[i] - 1;
    if (!ok[i])
      throw DegenerateBootstrapError(
          "permutation statistic undefined after repeated redraws (task " +
          task_name + ")");
  }
  int at_least = 0;
  for (double v : out.null_distribution)
    if (v >= out.observed) ++at_least;
  out.p = (1.0 + at_least) / (static_cast<double>(n_iterations) + 1.0);
  return out;
}

}  // namespace alignaudit::stats
