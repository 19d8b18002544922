#pragma once

#include <string>
#include <vector>

#include "alignaudit/confounders.hpp"
#include "alignaudit/core.hpp"

namespace alignaudit::regression {

struct RegressionSpec {
  bool intercept = true;
  double tol = 1e-8;   // convergence threshold on |delta log-likelihood|
  int max_iterations = 100;
};

struct Coefficient {
  std::string name;
  double estimate = 0.0;
  double std_error = 0.0;
  double z = 0.0;
  double p = 1.0;
  int stars = 0;  // 0.05 / 0.01 / 0.001 thresholds
};

struct RegressionSummary {
  std::vector<Coefficient> coefficients;
  double log_likelihood = 0.0;
  double null_log_likelihood = 0.0;
  double pseudo_r2 = 0.0;  // McFadden, 1 - LL/LL0
  std::size_t n_obs = 0;
  bool converged = false;
  std::vector<double> ll_trace;  // log-likelihood per IRLS iteration
};

int significance_stars(double p);

// Maximum-likelihood logistic fit via iteratively reweighted least squares.
// x is row-major n x p (intercept appended internally when spec.intercept);
// y is 0/1. Exactly collinear columns raise CollinearityError naming them;
// diverging coefficients (|beta| > 30) raise SeparationError.
RegressionSummary fit_logistic(const std::vector<std::string>& column_names,
                               const std::vector<double>& x, std::size_t n,
                               const std::vector<double>& y,
                               const RegressionSpec& spec = {});

// Convenience overload over a (typically standardized) design matrix.
RegressionSummary fit_logistic(const confounders::DesignMatrix& design,
                               const std::vector<std::string>& regressors,
                               const RegressionSpec& spec = {});

double pseudo_r2(const RegressionSummary& summary);

}  // namespace alignaudit::regression
