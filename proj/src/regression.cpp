#include "alignaudit/regression.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "alignaudit/stats.hpp"

namespace alignaudit::regression {

namespace {

constexpr double kSeparationBound = 30.0;

double log_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                      const Eigen::VectorXd& beta) {
  const Eigen::VectorXd eta = x * beta;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    // y*eta - log(1 + exp(eta)), computed without overflow
    const double e = eta[i];
    const double log1pexp = e > 0 ? e + std::log1p(std::exp(-e))
                                  : std::log1p(std::exp(e));
    ll += y[i] * e - log1pexp;
  }
  return ll;
}

// Exact-collinearity pre-check; names the dependent columns.
void check_collinearity(const Eigen::MatrixXd& x,
                        const std::vector<std::string>& names) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(1e-10);
  const Eigen::Index rank = qr.rank();
  if (rank >= x.cols()) return;
  const auto perm = qr.colsPermutation().indices();
  std::string culprit;
  for (Eigen::Index k = rank; k < x.cols(); ++k) {
    if (!culprit.empty()) culprit += ", ";
    culprit += names[static_cast<std::size_t>(perm[k])];
  }
  throw CollinearityError("design matrix is rank-deficient; dependent column(s): " +
                          culprit);
}

}  // namespace

int significance_stars(double p) {
  if (p < 0.001) return 3;
  if (p < 0.01) return 2;
  if (p < 0.05) return 1;
  return 0;
}

RegressionSummary fit_logistic(const std::vector<std::string>& column_names,
                               const std::vector<double>& x, std::size_t n,
                               const std::vector<double>& y,
                               const RegressionSpec& spec) {
  if (n == 0) throw PreconditionError("fit_logistic: no observations");
  if (y.size() != n) throw PreconditionError("fit_logistic: y size mismatch");
  const std::size_t p_in = column_names.size();
  if (x.size() != n * p_in)
    throw PreconditionError("fit_logistic: x size mismatch");
  for (double v : y)
    if (v != 0.0 && v != 1.0)
      throw PreconditionError("fit_logistic: response must be 0/1");

  std::vector<std::string> names = column_names;
  const std::size_t p = p_in + (spec.intercept ? 1 : 0);
  if (spec.intercept) names.push_back("intercept");
  if (n <= p)
    throw PreconditionError("fit_logistic: need n > number of regressors");

  double y_sum = 0.0;
  for (double v : y) y_sum += v;
  if (y_sum == 0.0 || y_sum == static_cast<double>(n))
    throw SeparationError("response is constant; no finite MLE exists");

  Eigen::MatrixXd design(n, p);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p_in; ++j)
      design(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          x[i * p_in + j];
    if (spec.intercept)
      design(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p_in)) =
          1.0;
  }
  Eigen::VectorXd response(n);
  for (std::size_t i = 0; i < n; ++i)
    response[static_cast<Eigen::Index>(i)] = y[i];

  check_collinearity(design, names);

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
  RegressionSummary summary;
  summary.n_obs = n;
  double ll = log_likelihood(design, response, beta);
  summary.ll_trace.push_back(ll);

  Eigen::MatrixXd information(p, p);
  for (int iter = 0; iter < spec.max_iterations; ++iter) {
    const Eigen::VectorXd eta = design * beta;
    Eigen::VectorXd mu(eta.size()), w(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      mu[i] = 1.0 / (1.0 + std::exp(-eta[i]));
      w[i] = mu[i] * (1.0 - mu[i]);
    }
    information = design.transpose() * w.asDiagonal() * design;
    const Eigen::VectorXd score = design.transpose() * (response - mu);
    Eigen::LDLT<Eigen::MatrixXd> solver(information);
    if (solver.info() != Eigen::Success || !solver.isPositive())
      throw CollinearityError(
          "observed information matrix is singular at the current iterate");
    const Eigen::VectorXd step = solver.solve(score);
    beta += step;

    if (beta.cwiseAbs().maxCoeff() > kSeparationBound)
      throw SeparationError(
          "coefficients diverged (|beta| > 30); data are separated");

    const double new_ll = log_likelihood(design, response, beta);
    summary.ll_trace.push_back(new_ll);
    const bool done = std::abs(new_ll - ll) < spec.tol;
    ll = new_ll;
    if (done) {
      summary.converged = true;
      break;
    }
  }
  if (!summary.converged)
    throw AuditError("fit_logistic: no convergence within " +
                     std::to_string(spec.max_iterations) + " iterations");

  // Wald inference from the inverse observed information at the optimum.
  {
    const Eigen::VectorXd eta = design * beta;
    Eigen::VectorXd w(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      const double mu = 1.0 / (1.0 + std::exp(-eta[i]));
      w[i] = mu * (1.0 - mu);
    }
    information = design.transpose() * w.asDiagonal() * design;
  }
  Eigen::LDLT<Eigen::MatrixXd> solver(information);
  const Eigen::MatrixXd covariance = solver.solve(
      Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(p),
                                static_cast<Eigen::Index>(p)));

  summary.log_likelihood = ll;
  const double mean_y = y_sum / static_cast<double>(n);
  summary.null_log_likelihood =
      static_cast<double>(n) *
      (mean_y * std::log(mean_y) + (1.0 - mean_y) * std::log(1.0 - mean_y));
  summary.pseudo_r2 = 1.0 - summary.log_likelihood / summary.null_log_likelihood;

  summary.coefficients.reserve(p);
  for (std::size_t j = 0; j < p; ++j) {
    Coefficient c;
    c.name = names[j];
    c.estimate = beta[static_cast<Eigen::Index>(j)];
    c.std_error = std::sqrt(covariance(static_cast<Eigen::Index>(j),
                                       static_cast<Eigen::Index>(j)));
    c.z = c.estimate / c.std_error;
    c.p = stats::normal_two_sided_p(c.z);
    c.stars = significance_stars(c.p);
    summary.coefficients.push_back(std::move(c));
  }
  return summary;
}

RegressionSummary fit_logistic(const confounders::DesignMatrix& design,
                               const std::vector<std::string>& regressors,
                               const RegressionSpec& spec) {
  const std::size_t n = design.rows();
  std::vector<std::size_t> column_index;
  column_index.reserve(regressors.size());
  for (const auto& name : regressors) {
    auto it = std::find(design.columns.begin(), design.columns.end(), name);
    if (it == design.columns.end())
      throw PreconditionError("regressor not in design matrix: " + name);
    column_index.push_back(
        static_cast<std::size_t>(it - design.columns.begin()));
  }
  std::vector<double> x(n * regressors.size());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < column_index.size(); ++j)
      x[i * column_index.size() + j] = design.at(i, column_index[j]);
  return fit_logistic(regressors, x, n, design.response, spec);
}

double pseudo_r2(const RegressionSummary& summary) {
  if (!summary.converged)
    throw PreconditionError("pseudo_r2: fit did not converge");
  return 1.0 - summary.log_likelihood / summary.null_log_likelihood;
}

}  // namespace alignaudit::regression
