#include "nsrl/dirichlet.hpp"

#include <cmath>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include "nsrl/error.hpp"

namespace nsrl {

namespace bm = boost::math;

namespace {

// Double precision throughout; the default policy promotes to long double.
using Fast = bm::policies::policy<bm::policies::promote_double<false>>;

double lgamma(double x) { return bm::lgamma(x, Fast()); }
double digamma(double x) { return bm::digamma(x, Fast()); }
double trigamma(double x) { return bm::trigamma(x, Fast()); }

}  // namespace

DirichletStats DirichletStats::of(const Eigen::MatrixXd& samples) {
  DirichletStats s;
  s.n = samples.rows();
  if ((samples.array() <= 0.0).any()) throw ValidationError("dirichlet: samples must be strictly positive");
  s.sum_log = samples.array().log().colwise().sum().transpose();
  s.sum_x = samples.colwise().sum().transpose();
  s.sum_x2 = samples.array().square().colwise().sum().transpose();
  return s;
}

DirichletStats DirichletStats::zeros(int dim) {
  DirichletStats s;
  s.sum_log = Eigen::VectorXd::Zero(dim);
  s.sum_x = Eigen::VectorXd::Zero(dim);
  s.sum_x2 = Eigen::VectorXd::Zero(dim);
  return s;
}

DirichletStats& DirichletStats::operator+=(const DirichletStats& o) {
  n += o.n;
  sum_log += o.sum_log;
  sum_x += o.sum_x;
  sum_x2 += o.sum_x2;
  return *this;
}

DirichletStats DirichletStats::operator-(const DirichletStats& o) const {
  DirichletStats s;
  s.n = n - o.n;
  s.sum_log = sum_log - o.sum_log;
  s.sum_x = sum_x - o.sum_x;
  s.sum_x2 = sum_x2 - o.sum_x2;
  return s;
}

double dirichlet_log_likelihood(const Eigen::VectorXd& alpha, const DirichletStats& stats) {
  double acc = lgamma(alpha.sum());
  for (Eigen::Index k = 0; k < alpha.size(); ++k) {
    acc -= lgamma(alpha[k]);
    acc += (alpha[k] - 1.0) * stats.sum_log[k] / static_cast<double>(stats.n);
  }
  return static_cast<double>(stats.n) * acc;
}

Eigen::VectorXd dirichlet_moment_estimate(const DirichletStats& stats) {
  const double n = static_cast<double>(stats.n);
  const Eigen::VectorXd mean = stats.sum_x / n;
  const Eigen::VectorXd m2 = stats.sum_x2 / n;
  double log_s = 0.0;
  int used = 0;
  for (Eigen::Index k = 0; k < mean.size(); ++k) {
    const double var = m2[k] - mean[k] * mean[k];
    if (var > 1e-14 * mean[k] && mean[k] - m2[k] > 0.0) {
      log_s += std::log((mean[k] - m2[k]) / var);
      ++used;
    }
  }
  const double s = used > 0 ? std::exp(log_s / used) : 1e6;
  return mean / mean.sum() * s;
}

DirichletFit dirichlet_mle(const DirichletStats& stats, const Eigen::VectorXd* start,
                           const DirichletOptions& options) {
  if (stats.n < 2) throw ValidationError("dirichlet_mle: need at least two samples");
  const Eigen::Index d = stats.sum_log.size();
  const double n = static_cast<double>(stats.n);
  const Eigen::VectorXd mean_log = stats.sum_log / n;

  Eigen::VectorXd alpha = start ? *start : dirichlet_moment_estimate(stats);
  if (alpha.size() != d || (alpha.array() <= 0.0).any()) alpha = dirichlet_moment_estimate(stats);
  double ll = dirichlet_log_likelihood(alpha, stats);
  // Identical samples have no maximiser: the likelihood grows without bound
  // along the mean direction while the gradient decays like 1 / alpha.
  const Eigen::ArrayXd mean = stats.sum_x.array() / n;
  const bool unbounded = (stats.sum_x2.array() / n - mean.square() <= 1e-14 * mean).all();

  Eigen::VectorXd grad(d), q(d), step(d), trial(d);
  for (int it = 0; it < options.max_iterations; ++it) {
    const double a0 = alpha.sum();
    const double psi0 = digamma(a0);
    for (Eigen::Index k = 0; k < d; ++k) {
      grad[k] = psi0 - digamma(alpha[k]) + mean_log[k];
      q[k] = -trigamma(alpha[k]);
    }
    if (!unbounded && grad.norm() <= options.gradient_tolerance) return {alpha, ll, it};
    if (a0 > options.max_concentration) break;

    const double z = trigamma(a0);
    const double b = (grad.array() / q.array()).sum() / (1.0 / z + (1.0 / q.array()).sum());
    step = (grad.array() - b) / q.array();

    double scale = 1.0;
    bool improved = false;
    for (int h = 0; h < 40; ++h, scale *= 0.5) {
      trial = alpha - scale * step;
      if ((trial.array() <= 0.0).any()) continue;
      const double trial_ll = dirichlet_log_likelihood(trial, stats);
      if (trial_ll >= ll - 1e-12 * std::abs(ll)) {
        alpha = trial;
        ll = std::max(ll, trial_ll);
        improved = true;
        break;
      }
    }
    // No ascent step left while the gradient is still large: the likelihood
    // keeps rising along a direction the arithmetic cannot follow (zero-variance data).
    if (!improved) throw DirichletFitError("dirichlet_mle: stalled before convergence", {alpha, ll, it});
  }
  throw DirichletFitError("dirichlet_mle: iteration cap reached", {alpha, ll, options.max_iterations});
}

DirichletFit dirichlet_mle(const Eigen::MatrixXd& samples, const DirichletOptions& options) {
  return dirichlet_mle(DirichletStats::of(samples), nullptr, options);
}

DirichletFit dirichlet_fit_or_best(const DirichletStats& stats, const Eigen::VectorXd* start,
                                   const DirichletOptions& options) {
  try {
    return dirichlet_mle(stats, start, options);
  } catch (const DirichletFitError& e) {
    return e.best;
  }
}

}  // namespace nsrl
