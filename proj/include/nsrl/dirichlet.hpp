#pragma once

#include <stdexcept>

#include <Eigen/Core>

namespace nsrl {

/// Sufficient statistics of a set of compositional samples. The Dirichlet
/// likelihood needs only n and sum log x; the sums of x and x^2 feed the
/// moment-based starting point.
struct DirichletStats {
  long n = 0;
  Eigen::VectorXd sum_log;
  Eigen::VectorXd sum_x;
  Eigen::VectorXd sum_x2;

  static DirichletStats of(const Eigen::MatrixXd& samples);
  static DirichletStats zeros(int dim);
  DirichletStats& operator+=(const DirichletStats& other);
  DirichletStats operator-(const DirichletStats& other) const;
};

struct DirichletFit {
  Eigen::VectorXd alpha;
  double log_likelihood = 0.0;
  int iterations = 0;
};

/// The fit stopped short of the gradient tolerance (iteration cap, or no
/// ascent step left); `best` is the highest-likelihood iterate seen.
class DirichletFitError : public std::runtime_error {
 public:
  DirichletFitError(const char* what, DirichletFit best) : std::runtime_error(what), best(std::move(best)) {}
  DirichletFit best;
};

struct DirichletOptions {
  double gradient_tolerance = 1e-8;  // on the per-sample gradient norm
  int max_iterations = 200;
  double max_concentration = 1e10;
};

double dirichlet_log_likelihood(const Eigen::VectorXd& alpha, const DirichletStats& stats);

/// Moment estimate: alpha = mean * s, with s pooled over coordinates from
/// mean and second moment.
Eigen::VectorXd dirichlet_moment_estimate(const DirichletStats& stats);

/// Newton iteration on the digamma stationarity conditions, with the Hessian
/// inverted in closed form (diagonal plus rank one) and step halving to keep
/// alpha positive and the likelihood non-decreasing. Starts at `start` when
/// given, else at the moment estimate.
DirichletFit dirichlet_mle(const DirichletStats& stats, const Eigen::VectorXd* start = nullptr,
                           const DirichletOptions& options = {});

/// Rows of `samples` must be strictly positive; at least two rows.
DirichletFit dirichlet_mle(const Eigen::MatrixXd& samples, const DirichletOptions& options = {});

/// Like dirichlet_mle, but a capped fit returns its best iterate instead of throwing.
DirichletFit dirichlet_fit_or_best(const DirichletStats& stats, const Eigen::VectorXd* start = nullptr,
                                   const DirichletOptions& options = {});

}  // namespace nsrl
