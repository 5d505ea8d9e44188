#pragma once

#include "cde/covariance.hpp"
#include "cde/estimator.hpp"

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

namespace cde {

//! Standard normal quantile and distribution function.
double
normal_quantile(double probability);

double
normal_cdf(double z);

//! Simulated critical value of a uniform band.
struct BandCritical
{
  double value = 0.0;
  int sims = 0;
  std::uint64_t seed = 0;
  bool studentized = true;
};

//! Draws simulated per chunk; chunk c uses its own stream seeded from
//! (seed, c), so results do not depend on the thread count.
inline constexpr int band_chunk_size = 1024;

using Interval = std::pair<Eigen::VectorXd, Eigen::VectorXd>;

//! estimate +/- z_{1-alpha/2} sqrt(diag). NaN diagonal entries propagate.
Interval
standard_ci(const Eigen::VectorXd& estimates, const Eigen::MatrixXd& covariance, double alpha);

//! Correlation matrix of the coordinates with positive variance, and their
//! positions in the original matrix.
std::pair<Eigen::MatrixXd, std::vector<Eigen::Index>>
correlation_matrix(const Eigen::MatrixXd& covariance);

//! Symmetric (eigen-based) square root of a PSD matrix.
Eigen::MatrixXd
symmetric_sqrt(const Eigen::MatrixXd& matrix);

//! sims standard normal vectors of length `dim` (one per column), generated
//! chunk by chunk with the per-chunk streams described above.
Eigen::MatrixXd
standard_normal_draws(Eigen::Index dim, int sims, std::uint64_t seed);

//! max_g |Z_g| for every column of `draws`.
std::vector<double>
sup_abs(const Eigen::MatrixXd& draws);

//! Empirical quantile: the ceil(level * size)-th order statistic.
double
upper_quantile(std::vector<double> values, double level);

//! (1 - alpha) quantile of the sup of the studentized Gaussian process with
//! the correlation of `covariance`. Coordinates with zero (or NaN) variance
//! are excluded; the value is never below z_{1-alpha/2}.
BandCritical
band_critical_value(const Eigen::MatrixXd& covariance, double alpha, int sims, std::uint64_t seed);

struct UniformBand
{
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  BandCritical critical;
};

UniformBand
uniform_band(const Eigen::VectorXd& estimates,
             const Eigen::MatrixXd& covariance,
             double alpha,
             int sims,
             std::uint64_t seed);

struct RbcResult
{
  WeightSet weights;
  Eigen::VectorXd estimates;
  CovarianceEstimate covariance;
};

//! Refit with orders (p + 1, q + 1) at the same bandwidths.
RbcResult
rbc_fit(const DataSet& data, const EvaluationSpec& spec, const EstimationConfig& config);

//! Estimates, standard errors, pointwise intervals and uniform bands, for
//! both the (p, q) fit and its robust bias-corrected counterpart.
CdeFit
fit_cde(const DataSet& data, const EvaluationSpec& spec, const EstimationConfig& config, std::uint64_t seed);

} // namespace cde
