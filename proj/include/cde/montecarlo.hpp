#pragma once

#include "cde/bandwidth.hpp"
#include "cde/model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace cde {

enum class DgpKind
{
  bivariate_normal,
  truncated_bivariate_normal
};

//! Mean-zero bivariate normal (Y, X) with equal variances, optionally
//! restricted to the box [lower, upper]^2.
struct DgpSpec
{
  DgpKind kind = DgpKind::bivariate_normal;
  double variance = 1.0;
  double covariance = 0.0;
  double lower = -1.0; //!< box bounds, used only when truncated
  double upper = 1.0;
  std::uint64_t seed = 0;

  void validate() const;

  //! Standard bivariate normal with independent coordinates.
  static DgpSpec standard_normal(std::uint64_t seed);
  //! Variance 2, covariance -0.1, truncated to [-1, 1]^2.
  static DgpSpec truncated_reference(std::uint64_t seed);
};

//! Parses "normal" or "truncated".
DgpSpec
parse_dgp(const std::string& name, std::uint64_t seed);

//! n draws from the DGP. Replication `stream` has its own generator seeded
//! from (seed, stream).
DataSet
draw_dgp(const DgpSpec& spec, long n, std::uint64_t stream);

//! mu-th y-derivative (mu in {0, 1, 2}) of the conditional CDF of Y given
//! X = x.
double
true_conditional(const DgpSpec& spec, int mu, double y, double x);

struct CoverageCell
{
  int mu = 1;
  double x = 0.0;
};

struct CoverageOptions
{
  std::vector<CoverageCell> cells{ { 1, 0.0 } };
  std::vector<double> multipliers{ 1.0 };
  int reps = 500;
  long n = 1000;
  int grid_points = 20;
  double grid_lower = 0.0;
  double grid_upper = 1.0;
  int p = 2;
  int q = 1;
  KernelFamily kernel = KernelFamily::epanechnikov;
  double alpha = 0.05;
  int band_sims = 2000;
  //! Share of failed replications tolerated before the study aborts.
  double max_failure_rate = 0.05;
};

//! Averages over replications and grid points for one
//! (mu, x, multiplier, estimator) combination.
struct CoverageRow
{
  int mu = 0;
  double x = 0.0;
  double multiplier = 1.0;
  std::string estimator; //!< "WBC" or "RBC"
  double mean_bandwidth = 0.0;
  double mean_abs_bias = 0.0; //!< grid average of |mean error|
  double mean_se = 0.0;
  double pointwise_coverage = 0.0; //!< percent
  double uniform_coverage = 0.0;   //!< percent
  double pointwise_width = 0.0;
  double uniform_width = 0.0;
  //! Percent of replications whose mean band width is at least the mean
  //! pointwise interval width.
  double uniform_wider = 0.0;
};

//! Averages over replications at a single grid point.
struct PointCoverageRow
{
  int mu = 0;
  double x = 0.0;
  double multiplier = 1.0;
  std::string estimator;
  double y = 0.0;
  double mean_bandwidth = 0.0;
  double mean_eff_n = 0.0;
  double bias = 0.0; //!< mean error
  double mean_se = 0.0;
  double coverage = 0.0; //!< percent
  double width = 0.0;
};

struct CoverageReport
{
  std::vector<CoverageRow> rows;
  std::vector<PointCoverageRow> points;
  int reps = 0;     //!< replications requested
  int failures = 0; //!< replications dropped after an estimation failure
  long n = 0;
  std::uint64_t seed = 0;
  std::string dgp;

  const CoverageRow& row(int mu, double x, double multiplier, const std::string& estimator) const;
  const PointCoverageRow& point(int mu,
                                double x,
                                double multiplier,
                                const std::string& estimator,
                                double y) const;
};

std::string
dgp_name(const DgpSpec& spec);

//! Replicated coverage experiment. Each replication draws a sample, selects
//! MSE rule-of-thumb bandwidths per grid point and cell, scales them by each
//! multiplier (common random numbers across multipliers) and scores the
//! (p, q) and (p + 1, q + 1) intervals and bands against the truth.
CoverageReport
run_coverage_study(const DgpSpec& spec, const CoverageOptions& options);

} // namespace cde
