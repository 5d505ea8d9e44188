#pragma once

#include "cde/basis.hpp"
#include "cde/model.hpp"

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace cde {

//! Largest accepted condition number of a (scaled) local Gram matrix.
inline constexpr double max_gram_condition = 1e12;

//! First-stage weights A: local polynomial regression of CDF indicators on
//! q(X - x) with product-kernel weights. For any y,
//! F_q(y | x) = sum_j A_j 1(Y_j <= y). A_j is zero outside the kernel window.
Eigen::VectorXd
first_stage_weights(const DataSet& data,
                    const Eigen::Ref<const Eigen::VectorXd>& x_point,
                    double h,
                    int q,
                    const MultiIndex& nu,
                    KernelFamily kernel);

//! Residuals of the first-stage weighted least-squares fit of `response` on
//! q(X - x); zero for observations outside the x window.
Eigen::VectorXd
first_stage_residuals(const DataSet& data,
                      const Eigen::Ref<const Eigen::VectorXd>& x_point,
                      double h,
                      int q,
                      KernelFamily kernel,
                      const Eigen::Ref<const Eigen::VectorXd>& response);

//! v_i = sum_j A_j 1(Y_j <= Y_i), via prefix sums in y order (ties included).
Eigen::VectorXd
first_stage_cdf_at_sample_points(const DataSet& data, const Eigen::Ref<const Eigen::VectorXd>& A);

//! Second-stage weights b(y): local polynomial smoothing in y of order p,
//! returning the weights of the mu-th derivative coefficient.
Eigen::VectorXd
second_stage_weights(const DataSet& data, double y, double h, int p, int mu, KernelFamily kernel);

//! Number of observations inside both the x window and the y window.
long
effective_sample_size(const DataSet& data,
                      double y,
                      const Eigen::Ref<const Eigen::VectorXd>& x_point,
                      double h,
                      KernelFamily kernel);

//! Two-step estimate of d^mu/dy^mu d^nu/dx^nu F(y | x).
double
estimate_point(const DataSet& data,
               double y,
               const Eigen::Ref<const Eigen::VectorXd>& x_point,
               double h,
               const EstimationConfig& config);

//! Materialized weights for every grid point. Rows of `first` and `second`
//! belong to grid points; rows of failed points are zero and `valid` is false.
struct WeightSet
{
  EvaluationSpec spec;
  int p = 0;
  int q = 0;
  int mu = 0;
  MultiIndex nu;
  KernelFamily kernel = KernelFamily::epanechnikov;
  Eigen::MatrixXd first;  // m x n
  Eigen::MatrixXd second; // m x n
  std::vector<long> eff_n;
  std::vector<bool> valid;
  std::vector<std::string> messages;

  Eigen::Index size() const { return spec.size(); }
  std::vector<Eigen::Index> valid_points() const;
};

//! Weights at every grid point using orders (p, q) from the config.
//! Points with InsufficientLocalData are marked invalid instead of throwing.
WeightSet
compute_weights(const DataSet& data, const EvaluationSpec& spec, const EstimationConfig& config);

//! b(y_g)' v_g for every grid point; NaN at invalid points.
Eigen::VectorXd
apply_weights(const DataSet& data, const WeightSet& weights);

//! Per-grid-point results. Inference fields stay NaN until filled by
//! `fit_cde`.
struct CdeFit
{
  EvaluationSpec spec;
  EstimationConfig config;
  Eigen::VectorXd estimates;
  Eigen::VectorXd se;
  Eigen::VectorXd ci_lower;
  Eigen::VectorXd ci_upper;
  Eigen::VectorXd band_lower;
  Eigen::VectorXd band_upper;
  Eigen::VectorXd rbc_estimates;
  Eigen::VectorXd rbc_se;
  Eigen::VectorXd rbc_ci_lower;
  Eigen::VectorXd rbc_ci_upper;
  Eigen::VectorXd rbc_band_lower;
  Eigen::VectorXd rbc_band_upper;
  Eigen::MatrixXd covariance;
  Eigen::MatrixXd rbc_covariance;
  double band_critical = 0.0;
  double rbc_band_critical = 0.0;
  std::vector<long> eff_n;
  std::vector<std::string> warnings;

  Eigen::Index size() const { return spec.size(); }
};

//! Point estimates and eff_n over the grid. Failed points carry NaN and a
//! warning; nonneg clamps density estimates at zero.
CdeFit
estimate_grid(const DataSet& data, const EvaluationSpec& spec, const EstimationConfig& config);

//! As estimate_grid, from weights that were already computed.
CdeFit
fit_from_weights(const DataSet& data, const WeightSet& ws, const EstimationConfig& config);

} // namespace cde
