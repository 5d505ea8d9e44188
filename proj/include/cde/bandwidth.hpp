#pragma once

#include "cde/estimator.hpp"

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

namespace cde {

//! Plug-in estimates of the leading bias and variance constants at one
//! evaluation point.
//!
//! bias_q1 and bias_p1 include the kernel moment constants evaluated on the
//! window of the pilot bandwidth; the raw derivative estimates are kept so
//! the constants can be re-evaluated at other bandwidths when the window is
//! truncated by the support.
struct MomentEstimates
{
  double bias_q1 = 0.0;        //!< first-stage (x) bias constant
  double bias_p1 = 0.0;        //!< second-stage (y) bias constant
  double variance_const = 0.0; //!< n h^(d+2mu+2|nu|+1) Var at the pilot
  double pilot_h = 0.0;        //!< bandwidth the variance was estimated at
  double reference_h = 0.0;    //!< bandwidth the bias derivatives were estimated at
  //! estimate of d^(p+1)/dy^(p+1) d^nu/dx^nu F(y | x)
  double second_stage_derivative = 0.0;
  //! estimates of d^mu/dy^mu d^beta/dx^beta F(y | x) for |beta| = q + 1, in
  //! basis order
  std::vector<double> first_stage_derivatives;
};

//! Admissible bandwidth range at one evaluation point.
struct BandwidthLimits
{
  double floor = 0.0;
  double ceil = 0.0;
};

enum class BandwidthRule
{
  mse_rot,
  imse_rot,
  fixed
};

std::string
rule_name(BandwidthRule rule);

BandwidthRule
parse_rule(const std::string& name);

struct BandwidthSelection
{
  Eigen::VectorXd grid;
  Eigen::VectorXd bandwidths;
  std::vector<long> eff_n;
  BandwidthRule rule = BandwidthRule::mse_rot;
  std::vector<MomentEstimates> moments;
  std::vector<std::string> warnings;
};

//! Normal-reference pilot 1.06 * sigma * n^(-1/(d+4)), sigma the geometric
//! mean of the standard deviations of y and every covariate.
double
pilot_bandwidth(const DataSet& data);

//! Wide window for the bias derivatives: a fixed multiple of the pooled
//! standard deviation (independent of n).
double
bias_reference_bandwidth(const DataSet& data);

//! Multiple of the pooled standard deviation used by bias_reference_bandwidth.
inline constexpr double bias_reference_scale = 2.0;

//! Plug-in bias and variance constants at (y, x). Grows the pilot by 1.5 up
//! to five times on InsufficientLocalData before giving up.
MomentEstimates
estimate_moments(const DataSet& data,
                 double y,
                 const Eigen::Ref<const Eigen::VectorXd>& x_point,
                 const EstimationConfig& config,
                 double pilot_h);

//! floor: smallest h whose window holds max(dim(d, q), p) + 2 observations;
//! ceil: the largest column range.
BandwidthLimits
bandwidth_limits(const DataSet& data,
                 double y,
                 const Eigen::Ref<const Eigen::VectorXd>& x_point,
                 const EstimationConfig& config);

//! e_mu' Gamma^{-1} int p(u) u^(p+1)/(p+1)! K(u) du over [lower, upper].
double
second_stage_bias_constant(KernelFamily kernel, int p, int mu, double lower, double upper);

//! e_nu' Gamma^{-1} int q(u) u^beta/beta! L(u) du over the box, for every
//! |beta| = q + 1 in basis order.
Eigen::VectorXd
first_stage_bias_constants(KernelFamily kernel,
                           int q,
                           const MultiIndex& nu,
                           const Eigen::Ref<const Eigen::VectorXd>& lower,
                           const Eigen::Ref<const Eigen::VectorXd>& upper);

//! V/(n h^a) + (h^(q+1-|nu|) B_q1 + h^(p+1-mu) B_p1)^2 with
//! a = d + 2 mu + 2|nu| + 1 and the bias constants held fixed.
double
mse_objective(const MomentEstimates& moments,
              double h,
              long n,
              int d,
              int mu,
              int p,
              int q,
              int nu_order = 0);

//! Minimizes a positive objective over [lower, upper]: a 50-point log grid
//! locates the basin, golden-section search in log h refines it.
double
minimize_bandwidth(const std::function<double(double)>& objective, double lower, double upper);

//! Argmin of mse_objective over the limits.
double
select_mse_bandwidth(const MomentEstimates& moments,
                     long n,
                     int d,
                     int mu,
                     int p,
                     int q,
                     const BandwidthLimits& limits,
                     int nu_order = 0);

//! MSE at (y, x) as a function of h, with kernel constants recomputed on the
//! (possibly support-truncated) window of each candidate bandwidth.
std::function<double(double)>
point_mse(const DataSet& data,
          double y,
          const Eigen::Ref<const Eigen::VectorXd>& x_point,
          const EstimationConfig& config,
          const MomentEstimates& moments);

//! One bandwidth minimizing the grid-average MSE.
double
select_imse_bandwidth(const DataSet& data,
                      const Eigen::VectorXd& grid,
                      const Eigen::Ref<const Eigen::VectorXd>& x_point,
                      const EstimationConfig& config);

//! Bandwidths for every grid point under `rule`; `fixed_h` is used by the
//! fixed rule only.
BandwidthSelection
select_bandwidths(const DataSet& data,
                  const Eigen::VectorXd& grid,
                  const Eigen::Ref<const Eigen::VectorXd>& x_point,
                  const EstimationConfig& config,
                  BandwidthRule rule,
                  double fixed_h = 0.0);

} // namespace cde
