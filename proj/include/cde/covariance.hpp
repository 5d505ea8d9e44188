#pragma once

#include "cde/estimator.hpp"

#include <Eigen/Dense>

namespace cde {

struct CovarianceEstimate
{
  Eigen::MatrixXd matrix;
  bool repaired = false;
  double min_eigen_before = 0.0;
};

//! Symmetrizes, then clips negative eigenvalues to zero. A matrix that is
//! already PSD is returned as is with `repaired` false.
CovarianceEstimate
psd_repair(const Eigen::MatrixXd& matrix);

//! Covariance of the grid estimates from the first-order projection of the
//! double-sum form
//!   theta_g = sum_i sum_j b_{g,i} A_{g,j} 1(Y_j <= Y_i).
//!
//! With G_g(t) = sum_i b_{g,i} 1(t <= Y_i), each observation k contributes
//! psi_k(g) = A_{g,k} (G_g(Y_k) - m_g(X_k)), where m_g is the first-stage
//! local polynomial fit of G_g(Y) on X. Weights are held fixed. The result is
//! sum_k (psi_k - mean psi)(psi_k - mean psi)' over the valid grid points;
//! rows and columns of invalid points are NaN.
CovarianceEstimate
vstat_covariance(const DataSet& data, const WeightSet& weights, const Eigen::VectorXd& estimates);

//! The m x n matrix of projections psi (invalid points are zero rows).
Eigen::MatrixXd
projection_matrix(const DataSet& data, const WeightSet& weights);

} // namespace cde
