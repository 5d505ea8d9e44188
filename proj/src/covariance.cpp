#include "cde/covariance.hpp"
#include "cde/parallel.hpp"

#include <limits>

namespace cde {

CovarianceEstimate
psd_repair(const Eigen::MatrixXd& matrix)
{
  if (matrix.rows() != matrix.cols())
    throw NumericalError("covariance matrix is not square");
  if (!matrix.allFinite())
    throw NumericalError("covariance matrix has non-finite entries");
  CovarianceEstimate out;
  out.matrix = 0.5 * (matrix + matrix.transpose());
  if (out.matrix.size() == 0)
    return out;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(out.matrix);
  out.min_eigen_before = eig.eigenvalues().minCoeff();
  if (out.min_eigen_before < 0.0) {
    const Eigen::VectorXd clipped = eig.eigenvalues().cwiseMax(0.0);
    out.matrix = eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
    out.matrix = 0.5 * (out.matrix + out.matrix.transpose());
    out.repaired = true;
  }
  return out;
}

Eigen::MatrixXd
projection_matrix(const DataSet& data, const WeightSet& weights)
{
  if (weights.first.cols() != data.n() || weights.second.cols() != data.n())
    throw ConfigError("weights do not match the data dimension");
  const auto m = weights.size();
  const auto n = static_cast<size_t>(data.n());
  const auto& order = data.y_order();
  const auto& tie_begin = data.tie_begin();
  Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(m, data.n());

  parallel_for(static_cast<size_t>(m), [&](size_t gu) {
    const auto g = static_cast<Eigen::Index>(gu);
    if (!weights.valid[gu])
      return;
    // suffix sums of b in y order: G(Y_k) = sum over Y_i >= Y_k, ties included
    std::vector<double> suffix(n + 1, 0.0);
    for (size_t k = n; k-- > 0;)
      suffix[k] = suffix[k + 1] + weights.second(g, order[k]);
    Eigen::VectorXd upper(data.n());
    for (size_t k = 0; k < n; ++k)
      upper(order[k]) = suffix[static_cast<size_t>(tie_begin[k])];

    const Eigen::VectorXd residual = first_stage_residuals(
      data, weights.spec.x_point, weights.spec.bandwidths(g), weights.q, weights.kernel, upper);
    psi.row(g) = weights.first.row(g).cwiseProduct(residual.transpose());
  });
  return psi;
}

CovarianceEstimate
vstat_covariance(const DataSet& data, const WeightSet& weights, const Eigen::VectorXd& estimates)
{
  const auto m = weights.size();
  if (estimates.size() != m)
    throw ConfigError("estimates and weights disagree on the grid size");
  const Eigen::MatrixXd psi = projection_matrix(data, weights);
  const auto valid = weights.valid_points();
  const auto mv = static_cast<Eigen::Index>(valid.size());

  Eigen::MatrixXd sub(mv, data.n());
  for (Eigen::Index r = 0; r < mv; ++r)
    sub.row(r) = psi.row(valid[static_cast<size_t>(r)]);
  const Eigen::VectorXd mean = sub.rowwise().mean();
  sub.colwise() -= mean;
  CovarianceEstimate repaired = psd_repair(sub * sub.transpose());

  CovarianceEstimate out;
  out.repaired = repaired.repaired;
  out.min_eigen_before = repaired.min_eigen_before;
  out.matrix = Eigen::MatrixXd::Constant(m, m, std::numeric_limits<double>::quiet_NaN());
  for (Eigen::Index r = 0; r < mv; ++r)
    for (Eigen::Index c = 0; c < mv; ++c)
      out.matrix(valid[static_cast<size_t>(r)], valid[static_cast<size_t>(c)]) = repaired.matrix(r, c);
  return out;
}

} // namespace cde
