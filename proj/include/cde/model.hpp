#pragma once

#include "cde/kernels.hpp"

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace cde {

//! Base class of all errors raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

//! Invalid or unreadable input data.
class DataError : public Error
{
public:
  using Error::Error;
};

//! Inconsistent estimation options (orders, levels, grid).
class ConfigError : public Error
{
public:
  using Error::Error;
};

//! Too few observations (or a near-singular Gram matrix) inside a kernel
//! window.
class InsufficientLocalData : public Error
{
public:
  using Error::Error;
};

//! A numerical routine could not produce a finite answer.
class NumericalError : public Error
{
public:
  using Error::Error;
};

using MultiIndex = std::vector<int>;

//! Sample of a scalar response and a d-dimensional covariate vector.
//!
//! Immutable after construction. The constructor also records the sort order
//! of the responses and their tie blocks, which every CDF-indicator sum in the
//! estimator reuses.
class DataSet
{
public:
  DataSet(Eigen::VectorXd y, Eigen::MatrixXd x);

  const Eigen::VectorXd& y() const { return y_; }
  const Eigen::MatrixXd& x() const { return x_; }
  Eigen::Index n() const { return y_.size(); }
  Eigen::Index d() const { return x_.cols(); }

  double y_min() const { return y_min_; }
  double y_max() const { return y_max_; }
  const Eigen::VectorXd& x_min() const { return x_min_; }
  const Eigen::VectorXd& x_max() const { return x_max_; }

  //! Observation indices sorted by ascending response (stable).
  const std::vector<Eigen::Index>& y_order() const { return order_; }
  //! For sorted position k, the first sorted position of its tie block.
  const std::vector<Eigen::Index>& tie_begin() const { return tie_begin_; }
  //! For sorted position k, one past the last sorted position of its tie
  //! block.
  const std::vector<Eigen::Index>& tie_end() const { return tie_end_; }

private:
  Eigen::VectorXd y_;
  Eigen::MatrixXd x_;
  double y_min_;
  double y_max_;
  Eigen::VectorXd x_min_;
  Eigen::VectorXd x_max_;
  std::vector<Eigen::Index> order_;
  std::vector<Eigen::Index> tie_begin_;
  std::vector<Eigen::Index> tie_end_;
};

//! Derivative orders, polynomial orders and inference options.
struct EstimationConfig
{
  int mu = 1;           //!< derivative order in y
  MultiIndex nu;        //!< derivative multi-index in x; empty means zero
  int p = 2;            //!< second-stage (y) polynomial order
  int q = 1;            //!< first-stage (x) polynomial order
  KernelFamily kernel = KernelFamily::epanechnikov;
  double alpha = 0.05;  //!< one minus the confidence level
  int band_sims = 2000; //!< Gaussian draws for the uniform band
  bool nonneg = false;  //!< clamp density estimates (mu = 1) at zero
  bool normalize = false;

  //! Throws ConfigError unless the options are consistent with dimension d.
  void validate(Eigen::Index d) const;

  //! nu padded to length d.
  MultiIndex nu_index(Eigen::Index d) const;

  int nu_order() const;
};

//! Evaluation grid in y, the conditioning point and one bandwidth per grid
//! point.
struct EvaluationSpec
{
  Eigen::VectorXd y_grid;
  Eigen::VectorXd x_point;
  Eigen::VectorXd bandwidths;

  EvaluationSpec() = default;
  EvaluationSpec(Eigen::VectorXd grid, Eigen::VectorXd x, Eigen::VectorXd h);
  //! Broadcasts a single bandwidth over the grid.
  EvaluationSpec(Eigen::VectorXd grid, Eigen::VectorXd x, double h);

  Eigen::Index size() const { return y_grid.size(); }
};

//! Reads a CSV file with a header row and returns the selected columns.
//!
//! Any non-numeric or non-finite cell in a selected column is an error that
//! names the (1-based) data row and the column.
DataSet
load_dataset(const std::string& path,
             const std::string& y_column,
             const std::vector<std::string>& x_columns);

//! Type-7 empirical quantile of an ascending-sorted sample.
double
quantile_sorted(const std::vector<double>& sorted, double level);

//! Empirical quantiles of y at levels k/(count+1), k = 1..count, with ties
//! collapsed.
Eigen::VectorXd
default_grid(const DataSet& data, int count);

//! Empirical quantiles of y at explicit levels in (0, 1), with ties collapsed.
Eigen::VectorXd
quantile_grid(const DataSet& data, const std::vector<double>& levels);

} // namespace cde
