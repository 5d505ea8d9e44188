#pragma once

#include "cde/model.hpp"

#include <Eigen/Dense>
#include <vector>

namespace cde {

//! All multi-indices of dimension d with total degree at most `order`.
//!
//! Ordered by total degree, then lexicographically (larger leading exponent
//! first) within a degree, so index 0 is the intercept:
//! d = 2, order = 2 gives (0,0) (1,0) (0,1) (2,0) (1,1) (0,2).
class MultiIndexSet
{
public:
  MultiIndexSet(int d, int order);

  int dimension() const { return d_; }
  int order() const { return order_; }
  size_t size() const { return indices_.size(); }
  const MultiIndex& operator[](size_t k) const { return indices_[k]; }
  const std::vector<MultiIndex>& indices() const { return indices_; }

  //! Positions of all multi-indices with total degree exactly `degree`.
  std::vector<size_t> degree_block(int degree) const;

private:
  int d_;
  int order_;
  std::vector<MultiIndex> indices_;
};

//! (d + order)! / (order! d!) without forming factorials.
size_t
basis_dimension(int d, int order);

//! Entries u^nu / nu! over the multi-index set.
Eigen::VectorXd
poly_vector_x(const MultiIndexSet& ms, const Eigen::Ref<const Eigen::VectorXd>& u);

//! Entries u^k / k! for k = 0..p.
Eigen::VectorXd
poly_vector_y(int p, double u);

//! Position of nu in the set; throws ConfigError if |nu| exceeds the order.
size_t
unit_vector_index(const MultiIndexSet& ms, const MultiIndex& nu);

double
factorial(int k);

//! prod_k nu_k!
double
multi_factorial(const MultiIndex& nu);

} // namespace cde
