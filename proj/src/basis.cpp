#include "cde/basis.hpp"

#include <numeric>

namespace cde {

namespace {

// compositions of `total` into d parts, first part descending
void
compositions(int d, int total, MultiIndex& prefix, std::vector<MultiIndex>& out)
{
  if (static_cast<int>(prefix.size()) == d - 1) {
    prefix.push_back(total);
    out.push_back(prefix);
    prefix.pop_back();
    return;
  }
  for (int first = total; first >= 0; --first) {
    prefix.push_back(first);
    compositions(d, total - first, prefix, out);
    prefix.pop_back();
  }
}

} // namespace

MultiIndexSet::MultiIndexSet(int d, int order)
  : d_(d)
  , order_(order)
{
  if (d < 1 || order < 0)
    throw ConfigError("multi-index set needs d >= 1 and order >= 0");
  for (int degree = 0; degree <= order; ++degree) {
    MultiIndex prefix;
    compositions(d, degree, prefix, indices_);
  }
}

std::vector<size_t>
MultiIndexSet::degree_block(int degree) const
{
  std::vector<size_t> block;
  for (size_t k = 0; k < indices_.size(); ++k)
    if (std::accumulate(indices_[k].begin(), indices_[k].end(), 0) == degree)
      block.push_back(k);
  return block;
}

size_t
basis_dimension(int d, int order)
{
  // C(d + order, order), built up so every intermediate is an integer
  size_t result = 1;
  for (int k = 1; k <= order; ++k)
    result = result * static_cast<size_t>(d + k) / static_cast<size_t>(k);
  return result;
}

double
factorial(int k)
{
  double f = 1.0;
  for (int j = 2; j <= k; ++j)
    f *= j;
  return f;
}

double
multi_factorial(const MultiIndex& nu)
{
  double f = 1.0;
  for (int v : nu)
    f *= factorial(v);
  return f;
}

Eigen::VectorXd
poly_vector_x(const MultiIndexSet& ms, const Eigen::Ref<const Eigen::VectorXd>& u)
{
  Eigen::VectorXd out(static_cast<Eigen::Index>(ms.size()));
  for (size_t k = 0; k < ms.size(); ++k) {
    const auto& nu = ms[k];
    double value = 1.0;
    for (size_t j = 0; j < nu.size(); ++j)
      for (int e = 0; e < nu[j]; ++e)
        value *= u(static_cast<Eigen::Index>(j));
    out(static_cast<Eigen::Index>(k)) = value / multi_factorial(nu);
  }
  return out;
}

Eigen::VectorXd
poly_vector_y(int p, double u)
{
  Eigen::VectorXd out(p + 1);
  out(0) = 1.0;
  for (int k = 1; k <= p; ++k)
    out(k) = out(k - 1) * u / k;
  return out;
}

size_t
unit_vector_index(const MultiIndexSet& ms, const MultiIndex& nu)
{
  if (static_cast<int>(nu.size()) != ms.dimension())
    throw ConfigError("multi-index has the wrong dimension");
  if (std::accumulate(nu.begin(), nu.end(), 0) > ms.order())
    throw ConfigError("multi-index degree exceeds the basis order");
  for (size_t k = 0; k < ms.size(); ++k)
    if (ms[k] == nu)
      return k;
  throw ConfigError("multi-index not found in basis");
}

} // namespace cde
