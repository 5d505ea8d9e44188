#include "cde/kernels.hpp"
#include "cde/model.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cctype>
#include <cmath>

namespace cde {

double
kernel_value(KernelFamily family, double u)
{
  const double a = std::abs(u);
  if (a > 1.0)
    return 0.0;
  switch (family) {
    case KernelFamily::epanechnikov:
      return 0.75 * (1.0 - u * u);
    case KernelFamily::uniform:
      return 0.5;
    case KernelFamily::triangular:
      return 1.0 - a;
  }
  return 0.0;
}

bool
kernel_positive(KernelFamily family, double u)
{
  if (family == KernelFamily::uniform)
    return std::abs(u) <= 1.0;
  return std::abs(u) < 1.0;
}

double
product_kernel(KernelFamily family, const Eigen::Ref<const Eigen::VectorXd>& u, double h)
{
  if (!(h > 0.0))
    throw ConfigError("bandwidth must be positive");
  double value = 1.0;
  for (Eigen::Index k = 0; k < u.size(); ++k) {
    value *= kernel_value(family, u(k) / h) / h;
    if (value == 0.0)
      return 0.0;
  }
  return value;
}

double
kernel_moment(KernelFamily family, int power, double lower, double upper)
{
  lower = std::max(lower, -1.0);
  upper = std::min(upper, 1.0);
  if (!(upper > lower))
    return 0.0;
  auto integrand = [&](double u) {
    return std::pow(u, power) * kernel_value(family, u);
  };
  // the integrand is a polynomial on each side of 0; 20 nodes are exact up to
  // degree 39
  using Rule = boost::math::quadrature::gauss<double, 20>;
  if (lower < 0.0 && upper > 0.0)
    return Rule::integrate(integrand, lower, 0.0) +
           Rule::integrate(integrand, 0.0, upper);
  return Rule::integrate(integrand, lower, upper);
}

std::string
kernel_name(KernelFamily family)
{
  switch (family) {
    case KernelFamily::epanechnikov:
      return "epanechnikov";
    case KernelFamily::uniform:
      return "uniform";
    case KernelFamily::triangular:
      return "triangular";
  }
  return "unknown";
}

KernelFamily
parse_kernel(const std::string& name)
{
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  if (lower == "epanechnikov")
    return KernelFamily::epanechnikov;
  if (lower == "uniform")
    return KernelFamily::uniform;
  if (lower == "triangular")
    return KernelFamily::triangular;
  throw ConfigError("unknown kernel '" + name + "'");
}

} // namespace cde
