#pragma once

#include <Eigen/Dense>
#include <string>

namespace cde {

//! Second-order kernels supported on [-1, 1].
enum class KernelFamily
{
  epanechnikov,
  uniform,
  triangular
};

//! K(u); zero outside [-1, 1].
double
kernel_value(KernelFamily family, double u);

//! prod_k K(u_k / h) / h.
double
product_kernel(KernelFamily family, const Eigen::Ref<const Eigen::VectorXd>& u, double h);

//! True when K(u) > 0.
bool
kernel_positive(KernelFamily family, double u);

//! Integral of u^power K(u) over [lower, upper] (clipped to [-1, 1]).
double
kernel_moment(KernelFamily family, int power, double lower, double upper);

std::string
kernel_name(KernelFamily family);

//! Parses "epanechnikov", "uniform" or "triangular" (case-insensitive).
KernelFamily
parse_kernel(const std::string& name);

} // namespace cde
