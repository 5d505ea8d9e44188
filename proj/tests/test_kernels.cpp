#include "cde/kernels.hpp"
#include "cde/model.hpp"

#include "doctest.h"

#include <array>
#include <cmath>

namespace {

constexpr std::array families{ cde::KernelFamily::epanechnikov,
                               cde::KernelFamily::uniform,
                               cde::KernelFamily::triangular };

// Composite Simpson rule, split at the kink u = 0 so each polynomial piece
// of the kernels is integrated exactly.
double
simpson(cde::KernelFamily f, int power, double a, double b)
{
  if (a < 0.0 && b > 0.0)
    return simpson(f, power, a, 0.0) + simpson(f, power, 0.0, b);
  const int panels = 2000;
  const double step = (b - a) / panels;
  double sum = 0.0;
  for (int i = 0; i <= panels; ++i) {
    const double u = a + i * step;
    const double w = (i == 0 || i == panels) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    sum += w * std::pow(u, power) * cde::kernel_value(f, u);
  }
  return sum * step / 3.0;
}

} // namespace

TEST_SUITE("kernels")
{
  TEST_CASE("kernel_value formulas")
  {
    CHECK(cde::kernel_value(cde::KernelFamily::epanechnikov, 0.0) == 0.75);
    CHECK(cde::kernel_value(cde::KernelFamily::epanechnikov, 1.5) == 0.0);
    CHECK(cde::kernel_value(cde::KernelFamily::uniform, 0.3) == 0.5);
    CHECK(cde::kernel_value(cde::KernelFamily::triangular, 0.5) == 0.5);
    CHECK(cde::kernel_value(cde::KernelFamily::epanechnikov, 0.5) == doctest::Approx(0.5625));
  }

  TEST_CASE("window edge follows the closed formulas")
  {
    CHECK(cde::kernel_value(cde::KernelFamily::epanechnikov, 1.0) == 0.0);
    CHECK(cde::kernel_value(cde::KernelFamily::triangular, -1.0) == 0.0);
    CHECK(cde::kernel_value(cde::KernelFamily::uniform, 1.0) == 0.5);
    CHECK(cde::kernel_positive(cde::KernelFamily::uniform, 1.0));
    CHECK_FALSE(cde::kernel_positive(cde::KernelFamily::epanechnikov, 1.0));
  }

  TEST_CASE("symmetry, non-negativity and normalization")
  {
    for (auto f : families) {
      for (double u = -1.3; u <= 1.3; u += 0.01) {
        CHECK(cde::kernel_value(f, u) == cde::kernel_value(f, -u));
        CHECK(cde::kernel_value(f, u) >= 0.0);
      }
      CHECK(std::abs(simpson(f, 0, -1.0, 1.0) - 1.0) < 1e-10);
    }
  }

  TEST_CASE("kernel_moment matches quadrature on truncated windows")
  {
    for (auto f : families)
      for (int power = 0; power <= 6; ++power) {
        CHECK(cde::kernel_moment(f, power, -1.0, 1.0) == doctest::Approx(simpson(f, power, -1.0, 1.0)).epsilon(1e-10));
        CHECK(cde::kernel_moment(f, power, -0.4, 1.0) == doctest::Approx(simpson(f, power, -0.4, 1.0)).epsilon(1e-10));
        // bounds outside the support are clipped
        CHECK(cde::kernel_moment(f, power, -5.0, 0.0) == doctest::Approx(simpson(f, power, -1.0, 0.0)).epsilon(1e-10));
      }
  }

  TEST_CASE("product_kernel examples")
  {
    CHECK(cde::product_kernel(cde::KernelFamily::epanechnikov, Eigen::Vector2d(0.0, 0.0), 1.0) == doctest::Approx(0.5625));
    for (auto f : families)
      CHECK(cde::product_kernel(f, Eigen::Vector3d(2 * 0.7, 0.0, 0.0), 0.7) == 0.0);
    Eigen::VectorXd u(1);
    u << 0.1;
    CHECK(cde::product_kernel(cde::KernelFamily::uniform, u, 0.5) == doctest::Approx(1.0));
    CHECK_THROWS_AS(cde::product_kernel(cde::KernelFamily::uniform, u, 0.0), cde::ConfigError);
  }

  TEST_CASE("product_kernel scaling")
  {
    const Eigen::Vector2d u(0.13, -0.31);
    for (auto f : families)
      for (double h : { 0.35, 0.8, 2.5 }) {
        const double lhs = cde::product_kernel(f, u, h);
        const double rhs = cde::product_kernel(f, u / h, 1.0) / (h * h);
        CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(rhs)));
      }
  }

  TEST_CASE("parse_kernel")
  {
    CHECK(cde::parse_kernel("Epanechnikov") == cde::KernelFamily::epanechnikov);
    CHECK(cde::parse_kernel("uniform") == cde::KernelFamily::uniform);
    CHECK(cde::parse_kernel("TRIANGULAR") == cde::KernelFamily::triangular);
    CHECK_THROWS_AS(cde::parse_kernel("gaussian"), cde::ConfigError);
    for (auto f : families)
      CHECK(cde::parse_kernel(cde::kernel_name(f)) == f);
  }
}
