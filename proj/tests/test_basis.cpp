#include "cde/basis.hpp"

#include "doctest.h"

#include <cmath>

TEST_SUITE("basis")
{
  TEST_CASE("basis_dimension")
  {
    CHECK(cde::basis_dimension(1, 1) == 2);
    CHECK(cde::basis_dimension(2, 2) == 6);
    CHECK(cde::basis_dimension(3, 0) == 1);
    CHECK(cde::basis_dimension(2, 3) == 10);
    CHECK(cde::basis_dimension(30, 30) == 118264581564861424ULL);
    for (int d = 1; d <= 4; ++d)
      for (int order = 0; order <= 5; ++order)
        CHECK(cde::MultiIndexSet(d, order).size() == cde::basis_dimension(d, order));
  }

  TEST_CASE("graded lexicographic ordering")
  {
    const cde::MultiIndexSet ms(2, 2);
    const std::vector<cde::MultiIndex> expected{ { 0, 0 }, { 1, 0 }, { 0, 1 }, { 2, 0 }, { 1, 1 }, { 0, 2 } };
    CHECK(ms.indices() == expected);
    CHECK(ms.degree_block(2) == std::vector<size_t>{ 3, 4, 5 });
  }

  TEST_CASE("poly_vector_x examples")
  {
    const cde::MultiIndexSet ms1(2, 1);
    CHECK(cde::poly_vector_x(ms1, Eigen::Vector2d(0.0, 0.0)).isApprox(Eigen::Vector3d(1.0, 0.0, 0.0)));

    const cde::MultiIndexSet ms2(1, 2);
    Eigen::VectorXd u(1);
    u << 2.0;
    CHECK(cde::poly_vector_x(ms2, u).isApprox(Eigen::Vector3d(1.0, 2.0, 2.0)));

    const cde::MultiIndexSet ms3(2, 2);
    Eigen::VectorXd expected(6);
    expected << 1, 1, 1, 0.5, 1, 0.5;
    CHECK(cde::poly_vector_x(ms3, Eigen::Vector2d(1.0, 1.0)).isApprox(expected));
  }

  TEST_CASE("poly_vector_y examples")
  {
    CHECK(cde::poly_vector_y(2, 0.0).isApprox(Eigen::Vector3d(1.0, 0.0, 0.0)));
    CHECK(cde::poly_vector_y(3, 1.0).isApprox(Eigen::Vector4d(1.0, 1.0, 0.5, 1.0 / 6.0)));
    CHECK(cde::poly_vector_y(2, -2.0).isApprox(Eigen::Vector3d(1.0, -2.0, 2.0)));
  }

  TEST_CASE("unit_vector_index")
  {
    CHECK(cde::unit_vector_index(cde::MultiIndexSet(2, 2), { 0, 0 }) == 0);
    CHECK(cde::unit_vector_index(cde::MultiIndexSet(1, 2), { 2 }) == 2);
    CHECK(cde::unit_vector_index(cde::MultiIndexSet(2, 2), { 1, 1 }) == 4);
    CHECK_THROWS_AS(cde::unit_vector_index(cde::MultiIndexSet(2, 2), { 2, 1 }), cde::ConfigError);
  }

  TEST_CASE("length equals the basis dimension")
  {
    for (int d = 1; d <= 3; ++d)
      for (int order = 0; order <= 4; ++order) {
        const cde::MultiIndexSet ms(d, order);
        CHECK(static_cast<size_t>(cde::poly_vector_x(ms, Eigen::VectorXd::Constant(d, 0.3)).size()) ==
              cde::basis_dimension(d, order));
      }
  }

  TEST_CASE("basis coefficients are partial derivatives at the expansion point")
  {
    // f(u1, u2) = 3 u1^2 u2 - 2 u2^3 + 5 u1 + 7: expand in the basis and
    // compare each coefficient with the symbolic derivative at 0.
    const cde::MultiIndexSet ms(2, 3);
    Eigen::VectorXd coef = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ms.size()));
    // derivatives at 0: f = 7, f_1 = 5, f_{1,1,2} = 6, f_{2,2,2} = -12
    coef(static_cast<Eigen::Index>(cde::unit_vector_index(ms, { 0, 0 }))) = 7.0;
    coef(static_cast<Eigen::Index>(cde::unit_vector_index(ms, { 1, 0 }))) = 5.0;
    coef(static_cast<Eigen::Index>(cde::unit_vector_index(ms, { 2, 1 }))) = 6.0;
    coef(static_cast<Eigen::Index>(cde::unit_vector_index(ms, { 0, 3 }))) = -12.0;
    for (double a : { -0.7, 0.2, 1.3 })
      for (double b : { -1.1, 0.4, 0.9 }) {
        const double f = 3 * a * a * b - 2 * b * b * b + 5 * a + 7;
        CHECK(coef.dot(cde::poly_vector_x(ms, Eigen::Vector2d(a, b))) == doctest::Approx(f).epsilon(1e-12));
      }
  }

  TEST_CASE("factorials")
  {
    CHECK(cde::factorial(0) == 1.0);
    CHECK(cde::factorial(5) == 120.0);
    CHECK(cde::multi_factorial({ 2, 3 }) == 12.0);
  }
}
