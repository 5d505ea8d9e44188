#include "cde/model.hpp"

#include "doctest.h"
#include "util.hpp"

#include <algorithm>
#include <numeric>
#include <random>

TEST_SUITE("model")
{
  TEST_CASE("load_dataset reads the selected columns")
  {
    testutil::TempDir dir;
    const auto path = dir.file("data.csv");
    std::string text = "y,x1,x2,label\n";
    for (int i = 0; i < 1000; ++i)
      text += std::to_string(i * 0.01) + "," + std::to_string(-i) + "," + std::to_string(2 * i) + ",\"a,b\"\n";
    testutil::write_text(path, text);

    const auto one = cde::load_dataset(path, "y", { "x1" });
    CHECK(one.n() == 1000);
    CHECK(one.d() == 1);
    CHECK(one.x()(10, 0) == doctest::Approx(-10.0));

    const auto two = cde::load_dataset(path, "y", { "x1", "x2" });
    CHECK(two.d() == 2);
    CHECK(two.x()(3, 1) == doctest::Approx(6.0));
    CHECK(two.y()(5) == doctest::Approx(0.05));
  }

  TEST_CASE("load_dataset rejects a non-finite cell and names row and column")
  {
    testutil::TempDir dir;
    const auto path = dir.file("nan.csv");
    std::string text = "y,x1\n";
    for (int i = 1; i <= 10; ++i)
      text += (i == 7 ? std::string("NaN") : std::to_string(i)) + "," + std::to_string(i) + "\n";
    testutil::write_text(path, text);
    try {
      cde::load_dataset(path, "y", { "x1" });
      FAIL("expected DataError");
    } catch (const cde::DataError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("row 7") != std::string::npos);
      CHECK(msg.find("'y'") != std::string::npos);
    }
  }

  TEST_CASE("load_dataset input errors")
  {
    testutil::TempDir dir;
    CHECK_THROWS_AS(cde::load_dataset(dir.file("missing.csv"), "y", { "x" }), cde::DataError);

    const auto path = dir.file("d.csv");
    testutil::write_text(path, "y,x\n1,2\n3,abc\n");
    CHECK_THROWS_AS(cde::load_dataset(path, "y", { "z" }), cde::DataError);
    CHECK_THROWS_WITH_AS(cde::load_dataset(path, "y", { "x" }), doctest::Contains("non-numeric"), cde::DataError);

    testutil::write_text(path, "y,x\n1,2\n");
    CHECK_THROWS_WITH_AS(cde::load_dataset(path, "y", { "x" }), doctest::Contains("at least 2"), cde::DataError);
  }

  TEST_CASE("DataSet invariants")
  {
    CHECK_THROWS_AS(cde::DataSet(Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Zero(2, 1)), cde::DataError);
    CHECK_THROWS_AS(cde::DataSet(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Zero(1, 1)), cde::DataError);
    Eigen::VectorXd y(3);
    y << 1.0, std::numeric_limits<double>::infinity(), 2.0;
    CHECK_THROWS_AS(cde::DataSet(y, Eigen::MatrixXd::Zero(3, 1)), cde::DataError);
  }

  TEST_CASE("DataSet tie blocks group equal responses")
  {
    Eigen::VectorXd y(6);
    y << 2.0, 1.0, 2.0, 3.0, 1.0, 2.0;
    const cde::DataSet data(y, Eigen::MatrixXd::Zero(6, 1));
    const auto& order = data.y_order();
    for (size_t k = 0; k < order.size(); ++k) {
      const auto b = static_cast<size_t>(data.tie_begin()[k]);
      const auto e = static_cast<size_t>(data.tie_end()[k]);
      CHECK(b <= k);
      CHECK(k < e);
      for (size_t j = b; j < e; ++j)
        CHECK(y(order[j]) == y(order[k]));
      if (b > 0)
        CHECK(y(order[b - 1]) < y(order[k]));
      if (e < order.size())
        CHECK(y(order[e]) > y(order[k]));
    }
  }

  TEST_CASE("EstimationConfig validation")
  {
    cde::EstimationConfig c;
    CHECK_NOTHROW(c.validate(1));
    c.mu = 3;
    CHECK_THROWS_WITH_AS(c.validate(1), "mu must be ≤ p", cde::ConfigError);
    c = {};
    c.nu = { 2 };
    CHECK_THROWS_AS(c.validate(1), cde::ConfigError);
    c.nu = { 1, 0 };
    CHECK_THROWS_AS(c.validate(1), cde::ConfigError);
    CHECK_NOTHROW(c.validate(2));
    c = {};
    c.alpha = 1.0;
    CHECK_THROWS_AS(c.validate(1), cde::ConfigError);
    c = {};
    c.normalize = true;
    CHECK_THROWS_WITH_AS(c.validate(1), doctest::Contains("not implemented"), cde::ConfigError);
  }

  TEST_CASE("EvaluationSpec validation and broadcast")
  {
    Eigen::VectorXd grid(3);
    grid << 0.0, 1.0, 2.0;
    const cde::EvaluationSpec spec(grid, Eigen::VectorXd::Zero(1), 0.5);
    CHECK(spec.bandwidths.size() == 3);
    CHECK(spec.bandwidths(2) == 0.5);
    Eigen::VectorXd bad = grid;
    bad(2) = 1.0;
    CHECK_THROWS_AS(cde::EvaluationSpec(bad, Eigen::VectorXd::Zero(1), 0.5), cde::ConfigError);
    CHECK_THROWS_AS(cde::EvaluationSpec(grid, Eigen::VectorXd::Zero(1), -1.0), cde::ConfigError);
  }

  TEST_CASE("default_grid uses type-7 quantiles at k/(count+1)")
  {
    Eigen::VectorXd y(100);
    for (int i = 0; i < 100; ++i)
      y(i) = i + 1;
    const cde::DataSet data(y, Eigen::MatrixXd::Zero(100, 1));
    const auto grid = cde::default_grid(data, 9);
    REQUIRE(grid.size() == 9);
    // order-statistic oracle: position 1 + (n - 1) level, linear between
    // neighbouring order statistics
    for (int k = 1; k <= 9; ++k) {
      const double pos = 1.0 + 99.0 * k / 10.0;
      const double lo = std::floor(pos);
      const double expected = lo + (pos - lo) * 1.0;
      CHECK(grid(k - 1) == doctest::Approx(expected).epsilon(1e-12));
    }
    CHECK(grid(0) == doctest::Approx(10.9));

    const auto median = cde::default_grid(data, 1);
    REQUIRE(median.size() == 1);
    CHECK(median(0) == doctest::Approx(50.5));
  }

  TEST_CASE("default_grid has 19 points at levels 0.05..0.95, inside the data range, permutation invariant")
  {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> norm;
    Eigen::VectorXd y(500);
    for (auto& v : y)
      v = norm(rng);
    const cde::DataSet data(y, Eigen::MatrixXd::Zero(500, 1));
    const auto grid = cde::default_grid(data, 19);
    REQUIRE(grid.size() == 19);
    std::vector<double> sorted(y.begin(), y.end());
    std::sort(sorted.begin(), sorted.end());
    for (int k = 1; k <= 19; ++k)
      CHECK(grid(k - 1) == doctest::Approx(cde::quantile_sorted(sorted, 0.05 * k)));
    CHECK(grid.minCoeff() >= data.y_min());
    CHECK(grid.maxCoeff() <= data.y_max());

    std::vector<Eigen::Index> perm(500);
    std::iota(perm.begin(), perm.end(), Eigen::Index{ 0 });
    std::shuffle(perm.begin(), perm.end(), rng);
    Eigen::VectorXd shuffled(500);
    for (Eigen::Index i = 0; i < 500; ++i)
      shuffled(i) = y(perm[static_cast<size_t>(i)]);
    const cde::DataSet other(shuffled, Eigen::MatrixXd::Zero(500, 1));
    CHECK((cde::default_grid(other, 19).array() == grid.array()).all());
  }

  TEST_CASE("default_grid collapses ties and rejects constant data")
  {
    Eigen::VectorXd y(10);
    y << 1, 1, 1, 1, 1, 1, 1, 1, 2, 3;
    const cde::DataSet data(y, Eigen::MatrixXd::Zero(10, 1));
    const auto grid = cde::default_grid(data, 9);
    for (Eigen::Index g = 1; g < grid.size(); ++g)
      CHECK(grid(g) > grid(g - 1));
    CHECK(grid.size() < 9);

    const cde::DataSet flat(Eigen::VectorXd::Ones(10), Eigen::MatrixXd::Zero(10, 1));
    CHECK_THROWS_AS(cde::default_grid(flat, 5), cde::DataError);
  }
}
