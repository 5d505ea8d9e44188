#include "cde/montecarlo.hpp"
#include "cde/report.hpp"

#include "doctest.h"
#include "json.hpp"
#include "util.hpp"

#include <chrono>
#include <fmt/format.h>
#include <sys/wait.h>

namespace {

struct Result
{
  int code = -1;
  std::string out;
  std::string err;
};

//! Runs the command-line tool with `args`, capturing both streams.
Result
run(const testutil::TempDir& dir, const std::string& args, const std::string& env = "")
{
  const auto out = dir.file("stdout.txt");
  const auto err = dir.file("stderr.txt");
  const std::string cmd = env + " '" CDE_CLI_PATH "' " + args + " > '" + out + "' 2> '" + err + "'";
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = testutil::read_text(out);
  r.err = testutil::read_text(err);
  return r;
}

std::string
write_csv(const testutil::TempDir& dir, const cde::DataSet& data, const std::string& name)
{
  std::string text = "y,x\n";
  for (Eigen::Index i = 0; i < data.n(); ++i)
    text += fmt::format("{},{}\n", data.y()(i), data.x()(i, 0));
  const auto path = dir.file(name);
  testutil::write_text(path, text);
  return path;
}

size_t
count(const std::string& text, const std::string& needle)
{
  size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1))
    ++n;
  return n;
}

struct CliFixture
{
  testutil::TempDir dir;
  std::string normal = write_csv(dir, cde::draw_dgp(cde::DgpSpec::standard_normal(3), 1000, 0), "normal.csv");
};

} // namespace

TEST_CASE("estimate prints the summary table")
{
  const CliFixture f;
  const auto r = run(f.dir, "estimate --data " + f.normal + " --x 0 --bw 0.5 --grid-count 9");
  REQUIRE(r.code == 0);
  for (const char* col : { "Index", "Grid", "B.W.", "Eff.n", "Point", "Std.", "Robust B.C." })
    CHECK(r.out.find(col) != std::string::npos);
  CHECK(count(r.out, " ,") == 9);
  CHECK(count(r.out, std::string(77, '-')) == 1);
  CHECK(count(r.out, "0.5000") == 9);
}

TEST_CASE("estimate: CDF beyond the conditional data range is exactly one")
{
  testutil::TempDir dir;
  std::string text = "y,x\n";
  for (int i = 0; i < 400; ++i) {
    const double x = -1.0 + 2.0 * (i + 0.5) / 400.0;
    text += fmt::format("{},{}\n", 3.0 * x + 0.01 * ((i * 7) % 5 - 2), x);
  }
  const auto path = dir.file("line.csv");
  testutil::write_text(path, text);
  const auto r = run(dir, "estimate --data " + path + " --x 0 --bw 0.3 --y-grid 2.3,2.5 --mu 0 --format json");
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  for (const auto& row : j["rows"])
    CHECK(row["estimate"].get<double>() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("exit codes")
{
  const CliFixture f;
  auto r = run(f.dir, "estimate --data " + f.normal + " --x 0 --p 1 --mu 2");
  CHECK(r.code == 2);
  CHECK(r.err.find("mu must be ≤ p") != std::string::npos);

  CHECK(run(f.dir, "estimate --data " + f.normal + " --x 0 --no-such-flag").code == 2);
  CHECK(run(f.dir, "estimate --x 0").code == 2);
  CHECK(run(f.dir, "estimate --data " + f.normal + " --x 0 --kernel gaussian").code == 2);
  CHECK(run(f.dir, "estimate --data " + f.normal + " --x 0,1").code == 2);
  r = run(f.dir, "estimate --data " + f.normal + " --x 0 --normalize");
  CHECK(r.code == 2);
  CHECK(r.err.find("not implemented") != std::string::npos);

  CHECK(run(f.dir, "estimate --data " + f.dir.file("missing.csv") + " --x 0").code == 3);
  CHECK(run(f.dir, "estimate --data " + f.normal + " --y-col nope --x 0").code == 3);

  r = run(f.dir, "estimate --data " + f.normal + " --x 0 --bw 0.01 --y-grid 20,21");
  CHECK(r.code == 4);
  CHECK(r.err.find("every grid point") != std::string::npos);
}

TEST_CASE("estimate: some failed points still exit 0 with warnings")
{
  const CliFixture f;
  const auto r = run(f.dir, "estimate --data " + f.normal + " --x 0 --bw 0.5 --y-grid -0.5,0,40 --format csv");
  CHECK(r.code == 0);
  CHECK(r.err.find("warning: grid point 3") != std::string::npos);
  CHECK(r.out.find(",NA,") != std::string::npos);
}

TEST_CASE("bandwidth subcommand")
{
  const CliFixture f;
  auto r = run(f.dir, "bandwidth --data " + f.normal + " --x 0 --grid-count 9 --bw-type mse-rot --format json");
  REQUIRE(r.code == 0);
  const auto mse = nlohmann::json::parse(r.out);
  REQUIRE(mse["rows"].size() == 9);
  for (const auto& row : mse["rows"])
    CHECK(row["bw"].get<double>() > 0.0);

  r = run(f.dir, "bandwidth --data " + f.normal + " --x 0 --grid-count 9 --bw-type imse-rot --format json");
  REQUIRE(r.code == 0);
  const auto imse = nlohmann::json::parse(r.out);
  for (const auto& row : imse["rows"])
    CHECK(row["bw"].get<double>() == imse["rows"][0]["bw"].get<double>());

  // eff_n matches the estimator at the selected bandwidths
  r = run(f.dir, "estimate --data " + f.normal + " --x 0 --grid-count 9 --format json");
  REQUIRE(r.code == 0);
  const auto est = nlohmann::json::parse(r.out);
  for (size_t g = 0; g < 9; ++g) {
    CHECK(est["rows"][g]["bw"].get<double>() == mse["rows"][g]["bw"].get<double>());
    CHECK(est["rows"][g]["eff_n"].get<long>() == mse["rows"][g]["eff_n"].get<long>());
  }

  r = run(f.dir, "bandwidth --data " + f.normal + " --x 0 --grid-count 9");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("y_grid") != std::string::npos);
  CHECK(r.out.find("mse-rot") != std::string::npos);
}

TEST_CASE("SVG output")
{
  const CliFixture f;
  const auto svg = f.dir.file("fit.svg");
  auto r = run(f.dir, "estimate --data " + f.normal + " --x 0 --bw 0.5 --grid-count 9 --svg " + svg);
  REQUIRE(r.code == 0);
  const auto text = testutil::read_text(svg);
  CHECK(count(text, "<polyline") == 1);
  CHECK(count(text, "<g class=\"errorbar\">") == 9);
  CHECK(count(text, "<polygon class=\"band\"") == 1);

  r = run(f.dir, "estimate --data " + f.normal + " --x 0 --bw 0.5 --y-grid 0 --svg " + svg);
  CHECK(r.code == 2);
  CHECK(r.err.find("need ≥ 2 grid points for plot") != std::string::npos);

  r = run(f.dir, "estimate --data " + f.normal + " --x 0 --bw 0.5 --svg /nonexistent-dir/fit.svg");
  CHECK(r.code == 3);
}

TEST_CASE("repeated invocations are byte-identical, independent of thread cap")
{
  const CliFixture f;
  const std::string base = "estimate --data " + f.normal + " --x 0 --grid-count 9 --seed 11";
  for (const char* format : { "json", "csv", "table" }) {
    const auto a = run(f.dir, base + " --format " + format);
    const auto b = run(f.dir, base + " --format " + format);
    const auto c = run(f.dir, base + " --format " + format, "CDE_THREADS=1");
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(a.out == c.out);
  }
  const auto s1 = f.dir.file("a.svg"), s2 = f.dir.file("b.svg");
  REQUIRE(run(f.dir, base + " --svg " + s1 + " --svg-rbc").code == 0);
  REQUIRE(run(f.dir, base + " --svg " + s2 + " --svg-rbc").code == 0);
  CHECK(testutil::read_text(s1) == testutil::read_text(s2));
}

TEST_CASE("mc smoke run and determinism")
{
  testutil::TempDir dir;
  const auto start = std::chrono::steady_clock::now();
  const auto a = run(dir, "mc --reps 10 --n 200 --seed 7 --out csv");
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  REQUIRE(a.code == 0);
  CHECK(seconds < 60.0);
  const auto b = run(dir, "mc --reps 10 --n 200 --seed 7 --out csv");
  CHECK(a.out == b.out);

  std::istringstream in(a.out);
  std::string line;
  std::getline(in, line);
  const auto columns = count(line, ",") + 1;
  CHECK(columns == 15);
  int rows = 0;
  while (std::getline(in, line)) {
    CHECK(count(line, ",") + 1 == columns);
    ++rows;
  }
  CHECK(rows == 2);

  const auto c = run(dir, "mc --reps 3 --n 200 --cells 1:0,0:1 --bw-mult 0.5,1 --out json");
  REQUIRE(c.code == 0);
  CHECK(nlohmann::json::parse(c.out)["rows"].size() == 8);
  CHECK(run(dir, "mc --cells 1-0").code == 2);
}
