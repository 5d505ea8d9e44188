// Command-line front end: estimate, bandwidth and mc subcommands.

#include "cde/bandwidth.hpp"
#include "cde/inference.hpp"
#include "cde/montecarlo.hpp"
#include "cde/report.hpp"

#include "CLI11.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>

namespace {

constexpr int exit_config = 2;
constexpr int exit_data = 3;
constexpr int exit_numerical = 4;

struct EstimateFlags
{
  std::string data;
  std::string y_col = "y";
  std::vector<std::string> x_cols{ "x" };
  std::vector<double> x;
  std::vector<double> y_grid;
  int grid_count = 19;
  int mu = 1;
  std::vector<int> nu;
  int p = 2;
  int q = 1;
  std::string kernel = "epanechnikov";
  std::string bw = "mse-rot";
  double alpha = 0.05;
  int band_sims = 2000;
  std::uint64_t seed = 42;
  std::string format = "table";
  std::string svg;
  bool svg_rbc = false;
  bool nonneg = false;
  bool normalize = false;
};

struct McFlags
{
  std::string dgp = "truncated";
  int reps = 500;
  long n = 1000;
  std::vector<std::string> cells{ "1:0" };
  std::vector<double> multipliers{ 1.0 };
  int grid_count = 20;
  double alpha = 0.05;
  int band_sims = 2000;
  std::uint64_t seed = 42;
  std::string out = "table";
  bool points = false;
};

void
add_shared(CLI::App& cmd, EstimateFlags& f)
{
  cmd.add_option("--data", f.data, "CSV file with a header row")->required();
  cmd.add_option("--y-col", f.y_col, "response column");
  cmd.add_option("--x-cols", f.x_cols, "covariate columns (comma separated)")->delimiter(',');
  cmd.add_option("--x", f.x, "conditioning point (comma separated)")->delimiter(',')->required();
  auto* grid = cmd.add_option("--y-grid", f.y_grid, "evaluation grid (comma separated, increasing)")->delimiter(',');
  cmd.add_option("--grid-count", f.grid_count, "number of quantile-spaced grid points")->excludes(grid);
  cmd.add_option("--mu", f.mu, "derivative order in y (0 = CDF, 1 = PDF)");
  cmd.add_option("--nu", f.nu, "derivative multi-index in x (comma separated)")->delimiter(',');
  cmd.add_option("--p", f.p, "polynomial order in y");
  cmd.add_option("--q", f.q, "polynomial order in x");
  cmd.add_option("--kernel", f.kernel, "epanechnikov, uniform or triangular");
  cmd.add_option("--alpha", f.alpha, "one minus the confidence level");
  cmd.add_option("--format", f.format, "table, json or csv")->check(CLI::IsMember({ "table", "json", "csv" }));
  cmd.add_flag("--nonneg", f.nonneg, "clamp density estimates at zero");
  cmd.add_flag("--normalize", f.normalize, "normalize density estimates (not implemented)");
}

cde::EstimationConfig
make_config(const EstimateFlags& f)
{
  cde::EstimationConfig config;
  config.mu = f.mu;
  config.nu = f.nu;
  config.p = f.p;
  config.q = f.q;
  config.kernel = cde::parse_kernel(f.kernel);
  config.alpha = f.alpha;
  config.band_sims = f.band_sims;
  config.nonneg = f.nonneg;
  config.normalize = f.normalize;
  return config;
}

//! A number means a fixed bandwidth; anything else names a rule.
std::pair<cde::BandwidthRule, double>
parse_bw(const std::string& spec)
{
  double value = 0.0;
  const auto* end = spec.data() + spec.size();
  const auto [ptr, ec] = std::from_chars(spec.data(), end, value);
  if (ec == std::errc() && ptr == end) {
    if (!(value > 0.0) || !std::isfinite(value))
      throw cde::ConfigError("bandwidth must be positive and finite");
    return { cde::BandwidthRule::fixed, value };
  }
  const auto rule = cde::parse_rule(spec);
  if (rule == cde::BandwidthRule::fixed)
    throw cde::ConfigError("a fixed bandwidth is given as a number");
  return { rule, 0.0 };
}

struct Prepared
{
  cde::DataSet data;
  cde::EstimationConfig config;
  Eigen::VectorXd grid;
  Eigen::VectorXd x;
};

Prepared
prepare(const EstimateFlags& f)
{
  cde::EstimationConfig config = make_config(f);
  cde::DataSet data = cde::load_dataset(f.data, f.y_col, f.x_cols);
  config.validate(data.d());
  if (static_cast<Eigen::Index>(f.x.size()) != data.d())
    throw cde::ConfigError("--x needs " + std::to_string(data.d()) + " coordinate(s)");
  Eigen::VectorXd grid;
  if (!f.y_grid.empty())
    grid = Eigen::Map<const Eigen::VectorXd>(f.y_grid.data(), static_cast<Eigen::Index>(f.y_grid.size()));
  else {
    if (f.grid_count < 1)
      throw cde::ConfigError("--grid-count must be positive");
    grid = cde::default_grid(data, f.grid_count);
  }
  Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(f.x.data(), static_cast<Eigen::Index>(f.x.size()));
  return { std::move(data), config, std::move(grid), std::move(x) };
}

void
print_warnings(const std::vector<std::string>& warnings)
{
  for (const auto& w : warnings)
    std::cerr << "warning: " << w << "\n";
}

int
run_estimate(const EstimateFlags& f)
{
  const Prepared prep = prepare(f);
  const auto [rule, fixed_h] = parse_bw(f.bw);
  const cde::BandwidthSelection sel = cde::select_bandwidths(prep.data, prep.grid, prep.x, prep.config, rule, fixed_h);
  const cde::EvaluationSpec spec(prep.grid, prep.x, sel.bandwidths);
  cde::CdeFit fit = cde::fit_cde(prep.data, spec, prep.config, f.seed);
  fit.warnings.insert(fit.warnings.begin(), sel.warnings.begin(), sel.warnings.end());

  if (!fit.estimates.array().isFinite().any()) {
    print_warnings(fit.warnings);
    std::cerr << "error: estimation failed at every grid point\n";
    return exit_numerical;
  }
  const cde::RunInfo info{ "estimate", static_cast<long>(prep.data.n()), cde::rule_name(rule), f.seed };
  if (!f.svg.empty())
    cde::write_file(f.svg, cde::fit_svg(fit, f.svg_rbc ? cde::PlotIntervals::robust : cde::PlotIntervals::standard));
  if (f.format == "json")
    std::cout << cde::fit_json(fit, info);
  else if (f.format == "csv")
    std::cout << cde::fit_csv(fit);
  else
    std::cout << cde::fit_table(fit, info);
  if (f.format != "table")
    print_warnings(fit.warnings);
  return 0;
}

int
run_bandwidth(const EstimateFlags& f)
{
  const Prepared prep = prepare(f);
  const auto [rule, fixed_h] = parse_bw(f.bw);
  const cde::BandwidthSelection sel = cde::select_bandwidths(prep.data, prep.grid, prep.x, prep.config, rule, fixed_h);
  const cde::RunInfo info{ "bandwidth", static_cast<long>(prep.data.n()), cde::rule_name(rule), f.seed };
  if (f.format == "json")
    std::cout << cde::bandwidth_json(sel, prep.config, info);
  else if (f.format == "csv")
    std::cout << cde::bandwidth_csv(sel);
  else
    std::cout << cde::bandwidth_table(sel, prep.config, info);
  if (f.format != "table")
    print_warnings(sel.warnings);
  return 0;
}

cde::CoverageCell
parse_cell(const std::string& text)
{
  const auto colon = text.find(':');
  if (colon == std::string::npos)
    throw cde::ConfigError("cells are written mu:x, got '" + text + "'");
  cde::CoverageCell cell;
  try {
    size_t used = 0;
    cell.mu = std::stoi(text.substr(0, colon), &used);
    if (used != colon)
      throw std::invalid_argument("mu");
    const std::string xs = text.substr(colon + 1);
    cell.x = std::stod(xs, &used);
    if (used != xs.size())
      throw std::invalid_argument("x");
  } catch (const std::logic_error&) {
    throw cde::ConfigError("cannot parse cell '" + text + "' (expected mu:x)");
  }
  return cell;
}

int
run_mc(const McFlags& f)
{
  const cde::DgpSpec spec = cde::parse_dgp(f.dgp, f.seed);
  cde::CoverageOptions options;
  options.cells.clear();
  for (const auto& c : f.cells)
    options.cells.push_back(parse_cell(c));
  options.multipliers = f.multipliers;
  options.reps = f.reps;
  options.n = f.n;
  options.grid_points = f.grid_count;
  options.alpha = f.alpha;
  options.band_sims = f.band_sims;
  const cde::CoverageReport report = cde::run_coverage_study(spec, options);
  if (f.out == "csv")
    std::cout << cde::coverage_csv(report, f.points);
  else if (f.out == "json")
    std::cout << cde::coverage_json(report);
  else
    std::cout << cde::coverage_table(report);
  return 0;
}

} // namespace

int
main(int argc, char** argv)
{
  CLI::App app{ "Local polynomial conditional distribution and density estimation" };
  app.require_subcommand(1);

  EstimateFlags est;
  auto* estimate = app.add_subcommand("estimate", "estimate over a grid with intervals and bands");
  add_shared(*estimate, est);
  estimate->add_option("--bw", est.bw, "bandwidth: a number, mse-rot or imse-rot");
  estimate->add_option("--band-sims", est.band_sims, "Gaussian draws for the uniform band");
  estimate->add_option("--seed", est.seed, "seed for the band simulation");
  estimate->add_option("--svg", est.svg, "write a plot of the fit");
  estimate->add_flag("--svg-rbc", est.svg_rbc, "plot robust bias-corrected intervals and band");

  EstimateFlags bw;
  auto* bandwidth = app.add_subcommand("bandwidth", "rule-of-thumb bandwidth selection");
  add_shared(*bandwidth, bw);
  bandwidth->add_option("--bw,--bw-type", bw.bw, "mse-rot, imse-rot or a number");

  McFlags mc;
  auto* sim = app.add_subcommand("mc", "Monte Carlo coverage study");
  sim->add_option("--dgp", mc.dgp, "truncated or normal");
  sim->add_option("--reps", mc.reps, "replications");
  sim->add_option("--n", mc.n, "sample size per replication");
  sim->add_option("--cells", mc.cells, "mu:x pairs (comma separated)")->delimiter(',');
  sim->add_option("--bw-mult", mc.multipliers, "bandwidth multipliers (comma separated)")->delimiter(',');
  sim->add_option("--grid-count", mc.grid_count, "evenly spaced grid points on [0, 1]");
  sim->add_option("--alpha", mc.alpha, "one minus the confidence level");
  sim->add_option("--band-sims", mc.band_sims, "Gaussian draws for the uniform band");
  sim->add_option("--seed", mc.seed, "seed");
  sim->add_option("--out", mc.out, "table, csv or json")->check(CLI::IsMember({ "table", "csv", "json" }));
  sim->add_flag("--points", mc.points, "CSV rows per grid point");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_config;
  }

  try {
    if (*estimate)
      return run_estimate(est);
    if (*bandwidth)
      return run_bandwidth(bw);
    return run_mc(mc);
  } catch (const cde::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_config;
  } catch (const cde::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_data;
  } catch (const cde::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_numerical;
  }
}
