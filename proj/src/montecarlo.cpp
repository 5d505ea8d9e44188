#include "cde/montecarlo.hpp"
#include "cde/inference.hpp"
#include "cde/parallel.hpp"

#include <cmath>
#include <fmt/format.h>
#include <limits>
#include <numbers>
#include <random>

namespace cde {

namespace {

std::uint64_t
derived_seed(std::initializer_list<std::uint64_t> parts)
{
  std::vector<std::uint32_t> words;
  for (std::uint64_t v : parts) {
    words.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

double
std_normal_pdf(double z)
{
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

bool
close(double a, double b)
{
  return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b));
}

} // namespace

void
DgpSpec::validate() const
{
  if (!(variance > 0.0) || !std::isfinite(variance))
    throw ConfigError("DGP variance must be positive");
  if (!std::isfinite(covariance) || !(std::abs(covariance) < variance))
    throw ConfigError("DGP covariance matrix must be positive definite");
  if (kind == DgpKind::truncated_bivariate_normal && !(lower < upper))
    throw ConfigError("DGP truncation box is empty");
}

DgpSpec
DgpSpec::standard_normal(std::uint64_t seed)
{
  DgpSpec out;
  out.seed = seed;
  return out;
}

DgpSpec
DgpSpec::truncated_reference(std::uint64_t seed)
{
  DgpSpec out;
  out.kind = DgpKind::truncated_bivariate_normal;
  out.variance = 2.0;
  out.covariance = -0.1;
  out.lower = -1.0;
  out.upper = 1.0;
  out.seed = seed;
  return out;
}

DgpSpec
parse_dgp(const std::string& name, std::uint64_t seed)
{
  if (name == "normal" || name == "bivariate_normal")
    return DgpSpec::standard_normal(seed);
  if (name == "truncated" || name == "truncated_bivariate_normal")
    return DgpSpec::truncated_reference(seed);
  throw ConfigError("unknown DGP '" + name + "' (expected normal or truncated)");
}

std::string
dgp_name(const DgpSpec& spec)
{
  return spec.kind == DgpKind::bivariate_normal ? "bivariate_normal" : "truncated_bivariate_normal";
}

DataSet
draw_dgp(const DgpSpec& spec, long n, std::uint64_t stream)
{
  spec.validate();
  if (n < 2)
    throw ConfigError("need at least 2 draws");
  std::seed_seq seq{ static_cast<std::uint32_t>(spec.seed & 0xffffffffu),
                     static_cast<std::uint32_t>(spec.seed >> 32),
                     static_cast<std::uint32_t>(stream & 0xffffffffu),
                     static_cast<std::uint32_t>(stream >> 32) };
  std::mt19937_64 engine(seq);
  std::normal_distribution<double> normal;

  const double sd_x = std::sqrt(spec.variance);
  const double slope = spec.covariance / spec.variance;
  const double sd_c = std::sqrt(spec.variance - spec.covariance * slope);
  const bool truncated = spec.kind == DgpKind::truncated_bivariate_normal;

  Eigen::VectorXd y(n);
  Eigen::MatrixXd x(n, 1);
  long accepted = 0;
  long trials = 0;
  while (accepted < n) {
    const double xv = sd_x * normal(engine);
    const double yv = slope * xv + sd_c * normal(engine);
    ++trials;
    if (truncated && (xv < spec.lower || xv > spec.upper || yv < spec.lower || yv > spec.upper)) {
      if (trials >= 10000 && static_cast<double>(accepted) < 1e-3 * static_cast<double>(trials))
        throw ConfigError("truncation box accepts fewer than 0.1% of draws");
      continue;
    }
    y(accepted) = yv;
    x(accepted, 0) = xv;
    ++accepted;
  }
  return DataSet(std::move(y), std::move(x));
}

double
true_conditional(const DgpSpec& spec, int mu, double y, double x)
{
  spec.validate();
  if (mu < 0 || mu > 2)
    throw ConfigError("true conditional is available for mu = 0, 1, 2 only");
  const double slope = spec.covariance / spec.variance;
  const double s = std::sqrt(spec.variance - spec.covariance * slope);
  const double z = (y - slope * x) / s;

  if (spec.kind == DgpKind::bivariate_normal) {
    switch (mu) {
      case 0:
        return normal_cdf(z);
      case 1:
        return std_normal_pdf(z) / s;
      default:
        return -z * std_normal_pdf(z) / (s * s);
    }
  }

  if (x < spec.lower || x > spec.upper)
    throw ConfigError("conditioning point lies outside the truncation box");
  if (y < spec.lower)
    return 0.0;
  if (y > spec.upper)
    return mu == 0 ? 1.0 : 0.0;
  const double z_lo = (spec.lower - slope * x) / s;
  const double z_hi = (spec.upper - slope * x) / s;
  const double c_lo = normal_cdf(z_lo);
  const double mass = normal_cdf(z_hi) - c_lo;
  switch (mu) {
    case 0:
      return (normal_cdf(z) - c_lo) / mass;
    case 1:
      return std_normal_pdf(z) / (s * mass);
    default:
      return -z * std_normal_pdf(z) / (s * s * mass);
  }
}

const CoverageRow&
CoverageReport::row(int mu, double x, double multiplier, const std::string& estimator) const
{
  for (const auto& r : rows)
    if (r.mu == mu && close(r.x, x) && close(r.multiplier, multiplier) && r.estimator == estimator)
      return r;
  throw ConfigError("no such coverage row");
}

const PointCoverageRow&
CoverageReport::point(int mu, double x, double multiplier, const std::string& estimator, double y) const
{
  for (const auto& r : points)
    if (r.mu == mu && close(r.x, x) && close(r.multiplier, multiplier) && r.estimator == estimator &&
        std::abs(r.y - y) <= 1e-9)
      return r;
  throw ConfigError("no such grid point in the coverage report");
}

namespace {

//! One fit's outputs at every grid point.
struct FitScore
{
  Eigen::VectorXd estimates;
  Eigen::VectorXd se;
  Eigen::VectorXd ci_lower;
  Eigen::VectorXd ci_upper;
  Eigen::VectorXd band_lower;
  Eigen::VectorXd band_upper;
  Eigen::VectorXd bandwidths;
  std::vector<long> eff_n;
};

struct Replication
{
  bool ok = false;
  std::string message;
  //! indexed [cell][multiplier][estimator]
  std::vector<FitScore> scores;
};

constexpr const char* estimator_labels[2] = { "WBC", "RBC" };

Replication
run_replication(const DgpSpec& spec, const CoverageOptions& options, const Eigen::VectorXd& grid, int rep)
{
  Replication out;
  try {
    const DataSet data = draw_dgp(spec, options.n, static_cast<std::uint64_t>(rep));
    for (size_t c = 0; c < options.cells.size(); ++c) {
      EstimationConfig config;
      config.mu = options.cells[c].mu;
      config.p = options.p;
      config.q = options.q;
      config.kernel = options.kernel;
      config.alpha = options.alpha;
      config.band_sims = options.band_sims;
      const Eigen::VectorXd x_point = Eigen::VectorXd::Constant(1, options.cells[c].x);
      const BandwidthSelection sel = select_bandwidths(data, grid, x_point, config, BandwidthRule::mse_rot);

      for (size_t k = 0; k < options.multipliers.size(); ++k) {
        const Eigen::VectorXd h = options.multipliers[k] * sel.bandwidths;
        const EvaluationSpec eval(grid, x_point, h);
        const std::uint64_t band_seed = derived_seed({ spec.seed, static_cast<std::uint64_t>(rep), c, k });
        const CdeFit fit = fit_cde(data, eval, config, band_seed);

        FitScore wbc{ fit.estimates, fit.se, fit.ci_lower, fit.ci_upper, fit.band_lower, fit.band_upper, h, fit.eff_n };
        FitScore rbc{ fit.rbc_estimates, fit.rbc_se,         fit.rbc_ci_lower, fit.rbc_ci_upper,
                      fit.rbc_band_lower, fit.rbc_band_upper, h,                fit.eff_n };
        for (const FitScore* s : { &wbc, &rbc })
          if (!s->estimates.allFinite() || !s->ci_lower.allFinite() || !s->band_lower.allFinite())
            throw InsufficientLocalData(
              fmt::format("replication {}: estimation failed at some grid point (mu = {}, x = {})", rep,
                          config.mu, options.cells[c].x));
        out.scores.push_back(std::move(wbc));
        out.scores.push_back(std::move(rbc));
      }
    }
    out.ok = true;
  } catch (const Error& e) {
    out.ok = false;
    out.scores.clear();
    out.message = e.what();
  }
  return out;
}

} // namespace

CoverageReport
run_coverage_study(const DgpSpec& spec, const CoverageOptions& options)
{
  spec.validate();
  if (options.reps < 1)
    throw ConfigError("reps must be at least 1");
  if (options.n < 10)
    throw ConfigError("n must be at least 10");
  if (options.cells.empty() || options.multipliers.empty())
    throw ConfigError("coverage study needs at least one cell and one bandwidth multiplier");
  if (options.grid_points < 1 || !(options.grid_lower <= options.grid_upper))
    throw ConfigError("invalid coverage grid");
  for (double mult : options.multipliers)
    if (!(mult > 0.0) || !std::isfinite(mult))
      throw ConfigError("bandwidth multipliers must be positive");
  for (const auto& cell : options.cells)
    if (cell.mu < 0 || cell.mu > 2)
      throw ConfigError("coverage cells need mu in {0, 1, 2}");

  const auto m = static_cast<Eigen::Index>(options.grid_points);
  Eigen::VectorXd grid = Eigen::VectorXd::Constant(1, options.grid_lower);
  if (m > 1)
    grid = Eigen::VectorXd::LinSpaced(m, options.grid_lower, options.grid_upper);

  std::vector<Replication> reps(static_cast<size_t>(options.reps));
  parallel_for(reps.size(), [&](size_t r) { reps[r] = run_replication(spec, options, grid, static_cast<int>(r)); });

  CoverageReport report;
  report.reps = options.reps;
  report.n = options.n;
  report.seed = spec.seed;
  report.dgp = dgp_name(spec);
  std::string first_failure;
  for (const auto& r : reps)
    if (!r.ok) {
      ++report.failures;
      if (first_failure.empty())
        first_failure = r.message;
    }
  const int used = options.reps - report.failures;
  if (used == 0 || static_cast<double>(report.failures) > options.max_failure_rate * options.reps)
    throw NumericalError(fmt::format("coverage study aborted: {} of {} replications failed (first: {})",
                                     report.failures, options.reps, first_failure));

  const double nu = static_cast<double>(used);
  size_t slot = 0;
  for (const auto& cell : options.cells) {
    Eigen::VectorXd truth(m);
    for (Eigen::Index g = 0; g < m; ++g)
      truth(g) = true_conditional(spec, cell.mu, grid(g), cell.x);

    for (double mult : options.multipliers) {
      for (int e = 0; e < 2; ++e, ++slot) {
        Eigen::VectorXd err_sum = Eigen::VectorXd::Zero(m);
        Eigen::VectorXd se_sum = Eigen::VectorXd::Zero(m);
        Eigen::VectorXd hit = Eigen::VectorXd::Zero(m);
        Eigen::VectorXd width_sum = Eigen::VectorXd::Zero(m);
        Eigen::VectorXd h_sum = Eigen::VectorXd::Zero(m);
        Eigen::VectorXd eff_sum = Eigen::VectorXd::Zero(m);
        double uniform_hits = 0.0;
        double band_width = 0.0;
        double wider = 0.0;

        for (const auto& r : reps) {
          if (!r.ok)
            continue;
          const FitScore& s = r.scores[slot];
          bool all_inside = true;
          for (Eigen::Index g = 0; g < m; ++g) {
            err_sum(g) += s.estimates(g) - truth(g);
            se_sum(g) += s.se(g);
            hit(g) += (s.ci_lower(g) <= truth(g) && truth(g) <= s.ci_upper(g)) ? 1.0 : 0.0;
            width_sum(g) += s.ci_upper(g) - s.ci_lower(g);
            h_sum(g) += s.bandwidths(g);
            eff_sum(g) += static_cast<double>(s.eff_n[static_cast<size_t>(g)]);
            all_inside = all_inside && s.band_lower(g) <= truth(g) && truth(g) <= s.band_upper(g);
          }
          uniform_hits += all_inside ? 1.0 : 0.0;
          const double rep_band = (s.band_upper - s.band_lower).mean();
          const double rep_ci = (s.ci_upper - s.ci_lower).mean();
          band_width += rep_band;
          wider += rep_band >= rep_ci ? 1.0 : 0.0;
        }

        CoverageRow row;
        row.mu = cell.mu;
        row.x = cell.x;
        row.multiplier = mult;
        row.estimator = estimator_labels[e];
        row.mean_bandwidth = h_sum.mean() / nu;
        row.mean_abs_bias = (err_sum / nu).cwiseAbs().mean();
        row.mean_se = se_sum.mean() / nu;
        row.pointwise_coverage = 100.0 * hit.mean() / nu;
        row.uniform_coverage = 100.0 * uniform_hits / nu;
        row.pointwise_width = width_sum.mean() / nu;
        row.uniform_width = band_width / nu;
        row.uniform_wider = 100.0 * wider / nu;
        report.rows.push_back(row);

        for (Eigen::Index g = 0; g < m; ++g) {
          PointCoverageRow point;
          point.mu = cell.mu;
          point.x = cell.x;
          point.multiplier = mult;
          point.estimator = estimator_labels[e];
          point.y = grid(g);
          point.mean_bandwidth = h_sum(g) / nu;
          point.mean_eff_n = eff_sum(g) / nu;
          point.bias = err_sum(g) / nu;
          point.mean_se = se_sum(g) / nu;
          point.coverage = 100.0 * hit(g) / nu;
          point.width = width_sum(g) / nu;
          report.points.push_back(point);
        }
      }
    }
  }
  return report;
}

} // namespace cde
