#include "cde/inference.hpp"
#include "cde/parallel.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <fmt/format.h>
#include <limits>
#include <random>

namespace cde {

double
normal_quantile(double probability)
{
  if (!(probability > 0.0 && probability < 1.0))
    throw ConfigError("normal quantile needs a probability in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), probability);
}

double
normal_cdf(double z)
{
  return boost::math::cdf(boost::math::normal_distribution<double>(), z);
}

namespace {

void
check_alpha(double alpha)
{
  if (!(alpha > 0.0 && alpha < 1.0))
    throw ConfigError("alpha must lie in (0, 1)");
}

std::mt19937_64
chunk_engine(std::uint64_t seed, std::uint64_t chunk)
{
  std::seed_seq seq{ static_cast<std::uint32_t>(seed & 0xffffffffu),
                     static_cast<std::uint32_t>(seed >> 32),
                     static_cast<std::uint32_t>(chunk & 0xffffffffu),
                     static_cast<std::uint32_t>(chunk >> 32) };
  return std::mt19937_64(seq);
}

int
chunk_count(int sims)
{
  return (sims + band_chunk_size - 1) / band_chunk_size;
}

//! Fills `out` column by column from the stream of chunk `chunk`.
void
fill_chunk(Eigen::MatrixXd& out, std::uint64_t seed, int chunk, int sims)
{
  auto engine = chunk_engine(seed, static_cast<std::uint64_t>(chunk));
  std::normal_distribution<double> normal;
  const int begin = chunk * band_chunk_size;
  const int end = std::min(sims, begin + band_chunk_size);
  for (int s = begin; s < end; ++s)
    for (Eigen::Index r = 0; r < out.rows(); ++r)
      out(r, s - begin) = normal(engine);
}

} // namespace

Interval
standard_ci(const Eigen::VectorXd& estimates, const Eigen::MatrixXd& covariance, double alpha)
{
  check_alpha(alpha);
  if (covariance.rows() != estimates.size() || covariance.cols() != estimates.size())
    throw ConfigError("covariance does not match the number of estimates");
  const Eigen::VectorXd diag = covariance.diagonal();
  for (Eigen::Index g = 0; g < diag.size(); ++g)
    if (diag(g) < 0.0)
      throw NumericalError(fmt::format("negative variance at grid point {}", g + 1));
  const double z = normal_quantile(1.0 - alpha / 2.0);
  const Eigen::VectorXd half = z * diag.cwiseSqrt();
  return { estimates - half, estimates + half };
}

std::pair<Eigen::MatrixXd, std::vector<Eigen::Index>>
correlation_matrix(const Eigen::MatrixXd& covariance)
{
  std::vector<Eigen::Index> keep;
  for (Eigen::Index g = 0; g < covariance.rows(); ++g)
    if (covariance(g, g) > 0.0)
      keep.push_back(g);
  const auto k = static_cast<Eigen::Index>(keep.size());
  Eigen::MatrixXd corr(k, k);
  for (Eigen::Index r = 0; r < k; ++r)
    for (Eigen::Index c = 0; c < k; ++c) {
      const auto gr = keep[static_cast<size_t>(r)];
      const auto gc = keep[static_cast<size_t>(c)];
      corr(r, c) = r == c ? 1.0 : covariance(gr, gc) / std::sqrt(covariance(gr, gr) * covariance(gc, gc));
    }
  return { corr, keep };
}

Eigen::MatrixXd
symmetric_sqrt(const Eigen::MatrixXd& matrix)
{
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (matrix + matrix.transpose()));
  if (eig.info() != Eigen::Success)
    throw NumericalError("eigen decomposition failed");
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

Eigen::MatrixXd
standard_normal_draws(Eigen::Index dim, int sims, std::uint64_t seed)
{
  Eigen::MatrixXd out(dim, sims);
  for (int c = 0; c < chunk_count(sims); ++c) {
    const int begin = c * band_chunk_size;
    const int width = std::min(sims, begin + band_chunk_size) - begin;
    Eigen::MatrixXd chunk(dim, width);
    fill_chunk(chunk, seed, c, sims);
    out.middleCols(begin, width) = chunk;
  }
  return out;
}

std::vector<double>
sup_abs(const Eigen::MatrixXd& draws)
{
  std::vector<double> out(static_cast<size_t>(draws.cols()));
  for (Eigen::Index s = 0; s < draws.cols(); ++s)
    out[static_cast<size_t>(s)] = draws.col(s).cwiseAbs().maxCoeff();
  return out;
}

double
upper_quantile(std::vector<double> values, double level)
{
  if (values.empty())
    throw ConfigError("quantile of an empty sample");
  const auto size = static_cast<double>(values.size());
  auto k = static_cast<size_t>(std::ceil(level * size - 1e-9));
  k = std::clamp<size_t>(k, 1, values.size()) - 1;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k), values.end());
  return values[k];
}

BandCritical
band_critical_value(const Eigen::MatrixXd& covariance, double alpha, int sims, std::uint64_t seed)
{
  check_alpha(alpha);
  if (sims < 1)
    throw ConfigError("band_sims must be positive");
  if (covariance.rows() != covariance.cols() || covariance.rows() < 1)
    throw ConfigError("band critical value needs a non-empty square covariance");
  const auto [corr, keep] = correlation_matrix(covariance);
  if (keep.empty())
    throw NumericalError("covariance is zero at every grid point");
  const Eigen::MatrixXd root = symmetric_sqrt(corr);

  std::vector<double> sups(static_cast<size_t>(sims));
  parallel_for(static_cast<size_t>(chunk_count(sims)), [&](size_t c) {
    const int begin = static_cast<int>(c) * band_chunk_size;
    const int width = std::min(sims, begin + band_chunk_size) - begin;
    Eigen::MatrixXd eps(root.rows(), width);
    fill_chunk(eps, seed, static_cast<int>(c), sims);
    const Eigen::MatrixXd z = root * eps;
    for (int s = 0; s < width; ++s)
      sups[static_cast<size_t>(begin + s)] = z.col(s).cwiseAbs().maxCoeff();
  });

  BandCritical out;
  out.sims = sims;
  out.seed = seed;
  out.value = std::max(upper_quantile(std::move(sups), 1.0 - alpha), normal_quantile(1.0 - alpha / 2.0));
  return out;
}

UniformBand
uniform_band(const Eigen::VectorXd& estimates,
             const Eigen::MatrixXd& covariance,
             double alpha,
             int sims,
             std::uint64_t seed)
{
  UniformBand out;
  out.critical = band_critical_value(covariance, alpha, sims, seed);
  const Eigen::VectorXd half = out.critical.value * covariance.diagonal().cwiseSqrt();
  out.lower = estimates - half;
  out.upper = estimates + half;
  return out;
}

RbcResult
rbc_fit(const DataSet& data, const EvaluationSpec& spec, const EstimationConfig& config)
{
  EstimationConfig higher = config;
  higher.p = config.p + 1;
  higher.q = config.q + 1;
  RbcResult out;
  out.weights = compute_weights(data, spec, higher);
  out.estimates = apply_weights(data, out.weights);
  if (config.nonneg && config.mu == 1)
    out.estimates = out.estimates.unaryExpr([](double v) { return v < 0.0 ? 0.0 : v; });
  out.covariance = vstat_covariance(data, out.weights, out.estimates);
  return out;
}

namespace {

struct Inference
{
  Eigen::VectorXd se;
  Interval ci;
  Interval band;
  double critical = 0.0;
};

Inference
infer(const Eigen::VectorXd& estimates,
      const CovarianceEstimate& covariance,
      const EstimationConfig& config,
      std::uint64_t seed,
      const std::string& label,
      std::vector<std::string>& warnings)
{
  Inference out;
  const auto m = estimates.size();
  out.se = covariance.matrix.diagonal().cwiseSqrt();
  out.ci = standard_ci(estimates, covariance.matrix, config.alpha);
  // rounding-level negative eigenvalues are routine and not worth reporting
  if (covariance.repaired && covariance.min_eigen_before < -1e-10 * covariance.matrix.diagonal().sum())
    warnings.push_back(fmt::format("{} covariance was not positive semi-definite (smallest eigenvalue {:.3g}); "
                                   "negative eigenvalues clipped",
                                   label, covariance.min_eigen_before));

  std::vector<Eigen::Index> valid;
  for (Eigen::Index g = 0; g < m; ++g)
    if (std::isfinite(estimates(g)) && std::isfinite(covariance.matrix(g, g)))
      valid.push_back(g);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  out.band = { Eigen::VectorXd::Constant(m, nan), Eigen::VectorXd::Constant(m, nan) };
  out.critical = nan;
  if (valid.empty())
    return out;

  const auto k = static_cast<Eigen::Index>(valid.size());
  Eigen::MatrixXd sub(k, k);
  for (Eigen::Index r = 0; r < k; ++r)
    for (Eigen::Index c = 0; c < k; ++c)
      sub(r, c) = covariance.matrix(valid[static_cast<size_t>(r)], valid[static_cast<size_t>(c)]);
  try {
    out.critical = band_critical_value(sub, config.alpha, config.band_sims, seed).value;
  } catch (const NumericalError&) {
    out.critical = normal_quantile(1.0 - config.alpha / 2.0);
    warnings.push_back(label + " standard errors are all zero; the band reduces to the estimates");
  }
  for (Eigen::Index g : valid) {
    out.band.first(g) = estimates(g) - out.critical * out.se(g);
    out.band.second(g) = estimates(g) + out.critical * out.se(g);
  }
  return out;
}

} // namespace

CdeFit
fit_cde(const DataSet& data, const EvaluationSpec& spec, const EstimationConfig& config, std::uint64_t seed)
{
  const WeightSet ws = compute_weights(data, spec, config);
  CdeFit fit = fit_from_weights(data, ws, config);
  if (ws.valid_points().empty())
    return fit;
  const CovarianceEstimate cov = vstat_covariance(data, ws, fit.estimates);
  fit.covariance = cov.matrix;
  const Inference standard = infer(fit.estimates, cov, config, seed, "standard", fit.warnings);
  fit.se = standard.se;
  fit.ci_lower = standard.ci.first;
  fit.ci_upper = standard.ci.second;
  fit.band_lower = standard.band.first;
  fit.band_upper = standard.band.second;
  fit.band_critical = standard.critical;

  const RbcResult rbc = rbc_fit(data, spec, config);
  for (size_t g = 0; g < rbc.weights.valid.size(); ++g)
    if (ws.valid[g] && !rbc.weights.valid[g])
      fit.warnings.push_back(fmt::format("grid point {}: robust bias-corrected fit failed: {}", g + 1,
                                         rbc.weights.messages[g]));
  fit.rbc_estimates = rbc.estimates;
  fit.rbc_covariance = rbc.covariance.matrix;
  const Inference robust = infer(rbc.estimates, rbc.covariance, config, seed, "robust bias-corrected", fit.warnings);
  fit.rbc_se = robust.se;
  fit.rbc_ci_lower = robust.ci.first;
  fit.rbc_ci_upper = robust.ci.second;
  fit.rbc_band_lower = robust.band.first;
  fit.rbc_band_upper = robust.band.second;
  fit.rbc_band_critical = robust.critical;
  return fit;
}

} // namespace cde
