#include "cde/bandwidth.hpp"
#include "cde/covariance.hpp"
#include "cde/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>

namespace cde {

namespace {

double
column_sd(const Eigen::Ref<const Eigen::VectorXd>& v)
{
  const double mean = v.mean();
  return std::sqrt((v.array() - mean).square().sum() / static_cast<double>(v.size() - 1));
}

double
pooled_sd(const DataSet& data)
{
  double log_sum = 0.0;
  const double sy = column_sd(data.y());
  if (!(sy > 0.0))
    throw DataError("y has zero variance");
  log_sum += std::log(sy);
  for (Eigen::Index k = 0; k < data.d(); ++k) {
    const double sx = column_sd(data.x().col(k));
    if (!(sx > 0.0))
      throw DataError(fmt::format("covariate {} has zero variance", k + 1));
    log_sum += std::log(sx);
  }
  return std::exp(log_sum / static_cast<double>(data.d() + 1));
}

//! Var of the estimate at a single point, from the covariance module.
double
point_variance(const DataSet& data,
               double y,
               const Eigen::Ref<const Eigen::VectorXd>& x_point,
               double h,
               const EstimationConfig& config)
{
  EvaluationSpec spec(Eigen::VectorXd::Constant(1, y), Eigen::VectorXd(x_point), h);
  const WeightSet ws = compute_weights(data, spec, config);
  if (!ws.valid[0])
    throw InsufficientLocalData(ws.messages[0]);
  const Eigen::VectorXd est = apply_weights(data, ws);
  return vstat_covariance(data, ws, est).matrix(0, 0);
}

//! Runs `body(h)` at h, growing h by 1.5 up to five times while the window
//! is too small.
template<typename Body>
double
with_growing_window(double& h, Body body)
{
  for (int attempt = 0;; ++attempt) {
    try {
      return body(h);
    } catch (const InsufficientLocalData&) {
      if (attempt == 5)
        throw;
      h *= 1.5;
    }
  }
}

double
integer_power(double base, int exponent)
{
  return std::pow(base, static_cast<double>(exponent));
}

//! Kernel constants on the window of bandwidth h at (y, x), clipped to the
//! observed support.
struct WindowConstants
{
  double second = 0.0;
  Eigen::VectorXd first;
};

WindowConstants
window_constants(const DataSet& data,
                 double y,
                 const Eigen::Ref<const Eigen::VectorXd>& x_point,
                 double h,
                 const EstimationConfig& config)
{
  const auto d = data.d();
  WindowConstants out;
  const double lo = std::max(-1.0, (data.y_min() - y) / h);
  const double hi = std::min(1.0, (data.y_max() - y) / h);
  out.second = hi > lo ? second_stage_bias_constant(config.kernel, config.p, config.mu, lo, hi) : 0.0;

  Eigen::VectorXd xlo(d), xhi(d);
  bool empty = false;
  for (Eigen::Index k = 0; k < d; ++k) {
    xlo(k) = std::max(-1.0, (data.x_min()(k) - x_point(k)) / h);
    xhi(k) = std::min(1.0, (data.x_max()(k) - x_point(k)) / h);
    empty = empty || !(xhi(k) > xlo(k));
  }
  const size_t block = MultiIndexSet(static_cast<int>(d), config.q + 1).degree_block(config.q + 1).size();
  out.first = empty ? Eigen::VectorXd::Zero(static_cast<Eigen::Index>(block))
                    : first_stage_bias_constants(config.kernel, config.q, config.nu_index(d), xlo, xhi);
  return out;
}

double
first_stage_bias(const WindowConstants& c, const MomentEstimates& moments)
{
  double out = 0.0;
  for (Eigen::Index k = 0; k < c.first.size(); ++k)
    out += c.first(k) * moments.first_stage_derivatives[static_cast<size_t>(k)];
  return out;
}

void
check_even_case(const EstimationConfig& config, std::vector<std::string>& warnings)
{
  if ((config.p - config.mu) % 2 == 0 || (config.q - config.nu_order()) % 2 == 0)
    warnings.push_back("p - mu or q - |nu| is even: the plug-in bandwidth is not guaranteed to be "
                       "MSE-optimal");
}

double
median(std::vector<double> values)
{
  std::sort(values.begin(), values.end());
  const size_t k = values.size() / 2;
  return values.size() % 2 == 1 ? values[k] : 0.5 * (values[k - 1] + values[k]);
}

} // namespace

std::string
rule_name(BandwidthRule rule)
{
  switch (rule) {
    case BandwidthRule::mse_rot:
      return "mse-rot";
    case BandwidthRule::imse_rot:
      return "imse-rot";
    case BandwidthRule::fixed:
      return "fixed";
  }
  return "unknown";
}

BandwidthRule
parse_rule(const std::string& name)
{
  if (name == "mse-rot")
    return BandwidthRule::mse_rot;
  if (name == "imse-rot")
    return BandwidthRule::imse_rot;
  if (name == "fixed")
    return BandwidthRule::fixed;
  throw ConfigError("unknown bandwidth rule '" + name + "' (expected mse-rot or imse-rot)");
}

double
pilot_bandwidth(const DataSet& data)
{
  if (data.n() < 10)
    throw DataError("need at least 10 observations to select a bandwidth");
  const double n = static_cast<double>(data.n());
  return 1.06 * pooled_sd(data) * std::pow(n, -1.0 / static_cast<double>(data.d() + 4));
}

double
bias_reference_bandwidth(const DataSet& data)
{
  return bias_reference_scale * pooled_sd(data);
}

double
second_stage_bias_constant(KernelFamily kernel, int p, int mu, double lower, double upper)
{
  Eigen::MatrixXd gram(p + 1, p + 1);
  Eigen::VectorXd target(p + 1);
  for (int j = 0; j <= p; ++j) {
    for (int k = 0; k <= p; ++k)
      gram(j, k) = kernel_moment(kernel, j + k, lower, upper) / (factorial(j) * factorial(k));
    target(j) = kernel_moment(kernel, j + p + 1, lower, upper) / (factorial(j) * factorial(p + 1));
  }
  return gram.ldlt().solve(target)(mu);
}

Eigen::VectorXd
first_stage_bias_constants(KernelFamily kernel,
                           int q,
                           const MultiIndex& nu,
                           const Eigen::Ref<const Eigen::VectorXd>& lower,
                           const Eigen::Ref<const Eigen::VectorXd>& upper)
{
  const int d = static_cast<int>(lower.size());
  const MultiIndexSet basis(d, q);
  const MultiIndexSet outer(d, q + 1);
  const auto block = outer.degree_block(q + 1);

  // separable moments: int u^a L(u) du over the box is a product over axes
  auto box_moment = [&](const MultiIndex& a, const MultiIndex& b) {
    double out = 1.0;
    for (int k = 0; k < d; ++k)
      out *= kernel_moment(kernel, a[static_cast<size_t>(k)] + b[static_cast<size_t>(k)], lower(k), upper(k));
    return out / (multi_factorial(a) * multi_factorial(b));
  };

  const auto dim = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXd gram(dim, dim);
  Eigen::MatrixXd targets(dim, static_cast<Eigen::Index>(block.size()));
  for (Eigen::Index j = 0; j < dim; ++j) {
    for (Eigen::Index k = 0; k < dim; ++k)
      gram(j, k) = box_moment(basis[static_cast<size_t>(j)], basis[static_cast<size_t>(k)]);
    for (size_t b = 0; b < block.size(); ++b)
      targets(j, static_cast<Eigen::Index>(b)) = box_moment(basis[static_cast<size_t>(j)], outer[block[b]]);
  }
  const Eigen::MatrixXd solved = gram.ldlt().solve(targets);
  return solved.row(static_cast<Eigen::Index>(unit_vector_index(basis, nu))).transpose();
}

MomentEstimates
estimate_moments(const DataSet& data,
                 double y,
                 const Eigen::Ref<const Eigen::VectorXd>& x_point,
                 const EstimationConfig& config,
                 double pilot_h)
{
  config.validate(data.d());
  if (!(pilot_h > 0.0) || !std::isfinite(pilot_h))
    throw ConfigError("pilot bandwidth must be positive and finite");
  const auto d = data.d();
  const int nu_order = config.nu_order();
  MomentEstimates out;

  double h = pilot_h;
  const double var = with_growing_window(h, [&](double hh) { return point_variance(data, y, x_point, hh, config); });
  out.pilot_h = h;
  const int a = static_cast<int>(d) + 2 * config.mu + 2 * nu_order + 1;
  out.variance_const = static_cast<double>(data.n()) * integer_power(h, a) * var;

  double h_ref = std::max(h, bias_reference_bandwidth(data));
  EstimationConfig second = config;
  second.mu = config.p + 1;
  second.p = config.p + 2;
  second.nonneg = false;
  out.second_stage_derivative =
    with_growing_window(h_ref, [&](double hh) { return estimate_point(data, y, x_point, hh, second); });

  const MultiIndexSet outer(static_cast<int>(d), config.q + 1);
  for (size_t k : outer.degree_block(config.q + 1)) {
    EstimationConfig first = config;
    first.q = config.q + 2;
    first.nu = outer[k];
    first.nonneg = false;
    out.first_stage_derivatives.push_back(
      with_growing_window(h_ref, [&](double hh) { return estimate_point(data, y, x_point, hh, first); }));
  }
  out.reference_h = h_ref;

  const WindowConstants c = window_constants(data, y, x_point, out.pilot_h, config);
  out.bias_q1 = first_stage_bias(c, out);
  out.bias_p1 = c.second * out.second_stage_derivative;

  if (!(out.variance_const > 0.0) || !std::isfinite(out.variance_const))
    throw InsufficientLocalData(fmt::format("estimated variance is not positive at y = {}", y));
  if (!std::isfinite(out.bias_q1) || !std::isfinite(out.bias_p1))
    throw NumericalError(fmt::format("bias constants are not finite at y = {}", y));
  return out;
}

BandwidthLimits
bandwidth_limits(const DataSet& data,
                 double y,
                 const Eigen::Ref<const Eigen::VectorXd>& x_point,
                 const EstimationConfig& config)
{
  const auto n = data.n();
  const auto d = data.d();
  const auto need = static_cast<Eigen::Index>(
    std::max(basis_dimension(static_cast<int>(d), config.q) + 2, static_cast<size_t>(config.p) + 2));
  if (need > n)
    throw InsufficientLocalData(fmt::format("need at least {} observations, have {}", need, n));

  std::vector<double> dist(static_cast<size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    double r = std::abs(data.y()(i) - y);
    for (Eigen::Index k = 0; k < d; ++k)
      r = std::max(r, std::abs(data.x()(i, k) - x_point(k)));
    dist[static_cast<size_t>(i)] = r;
  }
  std::nth_element(dist.begin(), dist.begin() + (need - 1), dist.end());
  BandwidthLimits out;
  out.floor = dist[static_cast<size_t>(need - 1)] * (1.0 + 1e-9);

  out.ceil = data.y_max() - data.y_min();
  for (Eigen::Index k = 0; k < d; ++k)
    out.ceil = std::max(out.ceil, data.x_max()(k) - data.x_min()(k));
  if (!(out.floor > 0.0))
    out.floor = std::numeric_limits<double>::min();
  out.ceil = std::max(out.ceil, out.floor);
  return out;
}

double
mse_objective(const MomentEstimates& moments, double h, long n, int d, int mu, int p, int q, int nu_order)
{
  const int a = d + 2 * mu + 2 * nu_order + 1;
  const double variance = moments.variance_const / (static_cast<double>(n) * integer_power(h, a));
  const double bias =
    integer_power(h, q + 1 - nu_order) * moments.bias_q1 + integer_power(h, p + 1 - mu) * moments.bias_p1;
  return variance + bias * bias;
}

double
minimize_bandwidth(const std::function<double(double)>& objective, double lower, double upper)
{
  if (!(lower > 0.0) || !(upper >= lower))
    throw ConfigError("invalid bandwidth search interval");
  if (upper == lower)
    return lower;

  auto value = [&](double t) {
    const double v = objective(std::exp(t));
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  constexpr int grid_points = 50;
  const double t0 = std::log(lower);
  const double t1 = std::log(upper);
  const double step = (t1 - t0) / (grid_points - 1);
  int best = -1;
  double best_value = std::numeric_limits<double>::infinity();
  for (int k = 0; k < grid_points; ++k) {
    const double v = value(t0 + step * k);
    if (v < best_value) {
      best_value = v;
      best = k;
    }
  }
  if (best < 0)
    throw NumericalError("bandwidth objective is not finite anywhere on the search interval");

  double a = t0 + step * std::max(best - 1, 0);
  double b = t0 + step * std::min(best + 1, grid_points - 1);
  const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - ratio * (b - a);
  double e = a + ratio * (b - a);
  double fc = value(c);
  double fe = value(e);
  for (int it = 0; it < 200 && (b - a) > 1e-12; ++it) {
    if (fc <= fe) {
      b = e;
      e = c;
      fe = fc;
      c = b - ratio * (b - a);
      fc = value(c);
    } else {
      a = c;
      c = e;
      fc = fe;
      e = a + ratio * (b - a);
      fe = value(e);
    }
  }
  const double t_mid = 0.5 * (a + b);
  const double f_mid = value(t_mid);
  const double t_grid = t0 + step * best;
  const double t_best = f_mid <= best_value ? t_mid : t_grid;
  return std::clamp(std::exp(t_best), lower, upper);
}

double
select_mse_bandwidth(const MomentEstimates& moments,
                     long n,
                     int d,
                     int mu,
                     int p,
                     int q,
                     const BandwidthLimits& limits,
                     int nu_order)
{
  if (!(moments.variance_const > 0.0))
    throw ConfigError("variance constant must be positive");
  return minimize_bandwidth(
    [&](double h) { return mse_objective(moments, h, n, d, mu, p, q, nu_order); }, limits.floor, limits.ceil);
}

std::function<double(double)>
point_mse(const DataSet& data,
          double y,
          const Eigen::Ref<const Eigen::VectorXd>& x_point,
          const EstimationConfig& config,
          const MomentEstimates& moments)
{
  const Eigen::VectorXd x = x_point;
  const long n = static_cast<long>(data.n());
  const int a = static_cast<int>(data.d()) + 2 * config.mu + 2 * config.nu_order() + 1;
  const int first_exp = config.q + 1 - config.nu_order();
  const int second_exp = config.p + 1 - config.mu;
  return [&data, y, x, config, moments, n, a, first_exp, second_exp](double h) {
    const WindowConstants c = window_constants(data, y, x, h, config);
    const double variance = moments.variance_const / (static_cast<double>(n) * integer_power(h, a));
    const double bias = integer_power(h, first_exp) * first_stage_bias(c, moments) +
                        integer_power(h, second_exp) * c.second * moments.second_stage_derivative;
    return variance + bias * bias;
  };
}

namespace {

struct PointPlan
{
  MomentEstimates moments;
  BandwidthLimits limits;
  bool ok = false;
  std::string message;
};

std::vector<PointPlan>
plan_points(const DataSet& data,
            const Eigen::VectorXd& grid,
            const Eigen::Ref<const Eigen::VectorXd>& x_point,
            const EstimationConfig& config)
{
  const double pilot = pilot_bandwidth(data);
  std::vector<PointPlan> plans(static_cast<size_t>(grid.size()));
  const Eigen::VectorXd x = x_point;
  parallel_for(plans.size(), [&](size_t g) {
    const double y = grid(static_cast<Eigen::Index>(g));
    try {
      plans[g].limits = bandwidth_limits(data, y, x, config);
      plans[g].moments = estimate_moments(data, y, x, config, pilot);
      plans[g].ok = true;
    } catch (const InsufficientLocalData& e) {
      plans[g].message = e.what();
    } catch (const NumericalError& e) {
      plans[g].message = e.what();
    }
  });
  return plans;
}

} // namespace

namespace {

double
imse_from_plans(const DataSet& data,
                const Eigen::VectorXd& grid,
                const Eigen::Ref<const Eigen::VectorXd>& x_point,
                const EstimationConfig& config,
                const std::vector<PointPlan>& plans)
{
  std::vector<std::function<double(double)>> terms;
  BandwidthLimits limits{0.0, 0.0};
  for (size_t g = 0; g < plans.size(); ++g) {
    if (!plans[g].ok)
      continue;
    const double y = grid(static_cast<Eigen::Index>(g));
    terms.push_back(point_mse(data, y, x_point, config, plans[g].moments));
    limits.floor = std::max(limits.floor, plans[g].limits.floor);
    limits.ceil = std::max(limits.ceil, plans[g].limits.ceil);
  }
  if (terms.empty())
    throw InsufficientLocalData("bandwidth selection failed at every grid point: " + plans.front().message);
  limits.ceil = std::max(limits.ceil, limits.floor);
  return minimize_bandwidth(
    [&](double h) {
      double total = 0.0;
      for (const auto& t : terms)
        total += t(h);
      return total / static_cast<double>(terms.size());
    },
    limits.floor,
    limits.ceil);
}

} // namespace

double
select_imse_bandwidth(const DataSet& data,
                      const Eigen::VectorXd& grid,
                      const Eigen::Ref<const Eigen::VectorXd>& x_point,
                      const EstimationConfig& config)
{
  config.validate(data.d());
  if (grid.size() < 2)
    throw ConfigError("IMSE bandwidth needs at least 2 grid points");
  return imse_from_plans(data, grid, x_point, config, plan_points(data, grid, x_point, config));
}

BandwidthSelection
select_bandwidths(const DataSet& data,
                  const Eigen::VectorXd& grid,
                  const Eigen::Ref<const Eigen::VectorXd>& x_point,
                  const EstimationConfig& config,
                  BandwidthRule rule,
                  double fixed_h)
{
  config.validate(data.d());
  if (x_point.size() != data.d())
    throw ConfigError(fmt::format("x point has {} coordinates, data has {} covariates", x_point.size(), data.d()));
  if (grid.size() < 1)
    throw ConfigError("grid is empty");
  const auto m = grid.size();
  BandwidthSelection out;
  out.grid = grid;
  out.rule = rule;
  out.moments.resize(static_cast<size_t>(m));

  switch (rule) {
    case BandwidthRule::fixed:
      if (!(fixed_h > 0.0) || !std::isfinite(fixed_h))
        throw ConfigError("bandwidth must be positive and finite");
      out.bandwidths = Eigen::VectorXd::Constant(m, fixed_h);
      break;
    case BandwidthRule::imse_rot: {
      check_even_case(config, out.warnings);
      const auto plans = plan_points(data, grid, x_point, config);
      for (size_t g = 0; g < plans.size(); ++g) {
        out.moments[g] = plans[g].moments;
        if (!plans[g].ok)
          out.warnings.push_back(fmt::format("grid point {}: {}", g + 1, plans[g].message));
      }
      out.bandwidths = Eigen::VectorXd::Constant(m, imse_from_plans(data, grid, x_point, config, plans));
      break;
    }
    case BandwidthRule::mse_rot: {
      check_even_case(config, out.warnings);
      const auto plans = plan_points(data, grid, x_point, config);
      out.bandwidths = Eigen::VectorXd::Constant(m, std::numeric_limits<double>::quiet_NaN());
      parallel_for(plans.size(), [&](size_t g) {
        if (!plans[g].ok)
          return;
        const auto gi = static_cast<Eigen::Index>(g);
        out.bandwidths(gi) = minimize_bandwidth(
          point_mse(data, grid(gi), x_point, config, plans[g].moments), plans[g].limits.floor, plans[g].limits.ceil);
      });
      std::vector<double> chosen;
      for (size_t g = 0; g < plans.size(); ++g) {
        out.moments[g] = plans[g].moments;
        if (plans[g].ok)
          chosen.push_back(out.bandwidths(static_cast<Eigen::Index>(g)));
      }
      if (chosen.empty())
        throw InsufficientLocalData("bandwidth selection failed at every grid point: " + plans.front().message);
      const double fallback = median(chosen);
      for (size_t g = 0; g < plans.size(); ++g) {
        if (plans[g].ok)
          continue;
        out.bandwidths(static_cast<Eigen::Index>(g)) = fallback;
        out.warnings.push_back(fmt::format(
          "grid point {}: bandwidth selection failed ({}); using the median selected bandwidth", g + 1, plans[g].message));
      }
      break;
    }
  }

  out.eff_n.resize(static_cast<size_t>(m));
  for (Eigen::Index g = 0; g < m; ++g)
    out.eff_n[static_cast<size_t>(g)] = effective_sample_size(data, grid(g), x_point, out.bandwidths(g), config.kernel);
  return out;
}

} // namespace cde
