#include "cde/estimator.hpp"
#include "cde/parallel.hpp"

#include <cmath>
#include <sstream>

namespace cde {

namespace {

// Kernel-weighted design restricted to the observations inside the window,
// in the bandwidth-scaled basis so the Gram matrix is scale free.
struct LocalDesign
{
  std::vector<Eigen::Index> active;
  Eigen::MatrixXd basis;
  Eigen::VectorXd weights;
};

std::string
describe_x(const Eigen::Ref<const Eigen::VectorXd>& x)
{
  std::ostringstream os;
  os << "(";
  for (Eigen::Index k = 0; k < x.size(); ++k)
    os << (k ? ", " : "") << x(k);
  os << ")";
  return os.str();
}

LocalDesign
first_stage_design(const DataSet& data,
                   const Eigen::Ref<const Eigen::VectorXd>& x_point,
                   double h,
                   int q,
                   KernelFamily kernel)
{
  if (!(h > 0.0))
    throw ConfigError("bandwidth must be positive");
  if (x_point.size() != data.d())
    throw ConfigError("conditioning point has dimension " + std::to_string(x_point.size()) +
                      " but data have " + std::to_string(data.d()) + " covariates");
  const MultiIndexSet ms(static_cast<int>(data.d()), q);
  LocalDesign design;
  std::vector<Eigen::VectorXd> rows;
  std::vector<double> weights;
  Eigen::VectorXd u(data.d());
  for (Eigen::Index j = 0; j < data.n(); ++j) {
    double w = 1.0;
    for (Eigen::Index k = 0; k < data.d(); ++k) {
      u(k) = (data.x()(j, k) - x_point(k)) / h;
      if (!kernel_positive(kernel, u(k))) {
        w = 0.0;
        break;
      }
      w *= kernel_value(kernel, u(k));
    }
    if (w > 0.0) {
      design.active.push_back(j);
      rows.push_back(poly_vector_x(ms, u));
      weights.push_back(w);
    }
  }
  const auto dim = static_cast<Eigen::Index>(ms.size());
  if (static_cast<Eigen::Index>(design.active.size()) < dim + 1)
    throw InsufficientLocalData("only " + std::to_string(design.active.size()) +
                                " observations in the x window at x = " + describe_x(x_point) +
                                ", h = " + std::to_string(h));
  design.basis.resize(static_cast<Eigen::Index>(rows.size()), dim);
  design.weights.resize(static_cast<Eigen::Index>(rows.size()));
  for (size_t r = 0; r < rows.size(); ++r) {
    design.basis.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
    design.weights(static_cast<Eigen::Index>(r)) = weights[r];
  }
  return design;
}

LocalDesign
second_stage_design(const DataSet& data, double y, double h, int p, KernelFamily kernel)
{
  if (!(h > 0.0))
    throw ConfigError("bandwidth must be positive");
  LocalDesign design;
  std::vector<double> us;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const double u = (data.y()(i) - y) / h;
    if (kernel_positive(kernel, u)) {
      design.active.push_back(i);
      us.push_back(u);
    }
  }
  if (static_cast<int>(design.active.size()) < p + 2)
    throw InsufficientLocalData("only " + std::to_string(design.active.size()) +
                                " observations in the y window at y = " + std::to_string(y) +
                                ", h = " + std::to_string(h));
  const auto rows = static_cast<Eigen::Index>(us.size());
  design.basis.resize(rows, p + 1);
  design.weights.resize(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    design.basis.row(r) = poly_vector_y(p, us[static_cast<size_t>(r)]).transpose();
    design.weights(r) = kernel_value(kernel, us[static_cast<size_t>(r)]);
  }
  return design;
}

// Solves the weighted normal equations for unit vector `target`; returns
// W B G^{-1} e_target over the active rows.
Eigen::VectorXd
projection_weights(const LocalDesign& design, Eigen::Index target, const std::string& where)
{
  const Eigen::MatrixXd weighted = design.basis.array().colwise() * design.weights.array();
  const Eigen::MatrixXd gram = design.basis.transpose() * weighted;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > max_gram_condition)
    throw InsufficientLocalData("ill-conditioned local Gram matrix at " + where);
  Eigen::VectorXd unit = Eigen::VectorXd::Zero(gram.rows());
  unit(target) = 1.0;
  const Eigen::VectorXd coef = gram.ldlt().solve(unit);
  return weighted * coef;
}

Eigen::VectorXd
scatter(const DataSet& data, const LocalDesign& design, const Eigen::VectorXd& local)
{
  Eigen::VectorXd full = Eigen::VectorXd::Zero(data.n());
  for (size_t r = 0; r < design.active.size(); ++r)
    full(design.active[r]) = local(static_cast<Eigen::Index>(r));
  return full;
}

} // namespace

Eigen::VectorXd
first_stage_weights(const DataSet& data,
                    const Eigen::Ref<const Eigen::VectorXd>& x_point,
                    double h,
                    int q,
                    const MultiIndex& nu,
                    KernelFamily kernel)
{
  const LocalDesign design = first_stage_design(data, x_point, h, q, kernel);
  const MultiIndexSet ms(static_cast<int>(data.d()), q);
  const auto target = static_cast<Eigen::Index>(unit_vector_index(ms, nu));
  int degree = 0;
  for (int v : nu)
    degree += v;
  const Eigen::VectorXd local = projection_weights(
    design, target, "x = " + describe_x(x_point) + ", h = " + std::to_string(h));
  return scatter(data, design, local) / std::pow(h, degree);
}

Eigen::VectorXd
first_stage_residuals(const DataSet& data,
                      const Eigen::Ref<const Eigen::VectorXd>& x_point,
                      double h,
                      int q,
                      KernelFamily kernel,
                      const Eigen::Ref<const Eigen::VectorXd>& response)
{
  const LocalDesign design = first_stage_design(data, x_point, h, q, kernel);
  Eigen::VectorXd local(static_cast<Eigen::Index>(design.active.size()));
  for (size_t r = 0; r < design.active.size(); ++r)
    local(static_cast<Eigen::Index>(r)) = response(design.active[r]);
  const Eigen::MatrixXd weighted = design.basis.array().colwise() * design.weights.array();
  const Eigen::MatrixXd gram = design.basis.transpose() * weighted;
  const Eigen::VectorXd coef = gram.ldlt().solve(weighted.transpose() * local);
  return scatter(data, design, local - design.basis * coef);
}

Eigen::VectorXd
first_stage_cdf_at_sample_points(const DataSet& data, const Eigen::Ref<const Eigen::VectorXd>& A)
{
  if (A.size() != data.n())
    throw ConfigError("weight vector length does not match the data");
  const auto& order = data.y_order();
  const auto& tie_end = data.tie_end();
  const auto n = static_cast<size_t>(data.n());
  Eigen::VectorXd v(data.n());
  double cumulative = 0.0;
  size_t k = 0;
  while (k < n) {
    const auto stop = static_cast<size_t>(tie_end[k]);
    for (size_t j = k; j < stop; ++j)
      cumulative += A(order[j]);
    for (size_t j = k; j < stop; ++j)
      v(order[j]) = cumulative;
    k = stop;
  }
  return v;
}

Eigen::VectorXd
second_stage_weights(const DataSet& data, double y, double h, int p, int mu, KernelFamily kernel)
{
  if (mu < 0 || mu > p)
    throw ConfigError("mu must be ≤ p");
  const LocalDesign design = second_stage_design(data, y, h, p, kernel);
  const Eigen::VectorXd local =
    projection_weights(design, mu, "y = " + std::to_string(y) + ", h = " + std::to_string(h));
  return scatter(data, design, local) / std::pow(h, mu);
}

long
effective_sample_size(const DataSet& data,
                      double y,
                      const Eigen::Ref<const Eigen::VectorXd>& x_point,
                      double h,
                      KernelFamily kernel)
{
  long count = 0;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    if (!kernel_positive(kernel, (data.y()(i) - y) / h))
      continue;
    bool inside = true;
    for (Eigen::Index k = 0; k < data.d() && inside; ++k)
      inside = kernel_positive(kernel, (data.x()(i, k) - x_point(k)) / h);
    count += inside ? 1 : 0;
  }
  return count;
}

double
estimate_point(const DataSet& data,
               double y,
               const Eigen::Ref<const Eigen::VectorXd>& x_point,
               double h,
               const EstimationConfig& config)
{
  config.validate(data.d());
  const Eigen::VectorXd A =
    first_stage_weights(data, x_point, h, config.q, config.nu_index(data.d()), config.kernel);
  const Eigen::VectorXd v = first_stage_cdf_at_sample_points(data, A);
  const Eigen::VectorXd b = second_stage_weights(data, y, h, config.p, config.mu, config.kernel);
  return b.dot(v);
}

std::vector<Eigen::Index>
WeightSet::valid_points() const
{
  std::vector<Eigen::Index> out;
  for (size_t g = 0; g < valid.size(); ++g)
    if (valid[g])
      out.push_back(static_cast<Eigen::Index>(g));
  return out;
}

WeightSet
compute_weights(const DataSet& data, const EvaluationSpec& spec, const EstimationConfig& config)
{
  config.validate(data.d());
  if (spec.x_point.size() != data.d())
    throw ConfigError("conditioning point has dimension " + std::to_string(spec.x_point.size()) +
                      " but data have " + std::to_string(data.d()) + " covariates");
  WeightSet ws;
  ws.spec = spec;
  ws.p = config.p;
  ws.q = config.q;
  ws.mu = config.mu;
  ws.nu = config.nu_index(data.d());
  ws.kernel = config.kernel;
  const auto m = spec.size();
  ws.first = Eigen::MatrixXd::Zero(m, data.n());
  ws.second = Eigen::MatrixXd::Zero(m, data.n());
  ws.eff_n.assign(static_cast<size_t>(m), 0);
  ws.valid.assign(static_cast<size_t>(m), false);
  ws.messages.assign(static_cast<size_t>(m), std::string());

  // vector<bool> is not safe for concurrent element writes
  std::vector<char> ok(static_cast<size_t>(m), 0);
  parallel_for(static_cast<size_t>(m), [&](size_t g) {
    const auto gi = static_cast<Eigen::Index>(g);
    const double h = spec.bandwidths(gi);
    ws.eff_n[g] = effective_sample_size(data, spec.y_grid(gi), spec.x_point, h, config.kernel);
    try {
      ws.first.row(gi) =
        first_stage_weights(data, spec.x_point, h, config.q, ws.nu, config.kernel).transpose();
      ws.second.row(gi) =
        second_stage_weights(data, spec.y_grid(gi), h, config.p, config.mu, config.kernel)
          .transpose();
      ok[g] = 1;
    } catch (const InsufficientLocalData& e) {
      ws.first.row(gi).setZero();
      ws.second.row(gi).setZero();
      ws.messages[g] = e.what();
    }
  });
  for (size_t g = 0; g < ok.size(); ++g)
    ws.valid[g] = ok[g] != 0;
  return ws;
}

Eigen::VectorXd
apply_weights(const DataSet& data, const WeightSet& weights)
{
  Eigen::VectorXd out =
    Eigen::VectorXd::Constant(weights.size(), std::numeric_limits<double>::quiet_NaN());
  for (Eigen::Index g : weights.valid_points()) {
    const Eigen::VectorXd v =
      first_stage_cdf_at_sample_points(data, weights.first.row(g).transpose());
    out(g) = weights.second.row(g).dot(v);
  }
  return out;
}

CdeFit
estimate_grid(const DataSet& data, const EvaluationSpec& spec, const EstimationConfig& config)
{
  return fit_from_weights(data, compute_weights(data, spec, config), config);
}

CdeFit
fit_from_weights(const DataSet& data, const WeightSet& ws, const EstimationConfig& config)
{
  const auto& spec = ws.spec;
  CdeFit fit;
  fit.spec = spec;
  fit.config = config;
  fit.estimates = apply_weights(data, ws);
  if (config.nonneg && config.mu == 1)
    fit.estimates = fit.estimates.unaryExpr([](double v) { return v < 0.0 ? 0.0 : v; });
  fit.eff_n = ws.eff_n;
  for (size_t g = 0; g < ws.valid.size(); ++g)
    if (!ws.valid[g])
      fit.warnings.push_back("grid point " + std::to_string(g + 1) + ": " + ws.messages[g]);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const auto m = spec.size();
  for (Eigen::VectorXd* field : { &fit.se, &fit.ci_lower, &fit.ci_upper, &fit.band_lower,
                                  &fit.band_upper, &fit.rbc_estimates, &fit.rbc_se,
                                  &fit.rbc_ci_lower, &fit.rbc_ci_upper, &fit.rbc_band_lower,
                                  &fit.rbc_band_upper })
    *field = Eigen::VectorXd::Constant(m, nan);
  fit.covariance = Eigen::MatrixXd::Constant(m, m, nan);
  fit.rbc_covariance = Eigen::MatrixXd::Constant(m, m, nan);
  return fit;
}

} // namespace cde
