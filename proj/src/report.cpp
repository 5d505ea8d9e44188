#include "cde/report.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <limits>

namespace cde {

namespace {

using nlohmann::json;

std::string
nu_text(const MultiIndex& nu)
{
  if (nu.empty() || std::all_of(nu.begin(), nu.end(), [](int v) { return v == 0; }))
    return "0";
  std::string out;
  for (size_t k = 0; k < nu.size(); ++k)
    out += (k ? "," : "") + std::to_string(nu[k]);
  return out;
}

std::string
option_block(const EstimationConfig& config, const RunInfo& info)
{
  auto line = [](const std::string& label, const std::string& tag, const std::string& value) {
    return fmt::format("{:<45}{:<9}{}\n", label, tag, value);
  };
  std::string out = "Call: " + info.call + "\n\n";
  out += line("Sample size", "", std::to_string(info.n));
  out += line("Polynomial order for Y point estimation", "(p=)", std::to_string(config.p));
  out += line("Polynomial order for X point estimation", "(q=)", std::to_string(config.q));
  out += line("Density function estimated", "(mu=)", std::to_string(config.mu));
  out += line("Order of derivative estimated for covariates", "(nu=)", nu_text(config.nu));
  out += line("Kernel function", "", kernel_name(config.kernel));
  out += line("Bandwidth method", "", info.bw_method);
  return out + "\n";
}

std::string
num(double v, int width)
{
  return std::isfinite(v) ? fmt::format("{:>{}.4f}", v, width) : fmt::format("{:>{}}", "NA", width);
}

//! Shortest text that reads back to the same double; NA for NaN.
std::string
csv_num(double v)
{
  return std::isfinite(v) ? fmt::format("{}", v) : "NA";
}

json
json_num(double v)
{
  return std::isfinite(v) ? json(v) : json(nullptr);
}

json
config_json(const EstimationConfig& config, const RunInfo& info)
{
  return json{ { "call", info.call },
               { "n", info.n },
               { "p", config.p },
               { "q", config.q },
               { "mu", config.mu },
               { "nu", config.nu },
               { "kernel", kernel_name(config.kernel) },
               { "bandwidth_method", info.bw_method },
               { "alpha", config.alpha },
               { "band_sims", config.band_sims },
               { "seed", info.seed } };
}

std::string
confidence_label(double alpha)
{
  return fmt::format("[ {:g}% C.I. ]", 100.0 * (1.0 - alpha));
}

} // namespace

std::string
fit_table(const CdeFit& fit, const RunInfo& info)
{
  const auto m = fit.size();
  const std::string rule_heavy(77, '=');
  const std::string rule_light(77, '-');
  std::string out = option_block(fit.config, info);
  out += rule_heavy + "\n";
  out += fmt::format("{:<6}{:>8}{:>10}{:>8}{:>10}{:>10}{:>19}\n", "", "", "", "", "Point", "Std.", "Robust B.C.");
  out += fmt::format("{:<6}{:>8}{:>10}{:>8}{:>10}{:>10}     {}\n", "Index", "Grid", "B.W.", "Eff.n", "Est.", "Error",
                     confidence_label(fit.config.alpha));
  out += rule_heavy + "\n";
  const Eigen::Index half = (m + 1) / 2;
  for (Eigen::Index g = 0; g < m; ++g) {
    const auto gi = static_cast<size_t>(g);
    out += fmt::format("{:<6}{}{}{:>8}{}{}{} ,{}\n", g + 1, num(fit.spec.y_grid(g), 8), num(fit.spec.bandwidths(g), 10),
                       fit.eff_n.empty() ? 0 : fit.eff_n[gi], num(fit.estimates(g), 10), num(fit.se(g), 10),
                       num(fit.rbc_ci_lower(g), 11), num(fit.rbc_ci_upper(g), 8));
    if (g + 1 == half && g + 1 < m)
      out += rule_light + "\n";
  }
  out += rule_heavy + "\n";
  for (const auto& w : fit.warnings)
    out += "warning: " + w + "\n";
  return out;
}

std::string
fit_json(const CdeFit& fit, const RunInfo& info)
{
  json rows = json::array();
  for (Eigen::Index g = 0; g < fit.size(); ++g) {
    rows.push_back(json{ { "index", g + 1 },
                         { "grid", fit.spec.y_grid(g) },
                         { "bw", fit.spec.bandwidths(g) },
                         { "eff_n", fit.eff_n[static_cast<size_t>(g)] },
                         { "estimate", json_num(fit.estimates(g)) },
                         { "se", json_num(fit.se(g)) },
                         { "ci_lower", json_num(fit.ci_lower(g)) },
                         { "ci_upper", json_num(fit.ci_upper(g)) },
                         { "band_lower", json_num(fit.band_lower(g)) },
                         { "band_upper", json_num(fit.band_upper(g)) },
                         { "rbc_estimate", json_num(fit.rbc_estimates(g)) },
                         { "rbc_se", json_num(fit.rbc_se(g)) },
                         { "rbc_ci_lower", json_num(fit.rbc_ci_lower(g)) },
                         { "rbc_ci_upper", json_num(fit.rbc_ci_upper(g)) },
                         { "rbc_band_lower", json_num(fit.rbc_band_lower(g)) },
                         { "rbc_band_upper", json_num(fit.rbc_band_upper(g)) } });
  }
  json x = json::array();
  for (Eigen::Index k = 0; k < fit.spec.x_point.size(); ++k)
    x.push_back(fit.spec.x_point(k));
  json out{ { "metadata", config_json(fit.config, info) },
            { "x", x },
            { "band_critical", json_num(fit.band_critical) },
            { "rbc_band_critical", json_num(fit.rbc_band_critical) },
            { "rows", rows },
            { "warnings", fit.warnings } };
  return out.dump(2) + "\n";
}

std::string
fit_csv(const CdeFit& fit)
{
  std::string out = "index,grid,bw,eff_n,estimate,se,ci_lower,ci_upper,band_lower,band_upper,rbc_estimate,rbc_se,"
                    "rbc_ci_lower,rbc_ci_upper,rbc_band_lower,rbc_band_upper\n";
  for (Eigen::Index g = 0; g < fit.size(); ++g) {
    out += fmt::format("{},{},{},{}", g + 1, csv_num(fit.spec.y_grid(g)), csv_num(fit.spec.bandwidths(g)),
                       fit.eff_n[static_cast<size_t>(g)]);
    for (const Eigen::VectorXd* v : { &fit.estimates, &fit.se, &fit.ci_lower, &fit.ci_upper, &fit.band_lower,
                                      &fit.band_upper, &fit.rbc_estimates, &fit.rbc_se, &fit.rbc_ci_lower,
                                      &fit.rbc_ci_upper, &fit.rbc_band_lower, &fit.rbc_band_upper })
      out += "," + csv_num((*v)(g));
    out += "\n";
  }
  return out;
}

std::string
bandwidth_table(const BandwidthSelection& selection, const EstimationConfig& config, const RunInfo& info)
{
  const auto m = selection.grid.size();
  const std::string rule_heavy(34, '=');
  std::string out = option_block(config, info);
  out += rule_heavy + "\n";
  out += fmt::format("{:<6}{:>10}{:>10}{:>8}\n", "Index", "y_grid", "B.W.", "Eff.n");
  out += rule_heavy + "\n";
  const Eigen::Index half = (m + 1) / 2;
  for (Eigen::Index g = 0; g < m; ++g) {
    out += fmt::format("{:<6}{}{}{:>8}\n", g + 1, num(selection.grid(g), 10), num(selection.bandwidths(g), 10),
                       selection.eff_n[static_cast<size_t>(g)]);
    if (g + 1 == half && g + 1 < m)
      out += std::string(34, '-') + "\n";
  }
  out += rule_heavy + "\n";
  for (const auto& w : selection.warnings)
    out += "warning: " + w + "\n";
  return out;
}

std::string
bandwidth_json(const BandwidthSelection& selection, const EstimationConfig& config, const RunInfo& info)
{
  json rows = json::array();
  for (Eigen::Index g = 0; g < selection.grid.size(); ++g) {
    const auto gi = static_cast<size_t>(g);
    json row{ { "index", g + 1 },
              { "y_grid", selection.grid(g) },
              { "bw", selection.bandwidths(g) },
              { "eff_n", selection.eff_n[gi] } };
    if (selection.rule != BandwidthRule::fixed) {
      const auto& mo = selection.moments[gi];
      row["bias_q1"] = json_num(mo.bias_q1);
      row["bias_p1"] = json_num(mo.bias_p1);
      row["variance_const"] = json_num(mo.variance_const);
      row["pilot_h"] = json_num(mo.pilot_h);
    }
    rows.push_back(row);
  }
  json out{ { "metadata", config_json(config, info) }, { "rows", rows }, { "warnings", selection.warnings } };
  return out.dump(2) + "\n";
}

std::string
bandwidth_csv(const BandwidthSelection& selection)
{
  std::string out = "index,y_grid,bw,eff_n\n";
  for (Eigen::Index g = 0; g < selection.grid.size(); ++g)
    out += fmt::format("{},{},{},{}\n", g + 1, csv_num(selection.grid(g)), csv_num(selection.bandwidths(g)),
                       selection.eff_n[static_cast<size_t>(g)]);
  return out;
}

std::string
coverage_table(const CoverageReport& report)
{
  std::string out = fmt::format("DGP {}  n = {}  replications = {} ({} failed)  seed = {}\n\n", report.dgp, report.n,
                                report.reps, report.failures, report.seed);
  const std::string rule(96, '=');
  out += rule + "\n";
  out += fmt::format("{:>4}{:>8}{:>7}{:>6}{:>9}{:>9}{:>9}{:>11}{:>11}{:>11}{:>11}\n", "mu", "x", "mult", "", "h_ROT",
                     "bias", "se", "PW cov", "UNI cov", "PW width", "UNI width");
  out += rule + "\n";
  for (const auto& r : report.rows)
    out += fmt::format("{:>4}{:>8.2f}{:>7.2f}{:>6}{:>9.4f}{:>9.4f}{:>9.4f}{:>11.1f}{:>11.1f}{:>11.4f}{:>11.4f}\n", r.mu,
                       r.x, r.multiplier, r.estimator, r.mean_bandwidth, r.mean_abs_bias, r.mean_se,
                       r.pointwise_coverage, r.uniform_coverage, r.pointwise_width, r.uniform_width);
  out += rule + "\n";
  return out;
}

std::string
coverage_csv(const CoverageReport& report, bool points)
{
  std::string out;
  if (points) {
    out = "dgp,n,reps,failures,mu,x,multiplier,estimator,y,h_rot,eff_n,bias,se,coverage,width\n";
    for (const auto& r : report.points)
      out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", report.dgp, report.n, report.reps,
                         report.failures, r.mu, csv_num(r.x), csv_num(r.multiplier), r.estimator, csv_num(r.y),
                         csv_num(r.mean_bandwidth), csv_num(r.mean_eff_n), csv_num(r.bias), csv_num(r.mean_se),
                         csv_num(r.coverage), csv_num(r.width));
    return out;
  }
  out = "dgp,n,reps,failures,mu,x,multiplier,estimator,h_rot,bias,se,pointwise_coverage,uniform_coverage,"
        "pointwise_width,uniform_width\n";
  for (const auto& r : report.rows)
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", report.dgp, report.n, report.reps,
                       report.failures, r.mu, csv_num(r.x), csv_num(r.multiplier), r.estimator,
                       csv_num(r.mean_bandwidth), csv_num(r.mean_abs_bias), csv_num(r.mean_se),
                       csv_num(r.pointwise_coverage), csv_num(r.uniform_coverage), csv_num(r.pointwise_width),
                       csv_num(r.uniform_width));
  return out;
}

std::string
coverage_json(const CoverageReport& report)
{
  json rows = json::array();
  for (const auto& r : report.rows)
    rows.push_back(json{ { "mu", r.mu },
                         { "x", r.x },
                         { "multiplier", r.multiplier },
                         { "estimator", r.estimator },
                         { "h_rot", r.mean_bandwidth },
                         { "bias", r.mean_abs_bias },
                         { "se", r.mean_se },
                         { "pointwise_coverage", r.pointwise_coverage },
                         { "uniform_coverage", r.uniform_coverage },
                         { "pointwise_width", r.pointwise_width },
                         { "uniform_width", r.uniform_width },
                         { "uniform_wider", r.uniform_wider } });
  json points = json::array();
  for (const auto& r : report.points)
    points.push_back(json{ { "mu", r.mu },
                           { "x", r.x },
                           { "multiplier", r.multiplier },
                           { "estimator", r.estimator },
                           { "y", r.y },
                           { "h_rot", r.mean_bandwidth },
                           { "eff_n", r.mean_eff_n },
                           { "bias", r.bias },
                           { "se", r.mean_se },
                           { "coverage", r.coverage },
                           { "width", r.width } });
  json out{ { "dgp", report.dgp },     { "n", report.n },   { "reps", report.reps }, { "failures", report.failures },
            { "seed", report.seed },   { "rows", rows },    { "points", points } };
  return out.dump(2) + "\n";
}

std::string
fit_svg(const CdeFit& fit, PlotIntervals intervals)
{
  const bool robust = intervals == PlotIntervals::robust;
  const Eigen::VectorXd& est = robust ? fit.rbc_estimates : fit.estimates;
  const Eigen::VectorXd& lo = robust ? fit.rbc_ci_lower : fit.ci_lower;
  const Eigen::VectorXd& hi = robust ? fit.rbc_ci_upper : fit.ci_upper;
  const Eigen::VectorXd& blo = robust ? fit.rbc_band_lower : fit.band_lower;
  const Eigen::VectorXd& bhi = robust ? fit.rbc_band_upper : fit.band_upper;

  std::vector<Eigen::Index> shown;
  for (Eigen::Index g = 0; g < fit.size(); ++g)
    if (std::isfinite(est(g)))
      shown.push_back(g);
  if (shown.size() < 2)
    throw ConfigError("need ≥ 2 grid points for plot");

  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0;
  double y0 = x0, y1 = -x0;
  for (Eigen::Index g : shown) {
    x0 = std::min(x0, fit.spec.y_grid(g));
    x1 = std::max(x1, fit.spec.y_grid(g));
    for (double v : { est(g), lo(g), hi(g), blo(g), bhi(g) })
      if (std::isfinite(v)) {
        y0 = std::min(y0, v);
        y1 = std::max(y1, v);
      }
  }
  if (!(y1 > y0)) {
    y0 -= 0.5;
    y1 += 0.5;
  }
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;

  constexpr double width = 640, height = 400, left = 70, right = 20, top = 20, bottom = 50;
  auto px = [&](double v) { return left + (v - x0) / (x1 - x0) * (width - left - right); };
  auto py = [&](double v) { return top + (y1 - v) / (y1 - y0) * (height - top - bottom); };
  auto xy = [](double a, double b) { return fmt::format("{:.2f},{:.2f}", a, b); };

  std::string out = fmt::format(
    "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" viewBox=\"0 0 {:.0f} {:.0f}\">\n",
    width, height, width, height);
  out += "<rect x=\"0\" y=\"0\" width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // band: upper edge left to right, lower edge right to left
  std::string band;
  for (Eigen::Index g : shown)
    if (std::isfinite(bhi(g)))
      band += xy(px(fit.spec.y_grid(g)), py(bhi(g))) + " ";
  for (auto it = shown.rbegin(); it != shown.rend(); ++it)
    if (std::isfinite(blo(*it)))
      band += xy(px(fit.spec.y_grid(*it)), py(blo(*it))) + " ";
  if (!band.empty())
    band.pop_back();
  out += "<polygon class=\"band\" points=\"" + band + "\" fill=\"#9ecae1\" fill-opacity=\"0.5\" stroke=\"none\"/>\n";

  // axes with five ticks each
  const double ax_y = height - bottom;
  out += fmt::format("<line class=\"axis\" x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"black\"/>\n",
                     left, ax_y, width - right, ax_y);
  out += fmt::format("<line class=\"axis\" x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"black\"/>\n",
                     left, top, left, ax_y);
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4.0;
    const double yv = y0 + (y1 - y0) * k / 4.0;
    out += fmt::format("<text class=\"tick\" x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"11\" "
                       "text-anchor=\"middle\">{:.3g}</text>\n",
                       px(xv), ax_y + 16, xv);
    out += fmt::format("<text class=\"tick\" x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"11\" "
                       "text-anchor=\"end\">{:.3g}</text>\n",
                       left - 6, py(yv) + 4, yv);
  }
  out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"12\" text-anchor=\"middle\">y</text>\n",
                     0.5 * (left + width - right), height - 8);

  for (Eigen::Index g : shown) {
    if (!std::isfinite(lo(g)) || !std::isfinite(hi(g)))
      continue;
    const double cx = px(fit.spec.y_grid(g));
    out += "<g class=\"errorbar\">";
    out += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"black\"/>", cx,
                       py(lo(g)), py(hi(g)));
    for (double v : { lo(g), hi(g) })
      out += fmt::format("<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"black\"/>", cx - 4,
                         py(v), cx + 4, py(v));
    out += "</g>\n";
  }

  std::string line;
  for (Eigen::Index g : shown)
    line += xy(px(fit.spec.y_grid(g)), py(est(g))) + " ";
  line.pop_back();
  out += "<polyline class=\"estimate\" points=\"" + line + "\" fill=\"none\" stroke=\"#08519c\" stroke-width=\"2\"/>\n";
  out += "</svg>\n";
  return out;
}

void
write_file(const std::string& path, const std::string& content)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw DataError("cannot write '" + path + "'");
  out << content;
  if (!out)
    throw DataError("failed writing '" + path + "'");
}

} // namespace cde
