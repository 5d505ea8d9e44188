#pragma once

#include "cde/bandwidth.hpp"
#include "cde/estimator.hpp"
#include "cde/montecarlo.hpp"

#include <cstdint>
#include <string>

namespace cde {

//! Options echoed in every report header.
struct RunInfo
{
  std::string call;       //!< subcommand name
  long n = 0;             //!< sample size
  std::string bw_method;  //!< "fixed", "mse-rot" or "imse-rot"
  std::uint64_t seed = 0;
};

//! Summary printout: option block, then one row per grid point with the
//! robust bias-corrected interval, a rule after row ceil(m / 2).
std::string
fit_table(const CdeFit& fit, const RunInfo& info);

std::string
fit_json(const CdeFit& fit, const RunInfo& info);

std::string
fit_csv(const CdeFit& fit);

//! Option block and the Index / y_grid / B.W. / Eff.n table.
std::string
bandwidth_table(const BandwidthSelection& selection, const EstimationConfig& config, const RunInfo& info);

std::string
bandwidth_json(const BandwidthSelection& selection, const EstimationConfig& config, const RunInfo& info);

std::string
bandwidth_csv(const BandwidthSelection& selection);

std::string
coverage_table(const CoverageReport& report);

//! One line per (mu, x, multiplier, estimator); with `points`, one line per
//! grid point instead.
std::string
coverage_csv(const CoverageReport& report, bool points = false);

std::string
coverage_json(const CoverageReport& report);

enum class PlotIntervals
{
  standard,
  robust
};

//! Standalone SVG: the estimate as a polyline, pointwise intervals as error
//! bars and the uniform band as a shaded polygon. Grid points without
//! estimates are skipped; at least two must remain.
std::string
fit_svg(const CdeFit& fit, PlotIntervals intervals = PlotIntervals::standard);

//! Writes `content` to `path`, throwing DataError when the file cannot be
//! written.
void
write_file(const std::string& path, const std::string& content);

} // namespace cde
