#include "cde/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace cde {

DataSet::DataSet(Eigen::VectorXd y, Eigen::MatrixXd x)
  : y_(std::move(y))
  , x_(std::move(x))
{
  if (x_.rows() != y_.size())
    throw DataError("y has " + std::to_string(y_.size()) + " rows but x has " +
                    std::to_string(x_.rows()));
  if (y_.size() < 2)
    throw DataError("at least 2 observations are required");
  if (x_.cols() < 1)
    throw DataError("at least one covariate is required");
  if (!y_.allFinite() || !x_.allFinite())
    throw DataError("data contain non-finite values");

  y_min_ = y_.minCoeff();
  y_max_ = y_.maxCoeff();
  x_min_ = x_.colwise().minCoeff().transpose();
  x_max_ = x_.colwise().maxCoeff().transpose();

  const auto n = y_.size();
  order_.resize(static_cast<size_t>(n));
  std::iota(order_.begin(), order_.end(), Eigen::Index{ 0 });
  std::stable_sort(order_.begin(), order_.end(), [this](Eigen::Index a, Eigen::Index b) {
    return y_(a) < y_(b);
  });

  tie_begin_.resize(order_.size());
  tie_end_.resize(order_.size());
  size_t start = 0;
  while (start < order_.size()) {
    size_t stop = start + 1;
    while (stop < order_.size() && y_(order_[stop]) == y_(order_[start]))
      ++stop;
    for (size_t k = start; k < stop; ++k) {
      tie_begin_[k] = static_cast<Eigen::Index>(start);
      tie_end_[k] = static_cast<Eigen::Index>(stop);
    }
    start = stop;
  }
}

void
EstimationConfig::validate(Eigen::Index d) const
{
  if (p < 0 || q < 0 || mu < 0)
    throw ConfigError("polynomial and derivative orders must be non-negative");
  if (mu > p)
    throw ConfigError("mu must be ≤ p");
  if (!nu.empty() && static_cast<Eigen::Index>(nu.size()) != d)
    throw ConfigError("nu must have one entry per covariate");
  for (int v : nu)
    if (v < 0)
      throw ConfigError("nu entries must be non-negative");
  if (nu_order() > q)
    throw ConfigError("|nu| must be ≤ q");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw ConfigError("alpha must lie in (0, 1)");
  if (band_sims < 1)
    throw ConfigError("band_sims must be positive");
  if (normalize)
    throw ConfigError("normalize is not implemented");
}

MultiIndex
EstimationConfig::nu_index(Eigen::Index d) const
{
  if (nu.empty())
    return MultiIndex(static_cast<size_t>(d), 0);
  return nu;
}

int
EstimationConfig::nu_order() const
{
  return std::accumulate(nu.begin(), nu.end(), 0);
}

EvaluationSpec::EvaluationSpec(Eigen::VectorXd grid, Eigen::VectorXd x, Eigen::VectorXd h)
  : y_grid(std::move(grid))
  , x_point(std::move(x))
  , bandwidths(std::move(h))
{
  if (y_grid.size() < 1)
    throw ConfigError("evaluation grid is empty");
  if (bandwidths.size() == 1 && y_grid.size() > 1)
    bandwidths = Eigen::VectorXd::Constant(y_grid.size(), bandwidths(0));
  if (bandwidths.size() != y_grid.size())
    throw ConfigError("need one bandwidth per grid point");
  for (Eigen::Index g = 1; g < y_grid.size(); ++g)
    if (!(y_grid(g) > y_grid(g - 1)))
      throw ConfigError("evaluation grid must be strictly increasing");
  for (Eigen::Index g = 0; g < bandwidths.size(); ++g)
    if (!(bandwidths(g) > 0.0) || !std::isfinite(bandwidths(g)))
      throw ConfigError("bandwidths must be positive and finite");
  if (!y_grid.allFinite() || !x_point.allFinite())
    throw ConfigError("grid and conditioning point must be finite");
}

EvaluationSpec::EvaluationSpec(Eigen::VectorXd grid, Eigen::VectorXd x, double h)
  : EvaluationSpec(grid, std::move(x), Eigen::VectorXd::Constant(grid.size(), h))
{}

namespace {

// RFC-4180 record splitter; quoted fields may contain separators, doubled
// quotes and line breaks.
class CsvReader
{
public:
  explicit CsvReader(std::istream& in)
    : in_(in)
  {}

  bool next(std::vector<std::string>& fields)
  {
    fields.clear();
    if (in_.peek() == std::char_traits<char>::eof())
      return false;
    std::string field;
    bool quoted = false;
    bool any = false;
    char c;
    while (in_.get(c)) {
      any = true;
      if (quoted) {
        if (c == '"') {
          if (in_.peek() == '"') {
            field.push_back('"');
            in_.get(c);
          } else {
            quoted = false;
          }
        } else {
          field.push_back(c);
        }
      } else if (c == '"') {
        quoted = true;
      } else if (c == ',') {
        fields.push_back(std::move(field));
        field.clear();
      } else if (c == '\r') {
        if (in_.peek() == '\n')
          in_.get(c);
        break;
      } else if (c == '\n') {
        break;
      } else {
        field.push_back(c);
      }
    }
    if (quoted)
      throw DataError("unterminated quoted field in CSV input");
    fields.push_back(std::move(field));
    return any;
  }

private:
  std::istream& in_;
};

std::string
trim(const std::string& s)
{
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos)
    return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

} // namespace

DataSet
load_dataset(const std::string& path,
             const std::string& y_column,
             const std::vector<std::string>& x_columns)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw DataError("cannot open data file '" + path + "'");
  if (x_columns.empty())
    throw DataError("at least one covariate column is required");

  CsvReader reader(in);
  std::vector<std::string> header;
  if (!reader.next(header))
    throw DataError("data file '" + path + "' is empty");
  for (auto& h : header)
    h = trim(h);

  auto column_index = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw DataError("column '" + name + "' not found in '" + path + "'");
    return static_cast<size_t>(it - header.begin());
  };
  std::vector<size_t> columns{ column_index(y_column) };
  std::vector<std::string> names{ y_column };
  for (const auto& name : x_columns) {
    columns.push_back(column_index(name));
    names.push_back(name);
  }

  std::vector<std::vector<double>> values(columns.size());
  std::vector<std::string> fields;
  long row = 0;
  while (reader.next(fields)) {
    if (fields.size() == 1 && trim(fields[0]).empty())
      continue;
    ++row;
    for (size_t c = 0; c < columns.size(); ++c) {
      if (columns[c] >= fields.size())
        throw DataError("row " + std::to_string(row) + " has no value for column '" +
                        names[c] + "'");
      const std::string cell = trim(fields[columns[c]]);
      double value = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size())
        throw DataError("row " + std::to_string(row) + ", column '" + names[c] +
                        "': non-numeric value '" + cell + "'");
      if (!std::isfinite(value))
        throw DataError("row " + std::to_string(row) + ", column '" + names[c] +
                        "': non-finite value '" + cell + "'");
      values[c].push_back(value);
    }
  }
  if (row < 2)
    throw DataError("need at least 2 usable rows, found " + std::to_string(row));

  Eigen::VectorXd y = Eigen::Map<Eigen::VectorXd>(values[0].data(), row);
  Eigen::MatrixXd x(row, static_cast<Eigen::Index>(x_columns.size()));
  for (size_t c = 1; c < columns.size(); ++c)
    x.col(static_cast<Eigen::Index>(c - 1)) = Eigen::Map<Eigen::VectorXd>(values[c].data(), row);
  return DataSet(std::move(y), std::move(x));
}

double
quantile_sorted(const std::vector<double>& sorted, double level)
{
  if (sorted.empty())
    throw DataError("quantile of an empty sample");
  const double pos = level * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

Eigen::VectorXd
quantile_grid(const DataSet& data, const std::vector<double>& levels)
{
  if (levels.empty())
    throw ConfigError("no quantile levels given");
  if (data.y_min() == data.y_max())
    throw DataError("all responses are identical; cannot build a grid");
  std::vector<double> sorted(data.y().data(), data.y().data() + data.n());
  std::sort(sorted.begin(), sorted.end());

  std::vector<double> grid;
  for (double level : levels) {
    if (!(level > 0.0 && level < 1.0))
      throw ConfigError("quantile levels must lie in (0, 1)");
    grid.push_back(quantile_sorted(sorted, level));
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return Eigen::Map<Eigen::VectorXd>(grid.data(), static_cast<Eigen::Index>(grid.size()));
}

Eigen::VectorXd
default_grid(const DataSet& data, int count)
{
  if (count < 1)
    throw ConfigError("grid count must be at least 1");
  std::vector<double> levels;
  for (int k = 1; k <= count; ++k)
    levels.push_back(static_cast<double>(k) / (count + 1));
  return quantile_grid(data, levels);
}

} // namespace cde
