#include "lateci/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>

#include "lateci/errors.hpp"
#include "lateci/random.hpp"

namespace lateci {

Dataset::Dataset(std::vector<double> y, std::vector<int> a, std::vector<int> z,
                 Eigen::MatrixXd x)
    : y_(std::move(y)), a_(std::move(a)), z_(std::move(z)), x_(std::move(x)) {
  const std::size_t n = y_.size();
  if (n < 2) throw ConfigError(fmt::format("dataset needs at least 2 units, got {}", n));
  if (a_.size() != n || z_.size() != n || static_cast<std::size_t>(x_.rows()) != n) {
    throw ConfigError("dataset columns have different lengths");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(y_[i])) throw ConfigError(fmt::format("unit {}: y is not finite", i));
    if (a_[i] != 0 && a_[i] != 1) throw ConfigError(fmt::format("unit {}: a must be 0 or 1", i));
    if (z_[i] != 0 && z_[i] != 1) throw ConfigError(fmt::format("unit {}: z must be 0 or 1", i));
  }
  if (!x_.allFinite()) throw ConfigError("covariates contain non-finite values");
}

Dataset Dataset::from_units(std::span<const ObservedUnit> units) {
  const std::size_t n = units.size();
  const std::size_t p = n ? units.front().x.size() : 0;
  std::vector<double> y(n);
  std::vector<int> a(n), z(n);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& u = units[i];
    if (u.x.size() != p) {
      throw ConfigError(fmt::format("unit {} has {} covariates, expected {}", i, u.x.size(), p));
    }
    y[i] = u.y;
    a[i] = u.a;
    z[i] = u.z;
    for (std::size_t j = 0; j < p; ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = u.x[j];
  }
  return Dataset(std::move(y), std::move(a), std::move(z), std::move(x));
}

ObservedUnit Dataset::unit(std::size_t i) const {
  ObservedUnit u;
  u.y = y_.at(i);
  u.a = a_[i];
  u.z = z_[i];
  u.x.resize(p());
  for (std::size_t j = 0; j < p(); ++j) u.x[j] = x_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return u;
}

std::vector<std::size_t> FoldAssignment::fold_sizes() const {
  std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
  for (int f : fold_of) ++sizes[static_cast<std::size_t>(f)];
  return sizes;
}

std::vector<std::size_t> FoldAssignment::members(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] == fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldAssignment::complement(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] != fold) out.push_back(i);
  }
  return out;
}

FoldAssignment make_folds(std::size_t n, int k, std::uint64_t seed) {
  if (k < 2 || static_cast<std::size_t>(k) > n) {
    throw ConfigError(fmt::format("fold count must satisfy 2 <= K <= n (K={}, n={})", k, n));
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    std::swap(perm[i], perm[rng.uniform_index(i + 1)]);
  }
  FoldAssignment folds;
  folds.k = k;
  folds.fold_of.assign(n, 0);
  const std::size_t base = n / static_cast<std::size_t>(k);
  const std::size_t extra = n % static_cast<std::size_t>(k);
  std::size_t pos = 0;
  for (std::size_t f = 0; f < static_cast<std::size_t>(k); ++f) {
    const std::size_t size = base + (f < extra ? 1 : 0);
    for (std::size_t j = 0; j < size; ++j) folds.fold_of[perm[pos++]] = static_cast<int>(f);
  }
  return folds;
}

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

// Splits one CSV record. Double-quoted fields may contain commas and ""
// escapes; embedded newlines are not supported.
std::vector<std::string> split_record(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(trim(field));
      field.clear();
    } else {
      field.push_back(ch);
    }
  }
  fields.push_back(trim(field));
  return fields;
}

double parse_number(const std::string& cell, std::size_t row, const std::string& column) {
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  if (!cell.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (cell.empty() || ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw ParseError(fmt::format("row {}, column {}: '{}' is not a finite number", row, column, cell));
  }
  return value;
}

int parse_binary(const std::string& cell, std::size_t row, const std::string& column) {
  const double v = parse_number(cell, row, column);
  if (v != 0.0 && v != 1.0) {
    throw ParseError(fmt::format("row {}, column {}: value '{}' is not 0 or 1", row, column, cell));
  }
  return static_cast<int>(v);
}

}  // namespace

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw ParseError(fmt::format("cannot open '{}'", path));

  std::string line;
  if (!std::getline(in, line)) throw ParseError(fmt::format("'{}' is empty", path));
  const auto header = split_record(line);
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t j = 0; j < header.size(); ++j) index.emplace(header[j], j);

  auto column = [&](const std::string& name) {
    const auto it = index.find(name);
    if (it == index.end()) throw ParseError(fmt::format("missing column '{}'", name));
    return it->second;
  };
  const std::size_t cy = column(schema.outcome);
  const std::size_t ca = column(schema.treatment);
  const std::size_t cz = column(schema.instrument);
  std::vector<std::size_t> cx;
  for (const auto& name : schema.covariates) cx.push_back(column(name));

  std::vector<double> y;
  std::vector<int> a, z;
  std::vector<double> xs;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto fields = split_record(line);
    if (fields.size() != header.size()) {
      throw ParseError(fmt::format("row {}: expected {} fields, found {}", row, header.size(), fields.size()));
    }
    y.push_back(parse_number(fields[cy], row, schema.outcome));
    a.push_back(parse_binary(fields[ca], row, schema.treatment));
    z.push_back(parse_binary(fields[cz], row, schema.instrument));
    for (std::size_t j = 0; j < cx.size(); ++j) {
      xs.push_back(parse_number(fields[cx[j]], row, schema.covariates[j]));
    }
  }
  if (row < 2) throw ParseError(fmt::format("'{}' has fewer than 2 rows", path));

  const auto n = static_cast<Eigen::Index>(row);
  const auto p = static_cast<Eigen::Index>(cx.size());
  Eigen::MatrixXd x(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) x(i, j) = xs[static_cast<std::size_t>(i * p + j)];
  }
  return Dataset(std::move(y), std::move(a), std::move(z), std::move(x));
}

void write_csv(const std::string& path, const Dataset& data, const CsvSchema& schema) {
  if (schema.covariates.size() != data.p()) {
    throw ConfigError(fmt::format("schema names {} covariates but the dataset has {}",
                                  schema.covariates.size(), data.p()));
  }
  std::ofstream out(path);
  if (!out) throw ConfigError(fmt::format("cannot write '{}'", path));
  out << schema.outcome << ',' << schema.treatment << ',' << schema.instrument;
  for (const auto& c : schema.covariates) out << ',' << c;
  out << '\n';
  for (std::size_t i = 0; i < data.n(); ++i) {
    out << fmt::format("{:.17g},{},{}", data.y()[i], data.a()[i], data.z()[i]);
    for (std::size_t j = 0; j < data.p(); ++j) {
      out << fmt::format(",{:.17g}", data.x()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
    out << '\n';
  }
}

}  // namespace lateci
