#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace lateci {

struct ObservedUnit {
  double y = 0.0;
  int a = 0;
  int z = 0;
  std::vector<double> x;
};

/// Sample of n observations (Y, A, Z, X), stored column-wise.
///
/// Construction validates every invariant: n >= 2, binary A and Z, finite
/// Y and X, and a common covariate dimension. Instances are immutable.
class Dataset {
 public:
  Dataset(std::vector<double> y, std::vector<int> a, std::vector<int> z,
          Eigen::MatrixXd x);

  static Dataset from_units(std::span<const ObservedUnit> units);

  std::size_t n() const { return y_.size(); }
  std::size_t p() const { return static_cast<std::size_t>(x_.cols()); }

  std::span<const double> y() const { return y_; }
  std::span<const int> a() const { return a_; }
  std::span<const int> z() const { return z_; }
  const Eigen::MatrixXd& x() const { return x_; }

  ObservedUnit unit(std::size_t i) const;

 private:
  std::vector<double> y_;
  std::vector<int> a_;
  std::vector<int> z_;
  Eigen::MatrixXd x_;
};

struct FoldAssignment {
  std::vector<int> fold_of;
  int k = 0;

  std::size_t n() const { return fold_of.size(); }
  std::vector<std::size_t> fold_sizes() const;
  std::vector<std::size_t> members(int fold) const;
  std::vector<std::size_t> complement(int fold) const;
};

// Seeded Fisher-Yates shuffle of 0..n-1 followed by a contiguous split into
// k folds; the first n % k folds receive one extra unit.
FoldAssignment make_folds(std::size_t n, int k, std::uint64_t seed);

struct CsvSchema {
  std::string outcome = "y";
  std::string treatment = "a";
  std::string instrument = "z";
  std::vector<std::string> covariates;
};

// Reads a header-first CSV. Row numbers in error messages count data rows
// from 1 (the header is not counted).
Dataset load_csv(const std::string& path, const CsvSchema& schema);

// Writes the dataset with 17 significant digits so load_csv reproduces it.
void write_csv(const std::string& path, const Dataset& data,
               const CsvSchema& schema);

}  // namespace lateci
