#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace contiv {

using RowMatrix =
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

//! Identifies which rows of which original sample a fold is made of.
//! Two provenances overlap when they come from the same sample and share a
//! row. A default-constructed provenance (external data, e.g. synthetic
//! nuisances) overlaps nothing.
class Provenance
{
public:
  Provenance() = default;
  Provenance(std::uint64_t source, std::vector<std::uint32_t> sorted_rows);

  static Provenance fresh(std::size_t n);

  bool is_external() const { return rows_ == nullptr; }
  bool overlaps(const Provenance& other) const;
  bool contains(std::uint64_t source, std::uint32_t row) const;
  std::uint64_t source() const { return source_; }
  std::span<const std::uint32_t> rows() const;

  Provenance merged(const Provenance& other) const;

private:
  std::uint64_t source_ = 0;
  std::shared_ptr<const std::vector<std::uint32_t>> rows_;
};

struct Observation
{
  std::span<const double> x;
  double z;
  double a;
  double y;
  std::uint64_t source = 0;
  std::uint32_t row = 0;
};

//! Observations (X, Z, A, Y). X is stored row-major so that a covariate
//! vector is a contiguous span.
class Dataset
{
public:
  Dataset() = default;
  Dataset(RowMatrix x, std::vector<double> z, std::vector<double> a, std::vector<double> y);

  std::size_t size() const { return z_.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(x_.cols()); }
  bool empty() const { return z_.empty(); }

  const RowMatrix& x() const { return x_; }
  std::span<const double> row(std::size_t i) const
  {
    return {x_.data() + i * dim(), dim()};
  }
  const std::vector<double>& z() const { return z_; }
  const std::vector<double>& a() const { return a_; }
  const std::vector<double>& y() const { return y_; }
  const Provenance& provenance() const { return provenance_; }

  Observation observation(std::size_t i) const;

  //! Rows idx of this dataset, with provenance narrowed accordingly.
  Dataset subset(std::span<const std::size_t> idx) const;

  //! Copy with Y replaced (used to run the treatment pipeline on A).
  Dataset with_outcome(std::vector<double> y) const;
  Dataset with_instrument(std::vector<double> z) const;

private:
  RowMatrix x_;
  std::vector<double> z_;
  std::vector<double> a_;
  std::vector<double> y_;
  Provenance provenance_;
  std::vector<std::uint32_t> local_rows_; // original row id of each row
};

//! Seeded shuffle followed by k contiguous parts; the remainder n mod k goes
//! to the last part.
std::vector<Dataset>
split_folds(const Dataset& data, std::size_t k, std::uint64_t seed);

//! Empirical quantile (type 7) of v.
double
quantile(std::vector<double> v, double p);

} // namespace contiv
