#include "contiv/dataset.hpp"

#include "contiv/error.hpp"
#include "contiv/random.hpp"

#include <algorithm>
#include <atomic>
#include <numeric>
#include <stdexcept>

namespace contiv {

namespace {
std::atomic<std::uint64_t> next_source{1};
}

Provenance::Provenance(std::uint64_t source, std::vector<std::uint32_t> sorted_rows)
  : source_(source)
  , rows_(std::make_shared<const std::vector<std::uint32_t>>(std::move(sorted_rows)))
{}

Provenance
Provenance::fresh(std::size_t n)
{
  std::vector<std::uint32_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0U);
  return Provenance(next_source.fetch_add(1), std::move(rows));
}

bool
Provenance::overlaps(const Provenance& other) const
{
  if (is_external() || other.is_external() || source_ != other.source_) {
    return false;
  }
  const auto& a = *rows_;
  const auto& b = *other.rows_;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia == *ib) {
      return true;
    }
    if (*ia < *ib) {
      ++ia;
    } else {
      ++ib;
    }
  }
  return false;
}

bool
Provenance::contains(std::uint64_t source, std::uint32_t row) const
{
  if (is_external() || source != source_) {
    return false;
  }
  return std::binary_search(rows_->begin(), rows_->end(), row);
}

std::span<const std::uint32_t>
Provenance::rows() const
{
  if (is_external()) {
    return {};
  }
  return {rows_->data(), rows_->size()};
}

Provenance
Provenance::merged(const Provenance& other) const
{
  if (is_external()) {
    return other;
  }
  if (other.is_external()) {
    return *this;
  }
  if (source_ != other.source_) {
    throw std::invalid_argument("Provenance::merged: different sources");
  }
  std::vector<std::uint32_t> rows;
  std::set_union(rows_->begin(), rows_->end(), other.rows_->begin(),
                 other.rows_->end(), std::back_inserter(rows));
  return Provenance(source_, std::move(rows));
}

Dataset::Dataset(RowMatrix x,
                 std::vector<double> z,
                 std::vector<double> a,
                 std::vector<double> y)
  : x_(std::move(x))
  , z_(std::move(z))
  , a_(std::move(a))
  , y_(std::move(y))
{
  const auto n = z_.size();
  if (static_cast<std::size_t>(x_.rows()) != n || a_.size() != n || y_.size() != n) {
    throw std::invalid_argument("Dataset: column lengths differ");
  }
  provenance_ = Provenance::fresh(n);
  local_rows_.resize(n);
  std::iota(local_rows_.begin(), local_rows_.end(), 0U);
}

Observation
Dataset::observation(std::size_t i) const
{
  return {row(i), z_[i], a_[i], y_[i], provenance_.source(), local_rows_[i]};
}

Dataset
Dataset::subset(std::span<const std::size_t> idx) const
{
  Dataset out;
  out.x_.resize(static_cast<Eigen::Index>(idx.size()), x_.cols());
  out.z_.reserve(idx.size());
  out.a_.reserve(idx.size());
  out.y_.reserve(idx.size());
  out.local_rows_.reserve(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const auto i = idx[k];
    if (i >= size()) {
      throw std::out_of_range("Dataset::subset: index out of range");
    }
    out.x_.row(static_cast<Eigen::Index>(k)) = x_.row(static_cast<Eigen::Index>(i));
    out.z_.push_back(z_[i]);
    out.a_.push_back(a_[i]);
    out.y_.push_back(y_[i]);
    out.local_rows_.push_back(local_rows_[i]);
  }
  std::vector<std::uint32_t> sorted = out.local_rows_;
  std::sort(sorted.begin(), sorted.end());
  out.provenance_ = Provenance(provenance_.source(), std::move(sorted));
  return out;
}

Dataset
Dataset::with_outcome(std::vector<double> y) const
{
  if (y.size() != size()) {
    throw std::invalid_argument("Dataset::with_outcome: length mismatch");
  }
  Dataset out = *this;
  out.y_ = std::move(y);
  return out;
}

Dataset
Dataset::with_instrument(std::vector<double> z) const
{
  if (z.size() != size()) {
    throw std::invalid_argument("Dataset::with_instrument: length mismatch");
  }
  Dataset out = *this;
  out.z_ = std::move(z);
  return out;
}

std::vector<Dataset>
split_folds(const Dataset& data, std::size_t k, std::uint64_t seed)
{
  if (k == 0 || data.size() < k) {
    throw Error(Errc::EmptyFold, "cannot split " + std::to_string(data.size()) +
                                   " rows into " + std::to_string(k) + " folds");
  }
  std::vector<std::size_t> perm(data.size());
  std::iota(perm.begin(), perm.end(), 0U);
  Rng rng(seed);
  rng.shuffle(perm);
  const std::size_t base = data.size() / k;
  std::vector<Dataset> folds;
  folds.reserve(k);
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t begin = f * base;
    const std::size_t end = (f + 1 == k) ? data.size() : begin + base;
    std::vector<std::size_t> idx(perm.begin() + static_cast<std::ptrdiff_t>(begin),
                                 perm.begin() + static_cast<std::ptrdiff_t>(end));
    std::sort(idx.begin(), idx.end());
    folds.push_back(data.subset(idx));
  }
  return folds;
}

double
quantile(std::vector<double> v, double p)
{
  if (v.empty()) {
    throw std::invalid_argument("quantile: empty input");
  }
  std::sort(v.begin(), v.end());
  const double pos = std::clamp(p, 0.0, 1.0) * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

} // namespace contiv
