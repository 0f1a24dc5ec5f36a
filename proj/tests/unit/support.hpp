#pragma once

#include "contiv/dataset.hpp"
#include "contiv/error.hpp"
#include "contiv/random.hpp"

#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

namespace contiv::test {

inline Dataset
make_dataset(std::vector<double> z, std::vector<double> a, std::vector<double> y, std::size_t dim = 1)
{
  RowMatrix x = RowMatrix::Zero(static_cast<Eigen::Index>(z.size()), static_cast<Eigen::Index>(dim));
  return Dataset(std::move(x), std::move(z), std::move(a), std::move(y));
}

//! Sample mean and standard deviation.
struct Summary
{
  double mean = 0.0;
  double sd = 0.0;
  double mcse = 0.0;
};

inline Summary
summarize(const std::vector<double>& v)
{
  Summary s;
  for (double x : v) {
    s.mean += x;
  }
  s.mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) {
    ss += (x - s.mean) * (x - s.mean);
  }
  s.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  s.mcse = s.sd / std::sqrt(static_cast<double>(v.size()));
  return s;
}

} // namespace contiv::test

#define CHECK_ERRC(expr, errc)                                                                     \
  do {                                                                                             \
    bool thrown_ = false;                                                                          \
    try {                                                                                          \
      (void)(expr);                                                                                \
    } catch (const ::contiv::Error& e_) {                                                          \
      thrown_ = true;                                                                              \
      CHECK(e_.code() == (errc));                                                                  \
    }                                                                                              \
    CHECK_MESSAGE(thrown_, "expected " #errc);                                                     \
  } while (false)
