#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace contiv {

//! Mixes a base seed with stream identifiers (replication, fold, ...) so
//! that every random stream in a run derives from one user seed.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> streams);

class Rng
{
public:
  explicit Rng(std::uint64_t seed)
    : engine_(seed)
  {}

  double normal() { return normal_(engine_); }
  double normal(double mean, double sd) { return mean + sd * normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  bool bernoulli(double p) { return uniform() < p; }

  //! Fisher-Yates with our own index draws, so the permutation does not
  //! depend on the standard library's shuffle.
  template<class T>
  void shuffle(std::vector<T>& v)
  {
    for (std::size_t i = v.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(engine_() % i);
      std::swap(v[i - 1], v[j]);
    }
  }

  std::mt19937_64& engine() { return engine_; }

private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

} // namespace contiv
