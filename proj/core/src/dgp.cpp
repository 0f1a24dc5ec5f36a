#include "contiv/dgp.hpp"

#include "contiv/error.hpp"
#include "contiv/random.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace contiv::sim {

namespace {

double
dot(const std::vector<double>& b, std::span<const double> x)
{
  double acc = 0.0;
  for (std::size_t k = 0; k < b.size(); ++k) {
    acc += b[k] * x[k];
  }
  return acc;
}

const std::vector<double> kEta{0.1, 0.1, -0.1, 0.2};
const std::vector<double> kLambdaX{0.1, -0.2, 0.3, 0.1};
const std::vector<double> kMuX{0.2, 0.2, 0.3, -0.1};
const std::vector<double> kMuZX{-0.1, 0.0, 0.1, 0.0};
constexpr double kCubic = -0.13 * 0.13;

} // namespace

double
PolyInZ::operator()(std::span<const double> x, double z) const
{
  double acc = 0.0;
  for (std::size_t j = intercept.size(); j-- > 0;) {
    double c = intercept[j];
    if (j < slope.size()) {
      c += dot(slope[j], x);
    }
    acc = acc * z + c;
  }
  return acc;
}

double
PolyInZ::dz(std::span<const double> x, double z) const
{
  double acc = 0.0;
  for (std::size_t j = intercept.size(); j-- > 1;) {
    double c = intercept[j];
    if (j < slope.size()) {
      c += dot(slope[j], x);
    }
    acc = acc * z + static_cast<double>(j) * c;
  }
  return acc;
}

double
PolyInZ::marginal(double z) const
{
  double acc = 0.0;
  for (std::size_t j = intercept.size(); j-- > 0;) {
    acc = acc * z + intercept[j];
  }
  return acc;
}

double
PolyInZ::marginal_dz(double z) const
{
  double acc = 0.0;
  for (std::size_t j = intercept.size(); j-- > 1;) {
    acc = acc * z + static_cast<double>(j) * intercept[j];
  }
  return acc;
}

double
DgpSpec::eta_of(std::span<const double> x) const
{
  return eta0 + dot(eta, x);
}

double
DgpSpec::pi(std::span<const double> x, double z) const
{
  if (z_law == InstrumentLaw::Uniform) {
    return (z >= z_lo && z <= z_hi) ? 1.0 / (z_hi - z_lo) : 0.0;
  }
  const double u = (z - eta_of(x)) / z_sd;
  return std::exp(-0.5 * u * u) / (z_sd * std::sqrt(2.0 * std::numbers::pi));
}

double
DgpSpec::z_density(double z) const
{
  if (z_law == InstrumentLaw::Uniform) {
    return (z >= z_lo && z <= z_hi) ? 1.0 / (z_hi - z_lo) : 0.0;
  }
  double var = z_sd * z_sd;
  for (const double e : eta) {
    var += e * e;
  }
  const double u = z - eta0;
  return std::exp(-0.5 * u * u / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

double
DgpSpec::z_quantile(double p) const
{
  if (z_law == InstrumentLaw::Uniform) {
    return z_lo + p * (z_hi - z_lo);
  }
  double var = z_sd * z_sd;
  for (const double e : eta) {
    var += e * e;
  }
  return boost::math::quantile(boost::math::normal(eta0, std::sqrt(var)), p);
}

double
DgpSpec::truth(double z) const
{
  return estimand == Estimand::Liv ? gamma(z) : theta_y(z);
}

DgpSpec
liv_main(std::size_t n, std::uint64_t seed)
{
  DgpSpec s;
  s.name = "liv_main";
  s.n = n;
  s.seed = seed;
  s.dim = 4;
  s.z_law = InstrumentLaw::Normal;
  s.eta0 = 2.0;
  s.eta = kEta;
  s.z_sd = 1.0;
  s.lambda.intercept = {1.0, 0.1};
  s.lambda.slope = {kLambdaX};
  s.a_law = TreatmentLaw::Gaussian;
  s.a_sd = 1.0;
  s.mu.intercept = {1.0, 0.0, 0.0, kCubic};
  s.mu.slope = {kMuX, kMuZX};
  s.y_sd = 1.0;
  s.estimand = Estimand::Liv;
  return s;
}

DgpSpec
deriv_only(std::size_t n, std::uint64_t seed)
{
  DgpSpec s = liv_main(n, seed);
  s.name = "deriv_only";
  s.eta0 = -0.8;
  s.mu.intercept = {1.0, 0.1, 0.0, kCubic};
  s.y_sd = 2.0;
  s.estimand = Estimand::Derivative;
  return s;
}

DgpSpec
complier_unit(std::size_t n, std::uint64_t seed)
{
  DgpSpec s;
  s.name = "complier_unit";
  s.n = n;
  s.seed = seed;
  s.dim = 4;
  s.z_law = InstrumentLaw::Uniform;
  s.z_lo = 0.0;
  s.z_hi = 1.0;
  s.lambda.intercept = {0.2, 0.5};
  s.a_law = TreatmentLaw::Bernoulli;
  s.mu.intercept = {1.0, 1.0};
  s.y_sd = 1.0;
  s.estimand = Estimand::Liv;
  return s;
}

DgpSpec
null_outcome(std::size_t n, std::uint64_t seed)
{
  DgpSpec s = liv_main(n, seed);
  s.name = "null_outcome";
  s.mu.intercept = {1.0};
  s.mu.slope = {kMuX};
  return s;
}

DgpSpec
null_treatment(std::size_t n, std::uint64_t seed)
{
  DgpSpec s = liv_main(n, seed);
  s.name = "null_treatment";
  s.lambda.intercept = {1.0};
  return s;
}

DgpSpec
decreasing_treatment(std::size_t n, std::uint64_t seed)
{
  DgpSpec s = liv_main(n, seed);
  s.name = "decreasing_treatment";
  s.lambda.intercept = {1.0, -0.1};
  return s;
}

DgpSpec
constant_truth(std::size_t n, std::uint64_t seed)
{
  DgpSpec s = null_outcome(n, seed);
  s.name = "constant_truth";
  s.lambda.intercept = {1.0};
  s.estimand = Estimand::Derivative;
  return s;
}

DgpSpec
dgp_from_name(const std::string& name, std::size_t n, std::uint64_t seed)
{
  if (name == "liv_main") {
    return liv_main(n, seed);
  }
  if (name == "deriv_only") {
    return deriv_only(n, seed);
  }
  if (name == "complier_unit") {
    return complier_unit(n, seed);
  }
  if (name == "null_outcome") {
    return null_outcome(n, seed);
  }
  if (name == "null_treatment") {
    return null_treatment(n, seed);
  }
  if (name == "decreasing_treatment") {
    return decreasing_treatment(n, seed);
  }
  if (name == "constant_truth") {
    return constant_truth(n, seed);
  }
  throw Error(Errc::InvalidSimConfig, "unknown DGP '" + name + "'");
}

Dataset
generate(const DgpSpec& spec)
{
  if (spec.n == 0) {
    throw Error(Errc::InvalidSimConfig, "n must be at least 1");
  }
  Rng rng(spec.seed);
  const std::size_t d = spec.dim;
  RowMatrix x(static_cast<Eigen::Index>(spec.n), static_cast<Eigen::Index>(d));
  std::vector<double> z(spec.n);
  std::vector<double> a(spec.n);
  std::vector<double> y(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    double* xi = x.data() + i * d;
    for (std::size_t k = 0; k < d; ++k) {
      xi[k] = rng.normal();
    }
    const std::span<const double> row(xi, d);
    if (spec.z_law == InstrumentLaw::Normal) {
      z[i] = rng.normal(spec.eta_of(row), spec.z_sd);
    } else {
      z[i] = spec.z_lo + (spec.z_hi - spec.z_lo) * rng.uniform();
    }
    const double lam = spec.lambda(row, z[i]);
    if (spec.a_law == TreatmentLaw::Gaussian) {
      a[i] = rng.normal(lam, spec.a_sd);
    } else {
      a[i] = rng.bernoulli(std::clamp(lam, 0.0, 1.0)) ? 1.0 : 0.0;
    }
    y[i] = rng.normal(spec.mu(row, z[i]), spec.y_sd);
  }
  return Dataset(std::move(x), std::move(z), std::move(a), std::move(y));
}

} // namespace contiv::sim
