#pragma once

#include "contiv/dataset.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace contiv::sim {

//! f(x, z) = sum_j z^j (intercept_j + slope_j^T x). Slopes may be empty
//! (zero). Every regression surface in the simulation designs has this form.
struct PolyInZ
{
  std::vector<double> intercept;
  std::vector<std::vector<double>> slope;

  double operator()(std::span<const double> x, double z) const;
  //! d/dz at (x, z).
  double dz(std::span<const double> x, double z) const;
  //! E over X ~ N(0, I): sum_j intercept_j z^j.
  double marginal(double z) const;
  double marginal_dz(double z) const;
  int degree() const { return static_cast<int>(intercept.size()) - 1; }
};

enum class InstrumentLaw
{
  Normal,  // Z | X ~ N(eta0 + eta^T X, z_sd^2)
  Uniform  // Z ~ U[z_lo, z_hi], independent of X
};

enum class TreatmentLaw
{
  Gaussian,  // A = lambda(X, Z) + N(0, a_sd^2)
  Bernoulli  // A ~ Bernoulli(clamp(lambda(X, Z), 0, 1))
};

//! Which curve a simulation scores: the LIV ratio or the outcome derivative.
enum class Estimand
{
  Liv,
  Derivative
};

//! A fully specified data-generating process with analytic truths. X is
//! always N(0, I_dim).
struct DgpSpec
{
  std::string name;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::size_t dim = 4;

  InstrumentLaw z_law = InstrumentLaw::Normal;
  double eta0 = 0.0;
  std::vector<double> eta;
  double z_sd = 1.0;
  double z_lo = 0.0;
  double z_hi = 1.0;

  PolyInZ lambda;
  TreatmentLaw a_law = TreatmentLaw::Gaussian;
  double a_sd = 1.0;

  PolyInZ mu;
  double y_sd = 1.0;

  Estimand estimand = Estimand::Liv;

  double eta_of(std::span<const double> x) const;
  //! Conditional density pi(z | x).
  double pi(std::span<const double> x, double z) const;
  //! Marginal density f(z).
  double z_density(double z) const;
  //! Marginal quantile of Z.
  double z_quantile(double p) const;

  double tau(double z) const { return mu.marginal(z); }
  double delta(double z) const { return lambda.marginal(z); }
  double theta_y(double z) const { return mu.marginal_dz(z); }
  double theta_a(double z) const { return lambda.marginal_dz(z); }
  double gamma(double z) const { return theta_y(z) / theta_a(z); }
  //! Derivative curve the simulation scores (gamma for Liv, theta_y otherwise).
  double truth(double z) const;
};

//! Main LIV design: X ~ N(0, I_4), Z ~ N(2 + (0.1, 0.1, -0.1, 0.2) X, 1),
//! A = 1 + (0.1, -0.2, 0.3, 0.1) X + 0.1 Z + N(0, 1),
//! Y = 1 + (0.2, 0.2, 0.3, -0.1) X + Z(-0.1 X1 + 0.1 X3 - 0.13^2 Z^2) + N(0, 1).
DgpSpec liv_main(std::size_t n, std::uint64_t seed);

//! Derivative-only design: eta0 = -0.8, outcome slope 0.1 added, N(0, 4) noise.
DgpSpec deriv_only(std::size_t n, std::uint64_t seed);

//! Bounded instrument design for the maximal complier class: Z ~ U[0, 1],
//! lambda = 0.2 + 0.5 z with Bernoulli treatment, mu = 1 + z.
DgpSpec complier_unit(std::size_t n, std::uint64_t seed);

//! Main design with the instrument dropped from the outcome (theta_y = 0).
DgpSpec null_outcome(std::size_t n, std::uint64_t seed);

//! Main design with the instrument dropped from the treatment (theta_a = 0).
DgpSpec null_treatment(std::size_t n, std::uint64_t seed);

//! Main design with treatment decreasing in z (theta_a = -0.1).
DgpSpec decreasing_treatment(std::size_t n, std::uint64_t seed);

//! Main design with the instrument dropped from both regressions.
DgpSpec constant_truth(std::size_t n, std::uint64_t seed);

//! "liv_main", "deriv_only", "complier_unit", ...
DgpSpec dgp_from_name(const std::string& name, std::size_t n, std::uint64_t seed);

//! Seeded, reproducible draw of n observations.
Dataset generate(const DgpSpec& spec);

} // namespace contiv::sim
