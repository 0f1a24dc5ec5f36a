#pragma once

#include "contiv/dataset.hpp"
#include "contiv/kernels.hpp"
#include "contiv/nuisance.hpp"
#include "contiv/pseudo.hpp"

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace contiv::effects {

enum class Method
{
  LocalPoly,
  Smooth
};

enum class VarianceRoute
{
  RateAware,
  InfluenceExpansion
};

std::string_view method_name(Method m);
Method method_from_name(std::string_view name);

//! An estimate with its standard error and convergence rate (for example
//! sqrt(n h^3)); larger rate means faster convergence.
struct RatioPart
{
  double estimate = 0.0;
  double stderr = 0.0;
  double rate = 1.0;
};

//! Standard error of num / den by the ratio limit cases: numerator faster
//! -> |num| se_den / den^2; denominator faster -> se_num / |den|; equal rates
//! -> delta method with covariance cov. Throws ZeroDenominator.
double
ratio_variance_rate_aware(const RatioPart& num, const RatioPart& den, double cov = 0.0);

//! sqrt(Var(phi_num / den - num / den^2 phi_den) / n) with the sample
//! variance. Throws MisalignedFolds for arrays of different length and
//! ZeroDenominator.
double
ratio_variance_influence(std::span<const double> phi_num,
                         std::span<const double> phi_den,
                         double num,
                         double den);

struct LivConfig
{
  Method method = Method::LocalPoly;
  VarianceRoute route = VarianceRoute::InfluenceExpansion;
  //! Local polynomial degree (LocalPoly only); p_a > 0 overrides it for
  //! the treatment curve.
  int p = 2;
  int p_a = 0;
  double h_y = 0.5;
  double h_a = 0.5;
  KernelSpec kernel = KernelSpec::epanechnikov();
  nuisance::NuisanceFactory nuisance;
  bool rotate = true;
  std::uint64_t seed = 0;
  double relevance_floor = 1e-3;
  //! When positive, points with |theta_a| <= relevance_z times the
  //! influence-based standard error of theta_a are flagged as well. Off by
  //! default.
  double relevance_z = 0.0;
};

struct LivPoint
{
  double z0 = 0.0;
  double gamma = std::numeric_limits<double>::quiet_NaN();
  double stderr = std::numeric_limits<double>::quiet_NaN();
  double theta_y = std::numeric_limits<double>::quiet_NaN();
  double theta_a = std::numeric_limits<double>::quiet_NaN();
  std::string flag = "ok";
};

struct LivCurve
{
  std::vector<LivPoint> points;
  pseudo::CurveEstimate numerator;
  pseudo::CurveEstimate denominator;
  Method method = Method::LocalPoly;
  VarianceRoute route = VarianceRoute::InfluenceExpansion;
};

//! Outcome and treatment derivative curves on one shared fold scheme and
//! their pointwise ratio. Points with |theta_a| <= relevance_floor are
//! flagged WeakInstrumentRegion and left undefined.
LivCurve
liv_curve(const Dataset& data, std::span<const double> grid, const LivConfig& config);

//! Both derivative curves from an existing plan (shared with other callers).
LivCurve
liv_curve(const pseudo::CrossfitPlan& plan, std::span<const double> grid, const LivConfig& config);

//! CSV with columns z0, gamma, stderr, ci_lo, ci_hi, theta_y, theta_a, flag.
void
write_liv_csv(std::ostream& out, const LivCurve& curve);

//! Treatment derivative curve read as the density of the latent threshold.
//! Negative estimates keep their value and get the NegativeDensity flag.
struct ThresholdDensity
{
  pseudo::CurveEstimate curve;
  std::size_t negative_points = 0;
};

ThresholdDensity
threshold_density(const Dataset& data, std::span<const double> grid, const pseudo::CrossfitConfig& config);

struct BoundaryComponent
{
  double estimate = 0.0;
  double stderr = 0.0;
};

struct Interval
{
  double lo = std::numeric_limits<double>::quiet_NaN();
  double hi = std::numeric_limits<double>::quiet_NaN();
};

struct ComplierResult
{
  double proportion = 0.0;
  double proportion_se = 0.0;
  Interval proportion_ci;
  double late = std::numeric_limits<double>::quiet_NaN();
  double late_se = std::numeric_limits<double>::quiet_NaN();
  Interval late_ci;
  BoundaryComponent lambda1;
  BoundaryComponent lambda0;
  BoundaryComponent tau1;
  BoundaryComponent tau0;
  //! Correlation of the outcome and treatment value estimates at each end.
  double corr1 = 0.0;
  double corr0 = 0.0;
  std::string flag = "ok";

  std::string to_json() const;
};

struct ComplierConfig
{
  int p = 1;
  double h = 0.3;
  KernelSpec kernel = KernelSpec::epanechnikov();
  nuisance::NuisanceFactory nuisance;
  bool rotate = true;
  std::uint64_t seed = 0;
  double relevance_floor = 1e-3;
};

//! Proportion lambda(1) - lambda(0) and LATE (tau(1) - tau(0)) / proportion
//! from boundary fits at z = 0 and z = 1. The two ends are treated as
//! independent. Requires Z within [0, 1]; WeakInstrument leaves the LATE out.
ComplierResult
maximal_complier(const Dataset& data, const ComplierConfig& config);

//! Maps Z affinely onto [0, 1]; returns the data with the map's lo and hi.
struct Rescaled
{
  Dataset data;
  double lo = 0.0;
  double hi = 1.0;
};

Rescaled
rescale_unit(const Dataset& data);

} // namespace contiv::effects
