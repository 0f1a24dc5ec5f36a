#pragma once

#include "contiv/dataset.hpp"
#include "contiv/kernels.hpp"
#include "contiv/localpoly.hpp"
#include "contiv/nuisance.hpp"

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace contiv::pseudo {

//! (W - m(X, Z)) f(Z) / pi(Z | X) + m0(Z) with W = Y, m = mu_hat, m0 = tau0_hat
//! for the outcome and W = A, m = lambda_hat, m0 = lambda0_hat for the
//! treatment. Throws FoldOverlap when o belongs to the training or marginal
//! fold and NonFiniteResult for a non-finite value.
double
pseudo_outcome(const Observation& o,
               const nuisance::NuisanceFit& nuisance,
               const nuisance::MarginalFit& marginals,
               Target target);

//! Which of the three folds plays which role in one rotation.
struct FoldScheme
{
  std::size_t rotation = 0;
  std::size_t nuisance_fold = 0;
  std::size_t marginal_fold = 1;
  std::size_t regression_fold = 2;
  std::vector<std::size_t> fold_sizes;
  std::uint64_t seed = 0;
};

struct Rotation
{
  FoldScheme scheme;
  nuisance::NuisanceFit nuisance;
  nuisance::MarginalFit marginals;
  Dataset regression;
};

//! Three-fold split with nuisances fitted once per rotation. Rotation r
//! trains on fold r, averages marginals over fold r + 1 and regresses on
//! fold r + 2 (mod 3). The remainder of n mod 3 lands in fold 2, the
//! regression fold of the first rotation.
struct CrossfitPlan
{
  std::vector<Rotation> rotations;
  std::size_t n = 0;
  std::uint64_t seed = 0;
};

CrossfitPlan
make_plan(const Dataset& data,
          const nuisance::NuisanceFactory& factory,
          std::uint64_t seed,
          bool rotate = true);

//! Pseudo-outcomes of one rotation's regression fold, restricted to rows with
//! z in [window_lo, window_hi].
struct PseudoSample
{
  std::vector<double> z;
  std::vector<double> xi;
  //! Row of each entry within the regression fold.
  std::vector<std::size_t> rows;
  Target target = Target::Outcome;
  FoldScheme scheme;
  std::size_t n_total = 0;
  double support_lo = 0.0;
  double support_hi = 0.0;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

//! Builds pseudo samples for several targets of the same rotation, sharing
//! the density evaluations.
std::vector<PseudoSample>
build_pseudo(const Rotation& rotation,
             std::span<const Target> targets,
             double window_lo = -kInf,
             double window_hi = kInf);

PseudoSample
build_pseudo(const Rotation& rotation, Target target, double window_lo = -kInf, double window_hi = kInf);

struct CurvePoint
{
  double z0 = 0.0;
  double value = std::numeric_limits<double>::quiet_NaN();
  double value_se = std::numeric_limits<double>::quiet_NaN();
  double derivative = std::numeric_limits<double>::quiet_NaN();
  double derivative_se = std::numeric_limits<double>::quiet_NaN();
  //! Rotation average of f_hat(z0).
  double f_hat = std::numeric_limits<double>::quiet_NaN();
  std::size_t n_local = 0;
  bool boundary = false;
  //! "ok", "boundary", a diagnostic, or the module-qualified error of a
  //! missing point.
  std::string flag = "ok";

  bool missing() const { return std::isnan(value) && std::isnan(derivative); }
};

//! Curve on a grid. Influence arrays (when requested) hold, per grid point,
//! one value per observation of the stacked regression folds, scaled so that
//! estimate - truth is approximately their sum divided by n_influence.
struct CurveEstimate
{
  Target target = Target::Outcome;
  std::string method = "localpoly";
  double h = 0.0;
  int p = 1;
  std::string kernel;
  std::vector<CurvePoint> points;
  std::vector<std::vector<double>> rotation_value;
  std::vector<std::vector<double>> rotation_derivative;
  std::vector<std::vector<double>> influence_value;
  std::vector<std::vector<double>> influence_derivative;
  std::vector<std::uint64_t> influence_ids;

  std::vector<double> grid() const;
  std::vector<double> derivatives() const;
  std::vector<double> values() const;
};

struct CurveConfig
{
  int p = 1;
  double h = 0.5;
  KernelSpec kernel = KernelSpec::epanechnikov();
  bool keep_influence = false;
};

//! Local polynomial fits of each rotation's pseudo sample at every grid
//! point, averaged over rotations. Window failures mark the point missing.
CurveEstimate
fit_curve(const CrossfitPlan& plan,
          std::span<const PseudoSample> samples,
          std::span<const double> grid,
          const CurveConfig& config);

//! n equispaced points between the lo and hi quantiles of z.
std::vector<double>
default_grid(std::span<const double> z, std::size_t n = 50, double lo = 0.05, double hi = 0.95);

//! Pseudo-sample window covering every kernel window of the grid.
std::pair<double, double>
pseudo_window(std::span<const double> grid, double h, const KernelSpec& kernel);

struct CrossfitConfig
{
  CurveConfig curve;
  nuisance::NuisanceFactory nuisance;
  bool rotate = true;
  std::uint64_t seed = 0;
};

//! The whole pipeline for one target: plan, pseudo samples, fits.
CurveEstimate
crossfit_curve(const Dataset& data,
               Target target,
               const CrossfitConfig& config,
               std::span<const double> grid);

//! crossfit_curve at a single (typically boundary) point.
CurvePoint
boundary_curve(const Dataset& data, Target target, double z0, const CrossfitConfig& config);

enum class Quantity
{
  Value,
  Derivative
};

//! CSV with columns z0, estimate, stderr, ci_lo, ci_hi, n_local, flag.
void
write_curve_csv(std::ostream& out, const CurveEstimate& curve, Quantity quantity);

} // namespace contiv::pseudo
