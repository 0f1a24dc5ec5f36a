#pragma once

#include "contiv/dataset.hpp"
#include "contiv/effects.hpp"
#include "contiv/kernels.hpp"
#include "contiv/nuisance.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace contiv::bandwidth {

//! Weight w(z) of the pseudo-risk. MarginalDensity uses f_hat(z) times a
//! smooth taper that is 1 on [flat_lo, flat_hi] and 0 outside
//! [zero_lo, zero_hi]; Custom uses the supplied function.
struct WeightSpec
{
  enum class Kind
  {
    MarginalDensity,
    Custom
  };
  Kind kind = Kind::MarginalDensity;
  std::function<double(double)> custom;
  double zero_lo = 0.0;
  double flat_lo = 0.0;
  double flat_hi = 0.0;
  double zero_hi = 0.0;

  //! MarginalDensity with the taper at the 1%, 5%, 95% and 99% quantiles.
  static WeightSpec marginal_density(std::span<const double> z);
};

//! C^1 cosine taper.
double
taper(double z, const WeightSpec& spec);

//! w on the nodes; MarginalDensity reads f_hat from marginals.
std::vector<double>
weight_on_grid(std::span<const double> nodes, const WeightSpec& spec, const nuisance::MarginalFit* marginals);

//! Per-observation loss L_w(O) of a fixed curve theta_bar given on nodes
//! (linearly interpolated). d/dz{w theta_bar} by central differences on the
//! nodes, integrals by the trapezoid rule. Throws GridTooCoarse when a node
//! spacing exceeds h_min / 4.
class RiskFunctional
{
public:
  RiskFunctional(std::vector<double> nodes,
                 std::span<const double> theta_bar,
                 std::span<const double> weights,
                 const nuisance::NuisanceFit& nuisance,
                 Target target,
                 double h_min,
                 std::size_t dim);

  double loss(const Observation& o) const;
  double loss(std::span<const double> x, double z, double w_obs) const;
  //! Mean loss over a fold.
  double mean_loss(const Dataset& fold) const;
  //! int theta_bar^2 w dz.
  double square_term() const { return square_; }

private:
  double gprime_at(double z) const;

  std::vector<double> nodes_;
  std::vector<double> gprime_;
  double square_ = 0.0;
  const nuisance::NuisanceFit* nuisance_;
  Target target_;
  std::function<double(std::span<const double>)> integral_;
};

//! L_w(O) for one observation. marginals supplies f_hat when the weight is
//! MarginalDensity.
double
pseudo_risk_loss(const Observation& o,
                 std::span<const double> nodes,
                 std::span<const double> theta_bar,
                 const nuisance::NuisanceFit& nuisance,
                 const nuisance::MarginalFit& marginals,
                 const WeightSpec& w_spec,
                 Target target,
                 double h_min);

//! int (a - b)^2 w dz by the trapezoid rule.
double
weighted_sq_distance(std::span<const double> nodes,
                     std::span<const double> a,
                     std::span<const double> b,
                     std::span<const double> w);

struct TwoFoldScheme
{
  std::uint64_t seed = 0;
  std::size_t fold_sizes[2] = {0, 0};
};

struct RiskTable
{
  std::vector<double> candidates;
  std::vector<double> risk_hat;
  //! risk_fold[k][c]: risk of candidate c fitted on fold k, evaluated on
  //! the other fold.
  std::vector<double> risk_fold[2];
  std::vector<std::string> flags;
  std::size_t chosen = 0;
  TwoFoldScheme fold_scheme;
  std::vector<double> nodes;

  double chosen_h() const { return candidates.at(chosen); }
};

struct SelectConfig
{
  effects::Method method = effects::Method::LocalPoly;
  Target target = Target::Outcome;
  WeightSpec weight;
  //! Local polynomial degree (LocalPoly only).
  int p = 2;
  KernelSpec kernel = KernelSpec::epanechnikov();
  nuisance::NuisanceFactory nuisance;
  bool rotate = true;
  std::uint64_t seed = 0;
  //! Evaluation nodes; 0 picks the count that keeps the spacing at h_min / 4.
  std::size_t grid_points = 0;
  //! Weight spec derived from data when true (overrides weight).
  bool auto_weight = true;
};

//! Index of the smallest finite risk, ties toward the larger h. Throws
//! AllCandidatesFailed when no entry is finite.
std::size_t
argmin_risk(std::span<const double> candidates, std::span<const double> risk);

//! Two-fold swap-and-average pseudo-risk over the candidates. Within each
//! training fold the usual three-way cross-fitting plan produces the curve.
RiskTable
select(const Dataset& data, std::span<const double> candidates, const SelectConfig& config);

//! count geometric points over [0.5, 2] times Silverman's bandwidth of z.
std::vector<double>
default_candidates(std::span<const double> z, std::size_t count = 8);

//! CSV with columns h, risk_hat, risk_fold1, risk_fold2, chosen, flag.
void
write_risk_csv(std::ostream& out, const RiskTable& table);

} // namespace contiv::bandwidth
