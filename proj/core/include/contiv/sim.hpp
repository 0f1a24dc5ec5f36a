#pragma once

#include "contiv/dgp.hpp"
#include "contiv/kernels.hpp"
#include "contiv/pseudo.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace contiv::sim {

enum class Estimator
{
  LocalPoly,
  Smooth,
  PlugIn,
  ProjectionLinear
};

std::string_view estimator_name(Estimator e);
Estimator estimator_from_name(std::string_view name);

enum class NuisanceMode
{
  //! Truth perturbed at rate n^-alpha.
  Synthetic,
  //! The DGP's own nuisances (alpha ignored).
  True
};

//! Bandwidths h = h_y n^-exponent (outcome) and h_a n^-exponent (treatment).
struct EstimatorSettings
{
  double h_y = 0.5;
  double h_a = 0.5;
  double exponent = 0.0;
  int p = 2;
  //! Treatment-curve degree when positive.
  int p_a = 0;
  KernelSpec kernel = KernelSpec::epanechnikov();

  double outcome_h(std::size_t n) const;
  double treatment_h(std::size_t n) const;
  std::string rule() const;
};

struct SimConfig
{
  std::vector<std::string> dgps = {"liv_main"};
  std::vector<Estimator> estimators = {Estimator::LocalPoly, Estimator::Smooth, Estimator::ProjectionLinear};
  std::vector<std::size_t> ns = {2000};
  std::vector<double> alphas = {0.1};
  std::size_t S = 100;
  std::uint64_t seed = 0;
  NuisanceMode nuisance = NuisanceMode::Synthetic;
  EstimatorSettings local_poly;
  EstimatorSettings smooth{0.3, 0.3, 0.0, 0, 0, KernelSpec::gaussian()};
  std::size_t grid_points = 50;
  //! Truncation of the instrument law used for the grid and the RMSE weights.
  double trim_lo = 0.05;
  double trim_hi = 0.95;
  bool rotate = true;
  bool keep_replications = false;
};

//! Grid, truth and normalized weights of the truncated instrument law.
struct ScoringGrid
{
  std::vector<double> z;
  std::vector<double> truth;
  std::vector<double> weight;
};

ScoringGrid
scoring_grid(const DgpSpec& dgp, std::size_t points, double trim_lo, double trim_hi);

//! sum_k weight_k sqrt(mean_s (est[s][k] - truth_k)^2). NaN entries are left
//! out of their point's mean; a point with no estimate makes the result NaN.
double
weighted_rmse(std::span<const double> weight,
              std::span<const double> truth,
              const std::vector<std::vector<double>>& estimates);

//! Fraction of (replication, point) pairs whose 95% interval covers truth.
double
coverage(std::span<const double> truth,
         const std::vector<std::vector<double>>& estimates,
         const std::vector<std::vector<double>>& stderrs);

struct SimResult
{
  std::string dgp;
  Estimator estimator = Estimator::LocalPoly;
  std::size_t n = 0;
  double alpha = 0.0;
  double h = 0.0;
  std::string h_rule;
  std::size_t S = 0;
  double rmse = 0.0;
  //! NaN for estimators without standard errors.
  double coverage = 0.0;
  double seconds = 0.0;
  std::size_t failures = 0;
  std::string last_error;
  ScoringGrid grid;
  //! estimates[s][k] and stderrs[s][k], kept on request.
  std::vector<std::vector<double>> estimates;
  std::vector<std::vector<double>> stderrs;
};

//! Every (dgp, n, alpha, estimator) cell over S seeded replications. All
//! estimators of one replication share its data, nuisances and fold plan.
std::vector<SimResult>
run_grid(const SimConfig& config);

//! Columns dgp, estimator, n, alpha, h, S, rmse, coverage, seconds. Without
//! timing the seconds column is left out so that reruns compare byte for byte.
void
write_results_csv(std::ostream& out, const std::vector<SimResult>& results, bool timing = true);

//! Columns dgp, estimator, n, alpha, rep, z0, estimate, stderr, truth.
void
write_replications_csv(std::ostream& out, const std::vector<SimResult>& results);

enum class RateQuantity
{
  Derivative,
  Value
};

struct RateConfig
{
  Estimator estimator = Estimator::LocalPoly;
  RateQuantity quantity = RateQuantity::Derivative;
  int p = 3;
  //! h = h0 (n / 1000)^(-1/7).
  double h0 = 0.8;
  double exponent = 1.0 / 7.0;
  KernelSpec kernel = KernelSpec::epanechnikov();
  std::size_t S = 200;
  std::uint64_t seed = 0;
  std::size_t grid_points = 50;
};

struct RateResult
{
  std::vector<std::size_t> ns;
  std::vector<double> hs;
  std::vector<double> rmse;
  double slope = 0.0;
};

//! Least-squares slope of log RMSE on log n with true nuisances. Derivative
//! scores theta_y; Value scores tau. Requires at least 4 values of n.
RateResult
rate_slope(const std::string& dgp, const std::vector<std::size_t>& ns, const RateConfig& config);

} // namespace contiv::sim
