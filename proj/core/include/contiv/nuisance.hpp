#pragma once

#include "contiv/dataset.hpp"
#include "contiv/dgp.hpp"
#include "contiv/surface.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace contiv {

//! Which response a pipeline regresses: Y (with mu) or A (with lambda).
enum class Target
{
  Outcome,
  Treatment
};

std::string_view target_name(Target t);

} // namespace contiv

namespace contiv::nuisance {

enum class Learner
{
  Linear,
  LocalLinearInZ_LinearInX,
  KernelRidge
};

//! Columns of the Linear learner: 1, x, z..z^z_degree and optionally z x.
struct LinearBasis
{
  int z_degree = 1;
  bool z_x_interactions = false;
};

struct LearnerOptions
{
  LinearBasis basis;
  //! Centers kept by KernelRidge (a leading subsample of the fold).
  std::size_t ridge_max_centers = 1000;
  //! Grid size for LocalLinearInZ_LinearInX.
  std::size_t local_grid = 41;
};

//! "linear", "linear-cubic", "local-linear", "kernel-ridge".
Learner learner_from_name(std::string_view name, LearnerOptions& options);
std::string_view learner_name(Learner learner);

//! Regression of Y (Outcome) or A (Treatment) on (X, Z). Throws EmptyFold,
//! RankDeficientDesign (Linear with collinear columns).
SurfacePtr
fit_regression(const Dataset& fold,
               Target target,
               Learner learner,
               const LearnerOptions& options = {});

//! Regression of an arbitrary response on X alone.
SurfacePtr
fit_covariate_regression(const RowMatrix& x,
                         std::span<const double> response,
                         Learner learner,
                         const LearnerOptions& options = {});

//! Silverman's rule 0.9 min(sd, IQR / 1.34) n^(-1/5).
double
silverman_bandwidth(std::span<const double> sample);

inline constexpr double kVarianceFloor = 1e-6;

//! pi(z | x) from a KDE of standardized residuals of Z given X. The
//! conditional variance is a regression of squared residuals on X, floored at
//! kVarianceFloor. Requires at least 50 rows.
DensityPtr
fit_propensity_residual_kde(const Dataset& fold,
                            Learner mean_learner,
                            Learner var_learner,
                            ClipBounds clip = {},
                            const LearnerOptions& options = {});

//! Estimated nuisances together with the rows they were trained on.
struct NuisanceFit
{
  DensityPtr pi_hat;
  SurfacePtr mu_hat;
  SurfacePtr lambda_hat;
  Provenance training;
  ClipBounds clip;

  const Surface& regression(Target t) const
  {
    return t == Target::Outcome ? *mu_hat : *lambda_hat;
  }
  std::string summary() const;
};

//! f_hat, tau0_hat and lambda0_hat: fold averages of pi_hat, mu_hat and
//! lambda_hat over the covariates of a fold disjoint from the training fold.
class MarginalFit
{
public:
  MarginalFit() = default;
  MarginalFit(NuisanceFit nuisance, const Dataset& fold);

  double f_hat(double z) const;
  double tau0_hat(double z) const;
  double lambda0_hat(double z) const;
  double initial(Target t, double z) const
  {
    return t == Target::Outcome ? tau0_hat(z) : lambda0_hat(z);
  }

  //! Batched versions.
  std::vector<double> f_hat(std::span<const double> zs) const;
  std::vector<double> initial(Target t, std::span<const double> zs) const;

  const Provenance& source() const { return source_; }
  const RowMatrix& covariates() const { return x_; }
  const NuisanceFit& nuisance() const { return nuisance_; }

private:
  NuisanceFit nuisance_;
  RowMatrix x_;
  Provenance source_;
};

//! Throws FoldOverlap when the fold shares rows with the nuisance training
//! fold.
MarginalFit
marginals_from(const NuisanceFit& nuisance, const Dataset& fold);

//! Learned nuisances on a training fold.
struct LearnedSpec
{
  Learner regression = Learner::Linear;
  Learner pi_mean = Learner::Linear;
  Learner pi_variance = Learner::Linear;
  LearnerOptions options;
  ClipBounds clip;
};

NuisanceFit
fit_nuisances(const Dataset& fold, const LearnedSpec& spec);

//! The DGP's own surfaces.
NuisanceFit
true_nuisance(const sim::DgpSpec& truth, ClipBounds clip = {});

//! Truth perturbed at rate n^-alpha: eta_hat = eta + N(s, s^2),
//! lambda_hat = lambda + N(s, s^2) and the leading z coefficient of mu scaled
//! by 1 + N(s, s^2), with s = n^-alpha. The three draws are fixed by seed.
//! Throws InvalidRate for alpha < 0.
NuisanceFit
synthetic_nuisance(const sim::DgpSpec& truth,
                   double alpha,
                   std::size_t n,
                   std::uint64_t seed,
                   ClipBounds clip = {});

enum class Misspecify
{
  Propensity,
  Regressions
};

//! Truth with every coefficient of one nuisance doubled (eta for the
//! propensity; mu and lambda for the regressions).
NuisanceFit
misspecified_nuisance(const sim::DgpSpec& truth, Misspecify which, ClipBounds clip = {});

//! Produces the nuisances for one cross-fitting rotation from its training
//! fold. Synthetic factories ignore the fold.
using NuisanceFactory = std::function<NuisanceFit(const Dataset& training_fold)>;

NuisanceFactory
learned_factory(LearnedSpec spec);

NuisanceFactory
fixed_factory(NuisanceFit fit);

} // namespace contiv::nuisance
