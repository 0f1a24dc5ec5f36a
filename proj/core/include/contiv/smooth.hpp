#pragma once

#include "contiv/dataset.hpp"
#include "contiv/kernels.hpp"
#include "contiv/nuisance.hpp"
#include "contiv/pseudo.hpp"
#include "contiv/random.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace contiv::smooth {

//! Nodes and weights of sum_q weights[q] g(nodes[q]) ~ int g(z) K_h'(z - z0) dz.
struct QuadGrid
{
  std::vector<double> nodes;
  std::vector<double> weights;
};

//! Half-width of the integration window in units of h: 1 for compact
//! kernels, 8 for Gaussian families.
double
window_radius(const KernelSpec& kernel);

//! Gauss-Legendre rule with n_nodes points on each half of the window
//! z0 +- radius h, weighted by K_h'(z - z0).
QuadGrid
quad_grid(double z0, double h, const KernelSpec& kernel, std::size_t n_nodes);

//! -K_h'(Z - z0)(W - m(X, Z)) / pi(Z | X) - int m(X, z) K_h'(z - z0) dz with
//! (W, m) = (Y, mu_hat) or (A, lambda_hat).
double
influence_value(const Observation& o,
                const nuisance::NuisanceFit& nuisance,
                Target target,
                double z0,
                double h,
                const KernelSpec& kernel,
                const QuadGrid& grid);

//! Node count (64, 128, ...) at which doubling changes the integral term by
//! at most rel_tol relative to its absolute mass, checked on probe rows.
//! Throws QuadratureUnderResolved beyond max_nodes.
std::size_t
resolve_nodes(const Surface& regression,
              const RowMatrix& probes,
              double z0,
              double h,
              const KernelSpec& kernel,
              double rel_tol = 1e-4,
              std::size_t min_nodes = 64,
              std::size_t max_nodes = 4096);

struct SmoothDerivEstimate
{
  double z0 = 0.0;
  double h = 0.0;
  double theta_hat = 0.0;
  double stderr = 0.0;
  KernelSpec kernel = KernelSpec::gaussian();
  std::size_t n_used = 0;
  std::size_t quad_nodes = 0;
  //! Per-observation influence values (kept on request).
  std::vector<double> influence;
};

//! Sample mean of influence values over a fold disjoint from the nuisance
//! training fold; stderr = sd / sqrt(n).
SmoothDerivEstimate
estimate(const Dataset& fold,
         const nuisance::NuisanceFit& nuisance,
         Target target,
         double z0,
         double h,
         const KernelSpec& kernel,
         bool keep_influence = false);

//! Rotation average over a cross-fitting plan; each rotation estimates on
//! its regression fold with its own nuisances. Method tag "smooth".
pseudo::CurveEstimate
crossfit_smooth(const pseudo::CrossfitPlan& plan,
                Target target,
                std::span<const double> grid,
                double h,
                const KernelSpec& kernel,
                bool keep_influence = false);

using SurfaceFn = std::function<double(std::span<const double> x, double z)>;
using CovariateSampler = std::function<std::vector<double>(Rng&)>;

//! theta_h(z0) - theta(z0) for a known mu: theta_h by quadrature of
//! -int mu(x, z) K_h'(z - z0) dz averaged over draws of X, theta as the
//! average of dmu_dz(x, z0) over the same draws.
double
smoothing_bias_oracle(const SurfaceFn& mu,
                      const SurfaceFn& dmu_dz,
                      const CovariateSampler& x_law,
                      double z0,
                      double h,
                      const KernelSpec& kernel,
                      std::size_t draws = 100000,
                      std::uint64_t seed = 1);

} // namespace contiv::smooth
