#pragma once

#include "contiv/kernels.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <limits>
#include <span>

namespace contiv::localpoly {

//! Weighted local polynomial fit of y on z around z0.
//!
//! Coefficients are on the rescaled basis g_h(u) = (1, u/h, ..., u^p/h^p), so
//! beta[0] estimates the curve and beta[1] / h its derivative. dhat is the
//! empirical design matrix P_n[g_h K_h g_h^T]; ehat is its squared-kernel
//! analogue h P_n[g_h K_h^2 g_h^T].
struct LocalFit
{
  double z0 = 0.0;
  double h = 0.0;
  int p = 1;
  Eigen::VectorXd beta;
  Eigen::MatrixXd dhat;
  Eigen::MatrixXd ehat;
  std::size_t n_local = 0;
  std::size_t n = 0;
  double residual_variance = 0.0;
  //! Kernel window in units of h, clipped to the observed support of z.
  double window_lo = -1.0;
  double window_hi = 1.0;
  //! True when the observed support cuts into the kernel window.
  bool boundary = false;
  KernelSpec kernel = KernelSpec::epanechnikov();
};

//! Overrides for fits on a pre-filtered sample: rows outside every kernel
//! window may be dropped as long as the original size and support are given.
struct FitOptions
{
  //! Normalizing size for D and E (0 = len(z)).
  std::size_t n_total = 0;
  //! Observed support of the full sample (NaN = range of z).
  double support_lo = std::numeric_limits<double>::quiet_NaN();
  double support_hi = std::numeric_limits<double>::quiet_NaN();
};

//! Solves D beta = P_n[g_h K_h y] by Cholesky. Throws NotEnoughLocalData when
//! fewer than p + 2 points get kernel weight and SingularDesign when the
//! condition number of D exceeds 1e12; both mean h should grow.
LocalFit
fit(std::span<const double> z,
    std::span<const double> y,
    double z0,
    double h,
    int p,
    const KernelSpec& kernel,
    const FitOptions& options = {});

inline double
value(const LocalFit& f)
{
  return f.beta(0);
}

inline double
derivative(const LocalFit& f)
{
  return f.beta(1) / f.h;
}

//! Asymptotic variance matrix S^{-1} S~ S^{-1}, with S and S~ built from
//! kernel moments over the fit's window (full moments in the interior,
//! truncated moments at a boundary).
Eigen::MatrixXd
variance_matrix(const LocalFit& f);

//! sqrt(sigma^2 V_22 / (f(z0) n h^3)). Throws InvalidDensity when f_hat_z0 <= 0.
double
derivative_stderr(const LocalFit& f, double f_hat_z0, std::size_t n);

//! sqrt(sigma^2 V_11 / (f(z0) n h)).
double
value_stderr(const LocalFit& f, double f_hat_z0, std::size_t n);

//! Rescaled basis g_h(u) written into out (size p + 1).
inline void
basis(double u, double h, int p, double* out)
{
  const double t = u / h;
  double acc = 1.0;
  for (int j = 0; j <= p; ++j) {
    out[j] = acc;
    acc *= t;
  }
}

} // namespace contiv::localpoly
