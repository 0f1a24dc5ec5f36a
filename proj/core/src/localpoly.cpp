#include "contiv/localpoly.hpp"

#include "contiv/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace contiv::localpoly {

namespace {

constexpr double kMaxCondition = 1e12;

// Half-width beyond which a kernel is negligible when deciding whether the
// support truncates the window.
double
effective_radius(const KernelSpec& k)
{
  return k.support() == KernelSupport::Compact ? 1.0 : 4.0;
}

} // namespace

LocalFit
fit(std::span<const double> z,
    std::span<const double> y,
    double z0,
    double h,
    int p,
    const KernelSpec& kernel,
    const FitOptions& options)
{
  require_bandwidth(h);
  if (p < 0) {
    throw std::invalid_argument("localpoly::fit: degree must be non-negative");
  }
  if (z.size() != y.size()) {
    throw std::invalid_argument("localpoly::fit: z and y differ in length");
  }
  const auto dim = static_cast<Eigen::Index>(p + 1);
  const auto n = options.n_total > 0 ? options.n_total : z.size();
  if (options.n_total > 0 && options.n_total < z.size()) {
    throw std::invalid_argument("localpoly::fit: n_total smaller than the sample");
  }
  if (n < static_cast<std::size_t>(p + 2)) {
    throw Error(Errc::NotEnoughLocalData, "sample smaller than p + 2");
  }

  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd g(dim);
  std::size_t n_local = 0;
  double zmin = std::numeric_limits<double>::infinity();
  double zmax = -zmin;
  const bool compact = kernel.support() == KernelSupport::Compact;
  for (std::size_t i = 0; i < z.size(); ++i) {
    zmin = std::min(zmin, z[i]);
    zmax = std::max(zmax, z[i]);
    const double u = z[i] - z0;
    if (compact && std::abs(u) >= h) {
      continue;
    }
    const double w = eval(kernel, u / h) / h;
    if (w == 0.0) {
      continue;
    }
    ++n_local;
    basis(u, h, p, g.data());
    d.selfadjointView<Eigen::Lower>().rankUpdate(g, w);
    e.selfadjointView<Eigen::Lower>().rankUpdate(g, w * w * h);
    rhs.noalias() += (w * y[i]) * g;
  }
  if (n_local < static_cast<std::size_t>(p + 2)) {
    throw Error(Errc::NotEnoughLocalData,
                "only " + std::to_string(n_local) + " points in the window at z0 = " +
                  std::to_string(z0) + " (h = " + std::to_string(h) + ")");
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  d = d.selfadjointView<Eigen::Lower>();
  e = e.selfadjointView<Eigen::Lower>();
  d *= inv_n;
  e *= inv_n;
  rhs *= inv_n;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(d, Eigen::EigenvaluesOnly);
  const double lmin = eig.eigenvalues().minCoeff();
  const double lmax = eig.eigenvalues().maxCoeff();
  if (!(lmin > 0.0) || lmax / lmin > kMaxCondition) {
    throw Error(Errc::SingularDesign,
                "design matrix condition number too large at z0 = " + std::to_string(z0));
  }
  Eigen::LLT<Eigen::MatrixXd> llt(d);
  if (llt.info() != Eigen::Success) {
    throw Error(Errc::SingularDesign, "design matrix not positive definite");
  }

  LocalFit out;
  out.z0 = z0;
  out.h = h;
  out.p = p;
  out.beta = llt.solve(rhs);
  out.dhat = std::move(d);
  out.ehat = std::move(e);
  out.n_local = n_local;
  out.n = n;
  out.kernel = kernel;

  double wsum = 0.0;
  double wr2 = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double u = z[i] - z0;
    if (compact && std::abs(u) >= h) {
      continue;
    }
    const double w = eval(kernel, u / h) / h;
    if (w == 0.0) {
      continue;
    }
    basis(u, h, p, g.data());
    const double r = y[i] - g.dot(out.beta);
    wsum += w;
    wr2 += w * r * r;
  }
  out.residual_variance = wsum > 0.0 ? wr2 / wsum : 0.0;

  if (!std::isnan(options.support_lo)) {
    zmin = options.support_lo;
  }
  if (!std::isnan(options.support_hi)) {
    zmax = options.support_hi;
  }
  const double radius = kernel.integration_radius();
  out.window_lo = std::max(-radius, (zmin - z0) / h);
  out.window_hi = std::min(radius, (zmax - z0) / h);
  const double eff = effective_radius(kernel);
  out.boundary = out.window_lo > -eff || out.window_hi < eff;
  return out;
}

Eigen::MatrixXd
variance_matrix(const LocalFit& f)
{
  const auto dim = static_cast<Eigen::Index>(f.p + 1);
  Eigen::MatrixXd s(dim, dim);
  Eigen::MatrixXd st(dim, dim);
  const bool table = !f.boundary && 2 * f.p <= KernelSpec::kMomentTableSize;
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const int k = static_cast<int>(i + j);
      if (table) {
        s(i, j) = f.kernel.mu(k);
        st(i, j) = f.kernel.nu(k);
      } else {
        s(i, j) = truncated_moment(f.kernel, k, f.window_lo, f.window_hi, false);
        st(i, j) = truncated_moment(f.kernel, k, f.window_lo, f.window_hi, true);
      }
      s(j, i) = s(i, j);
      st(j, i) = st(i, j);
    }
  }
  const Eigen::MatrixXd sinv = s.inverse();
  return sinv * st * sinv;
}

double
derivative_stderr(const LocalFit& f, double f_hat_z0, std::size_t n)
{
  if (!(f_hat_z0 > 0.0)) {
    throw Error(Errc::InvalidDensity, "density at z0 must be positive");
  }
  if (f.p < 1) {
    throw std::invalid_argument("derivative_stderr: needs p >= 1");
  }
  const double v22 = variance_matrix(f)(1, 1);
  return std::sqrt(f.residual_variance * v22 /
                   (f_hat_z0 * static_cast<double>(n) * f.h * f.h * f.h));
}

double
value_stderr(const LocalFit& f, double f_hat_z0, std::size_t n)
{
  if (!(f_hat_z0 > 0.0)) {
    throw Error(Errc::InvalidDensity, "density at z0 must be positive");
  }
  const double v11 = variance_matrix(f)(0, 0);
  return std::sqrt(f.residual_variance * v11 /
                   (f_hat_z0 * static_cast<double>(n) * f.h));
}

} // namespace contiv::localpoly
