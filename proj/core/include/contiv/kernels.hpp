#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

namespace contiv {

enum class KernelFamily
{
  Epanechnikov,
  Gaussian,
  GaussianHighOrder
};

enum class KernelSupport
{
  Compact,  // [-1, 1]
  Unbounded
};

//! Immutable description of a symmetric smoothing kernel.
//!
//! The order is the first j >= 1 with a non-vanishing moment, so a classical
//! probability-density kernel has order 2. Gaussian-polynomial kernels are
//! stored as K(u) = P(u^2) phi(u) with P given by its coefficients in u^2.
//! Normalization and vanishing moments are checked by quadrature when the
//! spec is built, and the moment table mu_j, nu_j (j <= kMomentTableSize) is
//! cached.
class KernelSpec
{
public:
  static constexpr int kMomentTableSize = 12;

  static KernelSpec epanechnikov();
  static KernelSpec gaussian();

  KernelFamily family() const { return family_; }
  KernelSupport support() const { return support_; }
  int order() const { return order_; }
  const std::vector<double>& poly() const { return poly_; }
  std::string name() const;

  //! Half-width of the interval outside which K is treated as zero for
  //! integration: 1 for compact kernels, kGaussianRadius otherwise.
  double integration_radius() const;

  //! Cached mu_j = int u^j K(u) du and nu_j = int u^j K(u)^2 du.
  double mu(int j) const;
  double nu(int j) const;

  static constexpr double kGaussianRadius = 10.0;

private:
  friend KernelSpec make_high_order(int order);
  KernelSpec(KernelFamily family, int order, std::vector<double> poly);
  void build_moment_table();

  KernelFamily family_;
  KernelSupport support_;
  int order_;
  std::vector<double> poly_;
  std::vector<double> mu_;
  std::vector<double> nu_;
};

namespace detail {
inline constexpr double kInvSqrt2Pi = 0.3989422804014327;

inline double
poly_u2(const std::vector<double>& c, double u2)
{
  double acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) {
    acc = acc * u2 + *it;
  }
  return acc;
}

inline double
dpoly_u(const std::vector<double>& c, double u)
{
  // d/du sum_k c_k u^{2k} = sum_k 2k c_k u^{2k-1}
  const double u2 = u * u;
  double acc = 0.0;
  for (std::size_t k = c.size(); k-- > 1;) {
    acc = acc * u2 + 2.0 * static_cast<double>(k) * c[k];
  }
  return acc * u;
}
} // namespace detail

//! K(u); zero outside [-1, 1] for compact kernels.
inline double
eval(const KernelSpec& spec, double u)
{
  switch (spec.family()) {
    case KernelFamily::Epanechnikov:
      return std::abs(u) < 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
    case KernelFamily::Gaussian:
      return detail::kInvSqrt2Pi * std::exp(-0.5 * u * u);
    case KernelFamily::GaussianHighOrder:
      return detail::poly_u2(spec.poly(), u * u) * detail::kInvSqrt2Pi *
             std::exp(-0.5 * u * u);
  }
  return 0.0;
}

//! K'(u). The Epanechnikov derivative jumps at |u| = 1; the closed support
//! edge is treated as outside, so K'(+-1) = 0.
inline double
eval_derivative(const KernelSpec& spec, double u)
{
  switch (spec.family()) {
    case KernelFamily::Epanechnikov:
      return std::abs(u) < 1.0 ? -1.5 * u : 0.0;
    case KernelFamily::Gaussian:
      return -u * detail::kInvSqrt2Pi * std::exp(-0.5 * u * u);
    case KernelFamily::GaussianHighOrder: {
      const double phi = detail::kInvSqrt2Pi * std::exp(-0.5 * u * u);
      return phi * (detail::dpoly_u(spec.poly(), u) -
                    u * detail::poly_u2(spec.poly(), u * u));
    }
  }
  return 0.0;
}

//! K_h(z - z0) = K((z - z0) / h) / h. Throws InvalidBandwidth for h <= 0.
double
eval_localized(const KernelSpec& spec, double z, double z0, double h);

//! d/dz K_h(z - z0) = K'((z - z0) / h) / h^2.
double
eval_localized_derivative(const KernelSpec& spec, double z, double z0, double h);

//! Gaussian-polynomial kernel of the given even order (>= 4): all moments
//! 1..order-1 vanish. Throws InvalidKernelOrder otherwise.
KernelSpec
make_high_order(int order);

struct MomentPair
{
  double mu;
  double nu;
};

//! (mu_j, nu_j) for j = 0..max_j by adaptive quadrature.
std::vector<MomentPair>
moments(const KernelSpec& spec, int max_j);

//! int_lo^hi u^j K(u) du (or with K^2 when squared), lo/hi clamped to the
//! support. Used for boundary-truncated variance matrices.
double
truncated_moment(const KernelSpec& spec, int j, double lo, double hi, bool squared);

//! "epanechnikov", "gaussian", "gaussian4", "gaussian6", ...
KernelSpec
kernel_from_name(std::string_view name);

void
require_bandwidth(double h);

} // namespace contiv
