#include "contiv/kernels.hpp"

#include "contiv/error.hpp"
#include "contiv/quadrature.hpp"

#include <Eigen/Dense>

#include <charconv>
#include <stdexcept>

namespace contiv {

namespace {

constexpr double kMomentTol = 1e-10;

double
integrate_power(const KernelSpec& spec, int j, double lo, double hi, bool squared)
{
  const auto f = [&](double u) {
    const double k = eval(spec, u);
    return std::pow(u, j) * (squared ? k * k : k);
  };
  // Split at 0 so that odd integrands over symmetric ranges cancel cleanly.
  if (lo < 0.0 && hi > 0.0) {
    return quad::adaptive_simpson(f, lo, 0.0, kMomentTol) +
           quad::adaptive_simpson(f, 0.0, hi, kMomentTol);
  }
  return quad::adaptive_simpson(f, lo, hi, kMomentTol);
}

double
double_factorial_odd(int r)
{
  // (2r - 1)!! with (-1)!! = 1
  double acc = 1.0;
  for (int k = 2 * r - 1; k > 1; k -= 2) {
    acc *= k;
  }
  return acc;
}

} // namespace

KernelSpec::KernelSpec(KernelFamily family, int order, std::vector<double> poly)
  : family_(family)
  , support_(family == KernelFamily::Epanechnikov ? KernelSupport::Compact
                                                   : KernelSupport::Unbounded)
  , order_(order)
  , poly_(std::move(poly))
{
  build_moment_table();
}

KernelSpec
KernelSpec::epanechnikov()
{
  return KernelSpec(KernelFamily::Epanechnikov, 2, {});
}

KernelSpec
KernelSpec::gaussian()
{
  return KernelSpec(KernelFamily::Gaussian, 2, {1.0});
}

std::string
KernelSpec::name() const
{
  switch (family_) {
    case KernelFamily::Epanechnikov: return "epanechnikov";
    case KernelFamily::Gaussian: return "gaussian";
    case KernelFamily::GaussianHighOrder:
      return "gaussian" + std::to_string(order_);
  }
  return "unknown";
}

double
KernelSpec::integration_radius() const
{
  return support_ == KernelSupport::Compact ? 1.0 : kGaussianRadius;
}

double
KernelSpec::mu(int j) const
{
  if (j < 0 || j > kMomentTableSize) {
    throw std::out_of_range("KernelSpec::mu: index outside moment table");
  }
  return mu_[static_cast<std::size_t>(j)];
}

double
KernelSpec::nu(int j) const
{
  if (j < 0 || j > kMomentTableSize) {
    throw std::out_of_range("KernelSpec::nu: index outside moment table");
  }
  return nu_[static_cast<std::size_t>(j)];
}

void
KernelSpec::build_moment_table()
{
  const double r = integration_radius();
  mu_.resize(kMomentTableSize + 1);
  nu_.resize(kMomentTableSize + 1);
  for (int j = 0; j <= kMomentTableSize; ++j) {
    if (j % 2 == 1) {
      // symmetric kernel
      mu_[j] = 0.0;
      nu_[j] = 0.0;
      continue;
    }
    mu_[j] = 2.0 * integrate_power(*this, j, 0.0, r, false);
    nu_[j] = 2.0 * integrate_power(*this, j, 0.0, r, true);
  }
  if (std::abs(mu_[0] - 1.0) > 1e-8) {
    throw std::logic_error("kernel " + name() + " does not integrate to one");
  }
  for (int j = 1; j < order_; ++j) {
    if (std::abs(mu_[j]) > 1e-8) {
      throw std::logic_error("kernel " + name() + " has a non-vanishing moment");
    }
  }
}

double
eval_localized(const KernelSpec& spec, double z, double z0, double h)
{
  require_bandwidth(h);
  return eval(spec, (z - z0) / h) / h;
}

double
eval_localized_derivative(const KernelSpec& spec, double z, double z0, double h)
{
  require_bandwidth(h);
  return eval_derivative(spec, (z - z0) / h) / (h * h);
}

KernelSpec
make_high_order(int order)
{
  if (order < 4 || order % 2 != 0) {
    throw Error(Errc::InvalidKernelOrder,
                "high-order kernels need an even order >= 4, got " +
                  std::to_string(order));
  }
  // K(u) = phi(u) sum_{k<m} c_k u^{2k}; require int u^{2j} K = delta_{j0}
  // for j < m, using E[u^{2r}] = (2r - 1)!! under the standard normal.
  const int m = order / 2;
  Eigen::MatrixXd a(m, m);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
  rhs(0) = 1.0;
  for (int j = 0; j < m; ++j) {
    for (int k = 0; k < m; ++k) {
      a(j, k) = double_factorial_odd(j + k);
    }
  }
  const Eigen::VectorXd c = a.fullPivLu().solve(rhs);
  return KernelSpec(KernelFamily::GaussianHighOrder,
                    order,
                    std::vector<double>(c.data(), c.data() + c.size()));
}

std::vector<MomentPair>
moments(const KernelSpec& spec, int max_j)
{
  if (max_j < 0) {
    throw std::invalid_argument("moments: max_j must be non-negative");
  }
  const double r = spec.integration_radius();
  std::vector<MomentPair> out;
  out.reserve(static_cast<std::size_t>(max_j) + 1);
  for (int j = 0; j <= max_j; ++j) {
    out.push_back({integrate_power(spec, j, -r, r, false),
                   integrate_power(spec, j, -r, r, true)});
  }
  return out;
}

double
truncated_moment(const KernelSpec& spec, int j, double lo, double hi, bool squared)
{
  const double r = spec.integration_radius();
  lo = std::max(lo, -r);
  hi = std::min(hi, r);
  if (hi <= lo) {
    return 0.0;
  }
  return integrate_power(spec, j, lo, hi, squared);
}

KernelSpec
kernel_from_name(std::string_view name)
{
  if (name == "epanechnikov") {
    return KernelSpec::epanechnikov();
  }
  if (name == "gaussian") {
    return KernelSpec::gaussian();
  }
  constexpr std::string_view prefix = "gaussian";
  if (name.substr(0, prefix.size()) == prefix) {
    const auto digits = name.substr(prefix.size());
    int order = 0;
    const auto [ptr, ec] =
      std::from_chars(digits.data(), digits.data() + digits.size(), order);
    if (ec == std::errc() && ptr == digits.data() + digits.size()) {
      return make_high_order(order);
    }
  }
  throw Error(Errc::UnknownKernel, "unknown kernel '" + std::string(name) + "'");
}

void
require_bandwidth(double h)
{
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw Error(Errc::InvalidBandwidth,
                "bandwidth must be positive and finite, got " + std::to_string(h));
  }
}

} // namespace contiv
