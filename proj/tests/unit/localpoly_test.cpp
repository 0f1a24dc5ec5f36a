#include "contiv/localpoly.hpp"
#include "support.hpp"

#include <Eigen/Dense>

using namespace contiv;
using doctest::Approx;

namespace {

std::vector<double>
uniform_sample(std::size_t n, double lo, double hi, std::uint64_t seed)
{
  Rng rng(seed);
  std::vector<double> z(n);
  for (auto& v : z) {
    v = lo + (hi - lo) * rng.uniform();
  }
  return z;
}

} // namespace

TEST_CASE("local linear reproduces affine data")
{
  const auto z = uniform_sample(300, 0.0, 1.0, 3);
  std::vector<double> y(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    y[i] = 2.0 + 3.0 * z[i];
  }
  for (const auto& k : {KernelSpec::epanechnikov(), KernelSpec::gaussian()}) {
    for (double z0 : {0.2, 0.5, 0.77}) {
      for (double h : {0.1, 0.3, 0.9}) {
        const auto f = localpoly::fit(z, y, z0, h, 1, k);
        CHECK(std::abs(localpoly::value(f) - (2.0 + 3.0 * z0)) < 1e-10);
        CHECK(std::abs(localpoly::derivative(f) - 3.0) < 1e-10);
      }
    }
  }
}

TEST_CASE("constant outcome")
{
  const auto z = uniform_sample(200, -1.0, 1.0, 4);
  const std::vector<double> y(z.size(), -1.25);
  for (int p : {1, 2, 3}) {
    const auto f = localpoly::fit(z, y, 0.1, 0.5, p, KernelSpec::epanechnikov());
    CHECK(std::abs(localpoly::value(f) + 1.25) < 1e-10);
    CHECK(std::abs(localpoly::derivative(f)) < 1e-10);
  }
}

TEST_CASE("matches a brute-force weighted least squares solve")
{
  const auto z = uniform_sample(500, 0.0, 1.0, 5);
  Rng rng(6);
  std::vector<double> y(z.size());
  for (auto& v : y) {
    v = rng.normal();
  }
  const double z0 = 0.5;
  const double h = 0.4;
  const int p = 2;
  const auto k = KernelSpec::epanechnikov();
  Eigen::MatrixXd xtwx = Eigen::MatrixXd::Zero(p + 1, p + 1);
  Eigen::VectorXd xtwy = Eigen::VectorXd::Zero(p + 1);
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double w = eval(k, (z[i] - z0) / h) / h;
    Eigen::VectorXd g(p + 1);
    for (int j = 0; j <= p; ++j) {
      g(j) = std::pow((z[i] - z0) / h, j);
    }
    xtwx += w * g * g.transpose();
    xtwy += w * g * y[i];
  }
  const Eigen::VectorXd beta = xtwx.fullPivLu().solve(xtwy);
  const auto f = localpoly::fit(z, y, z0, h, p, k);
  for (int j = 0; j <= p; ++j) {
    CHECK(f.beta(j) == Approx(beta(j)).epsilon(1e-9));
  }
}

TEST_CASE("polynomial reproduction at the sample boundary")
{
  const auto z = uniform_sample(400, 0.0, 1.0, 7);
  std::vector<double> y(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    y[i] = 1.0 - z[i] + 0.5 * z[i] * z[i] * z[i];
  }
  const double lo = *std::min_element(z.begin(), z.end());
  const auto f = localpoly::fit(z, y, lo, 0.3, 3, KernelSpec::epanechnikov());
  CHECK(f.boundary);
  CHECK(localpoly::value(f) == Approx(1.0 - lo + 0.5 * lo * lo * lo).epsilon(1e-9));
  CHECK(localpoly::derivative(f) == Approx(-1.0 + 1.5 * lo * lo).epsilon(1e-8));
}

TEST_CASE("derivative standard error from the moment tables")
{
  localpoly::LocalFit f;
  f.p = 1;
  f.h = 0.3;
  f.residual_variance = 1.0;
  f.kernel = KernelSpec::epanechnikov();
  // V22 = nu_2 / mu_2^2 with nu_2 = 0.5625 * 16 / 105 and mu_2 = 1/5
  const double v22 = 0.5625 * 16.0 / 105.0 / 0.04;
  CHECK(localpoly::derivative_stderr(f, 1.0, 10000) ==
        Approx(std::sqrt(v22 / (10000.0 * 0.027))).epsilon(1e-8));
  f.residual_variance = 0.0;
  CHECK(localpoly::derivative_stderr(f, 1.0, 10000) == 0.0);
  CHECK_ERRC(localpoly::derivative_stderr(f, 0.0, 10000), Errc::InvalidDensity);
}

TEST_CASE("fit errors")
{
  const std::vector<double> z = {0.0, 0.1, 0.2, 0.9, 1.0};
  const std::vector<double> y = {1.0, 2.0, 3.0, 4.0, 5.0};
  CHECK_ERRC(localpoly::fit(z, y, 0.5, 0.05, 1, KernelSpec::epanechnikov()), Errc::NotEnoughLocalData);
  CHECK_ERRC(localpoly::fit(z, y, 0.5, 0.0, 1, KernelSpec::epanechnikov()), Errc::InvalidBandwidth);
  const std::vector<double> tied(40, 0.5);
  const std::vector<double> ty(40, 1.0);
  CHECK_ERRC(localpoly::fit(tied, ty, 0.5, 0.3, 2, KernelSpec::gaussian()), Errc::SingularDesign);
}
