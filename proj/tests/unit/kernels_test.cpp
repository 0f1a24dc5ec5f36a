#include "contiv/kernels.hpp"
#include "support.hpp"

using namespace contiv;
using doctest::Approx;

namespace {

double
integrate(const std::function<double(double)>& g, double lo, double hi, int n = 20000)
{
  // composite Simpson
  const double step = (hi - lo) / n;
  double acc = g(lo) + g(hi);
  for (int i = 1; i < n; ++i) {
    acc += g(lo + i * step) * (i % 2 ? 4.0 : 2.0);
  }
  return acc * step / 3.0;
}

} // namespace

TEST_CASE("kernel values")
{
  const auto epa = KernelSpec::epanechnikov();
  const auto gau = KernelSpec::gaussian();
  CHECK(eval(epa, 0.0) == Approx(0.75));
  CHECK(eval(epa, 1.5) == 0.0);
  CHECK(eval(gau, 0.0) == Approx(0.3989422804014327).epsilon(1e-14));
  CHECK(epa.order() == 2);
  CHECK(gau.order() == 2);
}

TEST_CASE("localized kernel and derivative")
{
  const auto epa = KernelSpec::epanechnikov();
  const auto gau = KernelSpec::gaussian();
  CHECK(eval_localized(epa, 1.0, 1.0, 0.5) == Approx(1.5));
  CHECK(eval_localized(epa, 2.0, 1.0, 0.5) == 0.0);
  CHECK(eval_localized(gau, 2.0, 1.0, 1.0) == Approx(0.24197072451914337));
  CHECK(eval_localized_derivative(gau, 0.3, 0.3, 0.7) == 0.0);
  CHECK(eval_localized_derivative(gau, 2.0, 1.0, 1.0) == Approx(-0.24197072451914337));
  for (double h : {0.2, 0.5, 1.3}) {
    CHECK(eval_localized_derivative(epa, 0.5 * h, 0.0, h) == Approx(-0.75 / (h * h)));
  }
  CHECK_ERRC(eval_localized(epa, 0.0, 0.0, 0.0), Errc::InvalidBandwidth);
  CHECK_ERRC(eval_localized(epa, 0.0, 0.0, -1.0), Errc::InvalidBandwidth);
}

TEST_CASE("derivative matches finite differences")
{
  for (const auto& k : {KernelSpec::gaussian(), make_high_order(4), make_high_order(6)}) {
    for (double u : {-2.1, -0.4, 0.0, 0.9, 3.3}) {
      const double fd = (eval(k, u + 1e-6) - eval(k, u - 1e-6)) / 2e-6;
      CHECK(eval_derivative(k, u) == Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("high-order Gaussian kernels")
{
  for (int order : {4, 6, 8}) {
    const auto k = make_high_order(order);
    CHECK(k.order() == order);
    const double mass = integrate([&](double u) { return eval(k, u); }, -10.0, 10.0);
    CHECK(std::abs(mass - 1.0) < 1e-8);
    for (int j = 1; j < order; ++j) {
      const double m = integrate([&](double u) { return std::pow(u, j) * eval(k, u); }, -10.0, 10.0);
      CHECK(std::abs(m) < 1e-8);
    }
    const double lead = integrate([&](double u) { return std::pow(u, order) * eval(k, u); }, -10.0, 10.0);
    CHECK(std::abs(lead) > 1e-3);
  }
  CHECK_ERRC(make_high_order(2), Errc::InvalidKernelOrder);
  CHECK_ERRC(make_high_order(5), Errc::InvalidKernelOrder);
  CHECK_ERRC(make_high_order(0), Errc::InvalidKernelOrder);
}

TEST_CASE("moment tables")
{
  const auto m = moments(KernelSpec::epanechnikov(), 4);
  REQUIRE(m.size() == 5);
  CHECK(m[0].mu == Approx(1.0).epsilon(1e-10));
  CHECK(m[2].mu == Approx(0.2).epsilon(1e-10));
  CHECK(m[0].nu == Approx(0.6).epsilon(1e-10));
  CHECK(std::abs(m[1].mu) < 1e-12);
  CHECK(std::abs(m[3].mu) < 1e-12);

  const auto g = moments(KernelSpec::gaussian(), 4);
  CHECK(g[2].mu == Approx(1.0).epsilon(1e-10));
  CHECK(g[4].mu == Approx(3.0).epsilon(1e-10));
  CHECK(g[0].nu == Approx(1.0 / (2.0 * std::sqrt(std::numbers::pi))).epsilon(1e-10));

  const auto k = KernelSpec::epanechnikov();
  for (int j = 0; j <= 4; ++j) {
    CHECK(k.mu(j) == Approx(m[j].mu).epsilon(1e-12));
    CHECK(truncated_moment(k, j, -1.0, 1.0, false) == Approx(m[j].mu).epsilon(1e-10));
    CHECK(truncated_moment(k, j, -3.0, 3.0, true) == Approx(m[j].nu).epsilon(1e-10));
  }
  CHECK(truncated_moment(k, 0, 0.0, 1.0, false) == Approx(0.5));
}

TEST_CASE("kernel names")
{
  CHECK(kernel_from_name("epanechnikov").family() == KernelFamily::Epanechnikov);
  CHECK(kernel_from_name("gaussian").family() == KernelFamily::Gaussian);
  CHECK(kernel_from_name("gaussian4").order() == 4);
  CHECK(kernel_from_name("gaussian6").order() == 6);
  CHECK(kernel_from_name(kernel_from_name("gaussian8").name()).order() == 8);
  CHECK_ERRC(kernel_from_name("triweight"), Errc::UnknownKernel);
}
