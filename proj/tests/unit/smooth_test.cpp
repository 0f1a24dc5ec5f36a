#include "contiv/dgp.hpp"
#include "contiv/smooth.hpp"
#include "contiv/surface.hpp"
#include "support.hpp"

using namespace contiv;
using doctest::Approx;

namespace {

nuisance::NuisanceFit
flat_fit(SurfacePtr mu)
{
  nuisance::NuisanceFit fit;
  fit.pi_hat = std::make_shared<UniformDensity>(-5.0, 5.0, ClipBounds{});
  fit.mu_hat = std::move(mu);
  fit.lambda_hat = std::make_shared<ConstantSurface>(0.0);
  return fit;
}

} // namespace

TEST_CASE("influence at the evaluation point keeps only the integral")
{
  const auto k = KernelSpec::gaussian();
  const auto fit = flat_fit(std::make_shared<PolySurface>(sim::PolyInZ{{0.0, 1.0}, {}}));
  const auto data = test::make_dataset({0.4}, {0.0}, {3.0});
  for (double h : {0.2, 0.5}) {
    const auto grid = smooth::quad_grid(0.4, h, k, 128);
    const double v = smooth::influence_value(data.observation(0), fit, Target::Outcome, 0.4, h, k, grid);
    CHECK(v == Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("constant regression leaves only the residual term")
{
  const double c = 0.7;
  const auto fit = flat_fit(std::make_shared<ConstantSurface>(c));
  const auto data = test::make_dataset({1.1, 0.8, 2.0}, {0.0, 0.0, 0.0}, {2.0, -1.0, 0.5});
  for (const auto& k : {KernelSpec::gaussian(), make_high_order(4), KernelSpec::epanechnikov()}) {
    const double z0 = 1.0;
    const double h = 0.5;
    const auto grid = smooth::quad_grid(z0, h, k, 256);
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto o = data.observation(i);
      const double expect = -eval_localized_derivative(k, o.z, z0, h) * (o.y - c) / 0.1;
      CHECK(smooth::influence_value(o, fit, Target::Outcome, z0, h, k, grid) ==
            Approx(expect).epsilon(1e-8).scale(1.0));
    }
  }
}

TEST_CASE("linear outcome with exact nuisances" * doctest::timeout(120))
{
  auto spec = sim::liv_main(5000, 3);
  spec.mu = sim::PolyInZ{{1.0, -0.4}, {{0.2, 0.2, 0.3, -0.1}}};
  const auto data = sim::generate(spec);
  const auto fit = nuisance::true_nuisance(spec);
  const auto est = smooth::estimate(data, fit, Target::Outcome, 2.0, 0.5, make_high_order(4));
  CHECK(std::abs(est.theta_hat + 0.4) < 3.0 * est.stderr);
  CHECK(est.stderr > 0.0);
}

TEST_CASE("smoothing bias oracle")
{
  const smooth::CovariateSampler no_x = [](Rng&) { return std::vector<double>{}; };
  const smooth::SurfaceFn lin = [](std::span<const double>, double z) { return 1.0 + 2.0 * z; };
  const smooth::SurfaceFn dlin = [](std::span<const double>, double) { return 2.0; };
  CHECK(std::abs(smooth::smoothing_bias_oracle(lin, dlin, no_x, 0.3, 0.4, KernelSpec::gaussian(), 10)) < 1e-8);

  const smooth::SurfaceFn cube = [](std::span<const double>, double z) { return z * z * z; };
  const smooth::SurfaceFn dcube = [](std::span<const double>, double z) { return 3.0 * z * z; };
  for (double h : {0.1, 0.3, 0.7}) {
    for (double z0 : {-1.0, 0.5, 2.0}) {
      const double bias = smooth::smoothing_bias_oracle(cube, dcube, no_x, z0, h, KernelSpec::gaussian(), 10);
      CHECK(std::abs(bias - 3.0 * h * h) < 1e-6);
    }
  }
}

TEST_CASE("quadrature resolution")
{
  const PolySurface mu(sim::PolyInZ{{0.0, 0.0, 0.0, 1.0}, {}});
  const RowMatrix probes = RowMatrix::Zero(4, 1);
  const auto nodes = smooth::resolve_nodes(mu, probes, 1.0, 0.3, make_high_order(4));
  CHECK(nodes >= 64);
  CHECK(nodes <= 4096);
  CHECK(smooth::window_radius(KernelSpec::epanechnikov()) == 1.0);
  CHECK(smooth::window_radius(KernelSpec::gaussian()) == 8.0);
}
