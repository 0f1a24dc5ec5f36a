#include "contiv/parallel.hpp"
#include "contiv/sim.hpp"
#include "support.hpp"

#include <sstream>

using namespace contiv;
using doctest::Approx;

TEST_CASE("design truths")
{
  const auto m = sim::liv_main(10, 1);
  CHECK(m.gamma(2.0) == Approx(-2.028));
  CHECK(m.theta_a(1.3) == Approx(0.1));
  CHECK(m.theta_y(2.0) == Approx(-0.2028));
  CHECK(m.z_quantile(0.5) == Approx(2.0));
  const auto c = sim::complier_unit(10, 1);
  CHECK(c.delta(1.0) - c.delta(0.0) == Approx(0.5));
  CHECK(c.tau(1.0) - c.tau(0.0) == Approx(1.0));
  double mass = 0.0;
  for (double z = -4.0; z < 8.0; z += 0.001) {
    mass += m.z_density(z) * 0.001;
  }
  CHECK(mass == Approx(1.0).epsilon(1e-4));
  CHECK(sim::dgp_from_name("deriv_only", 10, 1).estimand == sim::Estimand::Derivative);
  CHECK_ERRC(sim::dgp_from_name("nope", 10, 1), Errc::InvalidSimConfig);
}

TEST_CASE("generation is reproducible")
{
  const auto a = sim::generate(sim::liv_main(500, 42));
  const auto b = sim::generate(sim::liv_main(500, 42));
  const auto c = sim::generate(sim::liv_main(500, 43));
  CHECK(a.x() == b.x());
  CHECK(a.z() == b.z());
  CHECK(a.a() == b.a());
  CHECK(a.y() == b.y());
  CHECK(a.z() != c.z());
}

TEST_CASE("rmse and coverage helpers")
{
  const std::vector<double> w = {0.25, 0.75};
  const std::vector<double> t = {1.0, 2.0};
  const std::vector<std::vector<double>> est = {{1.0, 2.5}, {2.0, 1.5}};
  CHECK(sim::weighted_rmse(w, t, est) == Approx(0.25 * std::sqrt(0.5) + 0.75 * 0.5));
  const std::vector<std::vector<double>> se = {{1.0, 0.1}, {0.1, 1.0}};
  CHECK(sim::coverage(t, est, se) == Approx(0.5));
  const std::vector<std::vector<double>> gap = {{NAN, 2.0}, {1.0, 2.0}};
  CHECK(sim::weighted_rmse(w, t, gap) == Approx(0.0).scale(1.0));
  const std::vector<std::vector<double>> none = {{NAN, 2.0}};
  CHECK(std::isnan(sim::weighted_rmse(w, t, none)));
}

TEST_CASE("grid results are reproducible and recomputable" * doctest::timeout(300))
{
  sim::SimConfig cfg;
  cfg.dgps = {"liv_main", "deriv_only"};
  cfg.estimators = {sim::Estimator::LocalPoly, sim::Estimator::Smooth, sim::Estimator::PlugIn,
                    sim::Estimator::ProjectionLinear};
  cfg.ns = {600};
  cfg.alphas = {0.1, 0.3};
  cfg.S = 3;
  cfg.seed = 77;
  cfg.local_poly = {1.5, 3.0, 0.0, 2, 1, KernelSpec::epanechnikov()};
  cfg.smooth = {1.0, 3.0, 0.0, 0, 0, make_high_order(4)};
  cfg.grid_points = 11;
  cfg.keep_replications = true;

  set_default_jobs(1);
  const auto a = sim::run_grid(cfg);
  set_default_jobs(3);
  const auto b = sim::run_grid(cfg);
  set_default_jobs(0);
  REQUIRE(a.size() == 2 * 2 * 4);
  std::ostringstream sa;
  std::ostringstream sb;
  sim::write_results_csv(sa, a, false);
  sim::write_results_csv(sb, b, false);
  CHECK(sa.str() == sb.str());
  CHECK(sa.str().rfind("dgp,estimator,n,alpha,h,S,rmse,coverage\n", 0) == 0);

  for (const auto& r : a) {
    CHECK(r.failures == 0);
    CHECK(r.estimates.size() == r.S);
    CHECK(sim::weighted_rmse(r.grid.weight, r.grid.truth, r.estimates) == r.rmse);
  }

  std::ostringstream reps;
  sim::write_replications_csv(reps, a);
  std::size_t lines = 0;
  for (char ch : reps.str()) {
    lines += ch == '\n';
  }
  CHECK(lines == 1 + a.size() * cfg.S * cfg.grid_points);
}

TEST_CASE("invalid configurations")
{
  sim::SimConfig cfg;
  cfg.S = 0;
  CHECK_ERRC(sim::run_grid(cfg), Errc::InvalidSimConfig);
  cfg.S = 2;
  cfg.dgps = {};
  CHECK_ERRC(sim::run_grid(cfg), Errc::InvalidSimConfig);
  cfg.dgps = {"liv_main"};
  cfg.alphas = {-1.0};
  CHECK_ERRC(sim::run_grid(cfg), Errc::InvalidRate);
  sim::RateConfig rate;
  CHECK_ERRC(sim::rate_slope("liv_main", {1000, 2000}, rate), Errc::InvalidSimConfig);
}

TEST_CASE("variance-only decay on a constant truth" * doctest::timeout(300))
{
  sim::RateConfig rate;
  rate.S = 30;
  rate.seed = 5;
  rate.grid_points = 11;
  rate.exponent = 0.0;
  const auto r = sim::rate_slope("constant_truth", {1000, 2000, 4000, 8000}, rate);
  CHECK(r.slope <= -0.4);
}
