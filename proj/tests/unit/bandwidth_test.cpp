#include "contiv/bandwidth.hpp"
#include "contiv/dgp.hpp"
#include "contiv/surface.hpp"
#include "support.hpp"

using namespace contiv;
using doctest::Approx;

namespace {

std::vector<double>
nodes(double lo, double hi, std::size_t n)
{
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return g;
}

bandwidth::SelectConfig
select_config(const sim::DgpSpec& spec)
{
  bandwidth::SelectConfig cfg;
  cfg.p = 2;
  cfg.nuisance = nuisance::fixed_factory(nuisance::true_nuisance(spec));
  cfg.seed = 3;
  return cfg;
}

} // namespace

TEST_CASE("zero curve has zero loss")
{
  const auto spec = sim::liv_main(100, 1);
  const auto fit = nuisance::true_nuisance(spec);
  const auto g = nodes(0.0, 4.0, 201);
  const std::vector<double> zero(g.size(), 0.0);
  std::vector<double> w(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    w[k] = spec.z_density(g[k]);
  }
  const bandwidth::RiskFunctional r(g, zero, w, fit, Target::Outcome, 0.1, 4);
  const auto data = sim::generate(spec);
  for (std::size_t i = 0; i < 20; ++i) {
    CHECK(r.loss(data.observation(i)) == 0.0);
  }
  CHECK(r.mean_loss(data) == 0.0);
}

TEST_CASE("constant curve against a bump weight")
{
  const double c = 1.7;
  nuisance::NuisanceFit fit;
  fit.pi_hat = std::make_shared<UniformDensity>(-2.0, 2.0, ClipBounds{});
  fit.mu_hat = std::make_shared<PolySurface>(sim::PolyInZ{{0.0, 1.0}, {}});
  fit.lambda_hat = std::make_shared<ConstantSurface>(0.0);
  const auto g = nodes(-1.0, 1.0, 4001);
  const std::vector<double> theta(g.size(), c);
  std::vector<double> w(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    w[k] = std::pow(1.0 - g[k] * g[k], 2);
  }
  const bandwidth::RiskFunctional r(g, theta, w, fit, Target::Outcome, 0.1, 1);
  const double mass = 16.0 / 15.0;
  CHECK(r.square_term() == Approx(c * c * mass).epsilon(1e-6));
  const auto data = test::make_dataset({-0.5, 0.0, 0.3, 1.5}, {0, 0, 0, 0}, {0.2, -1.0, 2.0, 0.7});
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto o = data.observation(i);
    const double wp = std::abs(o.z) < 1.0 ? -4.0 * o.z * (1.0 - o.z * o.z) : 0.0;
    const double expect = c * c * mass + 2.0 * (-c * mass + c * wp * (o.y - o.z) / 0.25);
    CHECK(r.loss(o) == Approx(expect).epsilon(1e-5));
  }
}

TEST_CASE("mean loss matches the pseudo-risk" * doctest::timeout(120))
{
  const auto spec = sim::liv_main(40000, 5);
  const auto fit = nuisance::true_nuisance(spec);
  const auto g = nodes(0.0, 4.0, 801);
  const auto z = sim::generate(sim::liv_main(20000, 6)).z();
  const auto ws = bandwidth::WeightSpec::marginal_density(z);
  std::vector<double> theta_bar(g.size());
  std::vector<double> truth(g.size());
  std::vector<double> w(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    theta_bar[k] = -0.05 * g[k] * g[k] + 0.02;
    truth[k] = spec.theta_y(g[k]);
    w[k] = spec.z_density(g[k]) * bandwidth::taper(g[k], ws);
  }
  const bandwidth::RiskFunctional r(g, theta_bar, w, fit, Target::Outcome, 0.1, 4);
  const auto data = sim::generate(spec);
  std::vector<double> losses(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    losses[i] = r.loss(data.observation(i));
  }
  const auto s = test::summarize(losses);
  double risk = 0.0;
  for (std::size_t k = 0; k + 1 < g.size(); ++k) {
    const auto at = [&](std::size_t j) { return (theta_bar[j] * theta_bar[j] - 2.0 * theta_bar[j] * truth[j]) * w[j]; };
    risk += 0.5 * (g[k + 1] - g[k]) * (at(k) + at(k + 1));
  }
  CHECK(std::abs(s.mean - risk) < 3.0 * s.mcse);
}

TEST_CASE("taper")
{
  bandwidth::WeightSpec s;
  s.zero_lo = 0.0;
  s.flat_lo = 1.0;
  s.flat_hi = 2.0;
  s.zero_hi = 4.0;
  CHECK(bandwidth::taper(-0.5, s) == 0.0);
  CHECK(bandwidth::taper(0.5, s) == Approx(0.5));
  CHECK(bandwidth::taper(1.5, s) == 1.0);
  CHECK(bandwidth::taper(3.0, s) == Approx(0.5));
  CHECK(bandwidth::taper(4.5, s) == 0.0);
}

TEST_CASE("argmin with ties and failures")
{
  const std::vector<double> h = {0.2, 0.4, 0.8};
  CHECK(bandwidth::argmin_risk(h, std::vector<double>{1.0, 1.0, 2.0}) == 1);
  CHECK(bandwidth::argmin_risk(h, std::vector<double>{NAN, 3.0, 2.0}) == 2);
  CHECK(bandwidth::argmin_risk(std::vector<double>{0.5}, std::vector<double>{7.0}) == 0);
  CHECK_ERRC(bandwidth::argmin_risk(h, std::vector<double>{NAN, NAN, NAN}), Errc::AllCandidatesFailed);
}

TEST_CASE("selection" * doctest::timeout(300))
{
  const auto spec = sim::liv_main(4000, 7);
  const auto data = sim::generate(spec);
  const auto cfg = select_config(spec);

  const std::vector<double> single = {0.6};
  const auto one = bandwidth::select(data, single, cfg);
  CHECK(one.chosen == 0);
  CHECK(one.chosen_h() == 0.6);

  const std::vector<double> pair = {0.4, 0.8};
  const std::vector<double> dup = {0.4, 0.8, 0.8};
  const auto a = bandwidth::select(data, pair, cfg);
  const auto b = bandwidth::select(data, dup, cfg);
  CHECK(a.chosen_h() == b.chosen_h());
  CHECK(a.risk_hat[0] == b.risk_hat[0]);
  CHECK(b.risk_hat[1] == b.risk_hat[2]);

  std::ostringstream csv;
  bandwidth::write_risk_csv(csv, a);
  CHECK(csv.str().rfind("h,risk_hat,risk_fold1,risk_fold2,chosen,flag\n", 0) == 0);

  const auto c = bandwidth::default_candidates(data.z());
  REQUIRE(c.size() == 8);
  CHECK(c.back() / c.front() == Approx(4.0));
}
