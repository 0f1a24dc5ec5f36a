#include "contiv/dgp.hpp"
#include "contiv/effects.hpp"
#include "support.hpp"

using namespace contiv;
using doctest::Approx;

namespace {

effects::LivConfig
liv_config(const sim::DgpSpec& spec, double h_y, double h_a, std::uint64_t seed)
{
  effects::LivConfig cfg;
  cfg.p = 2;
  cfg.p_a = 1;
  cfg.h_y = h_y;
  cfg.h_a = h_a;
  cfg.nuisance = nuisance::fixed_factory(nuisance::true_nuisance(spec));
  cfg.seed = seed;
  return cfg;
}

std::vector<double>
grid(double lo, double hi, std::size_t n)
{
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return g;
}

} // namespace

TEST_CASE("rate-aware ratio variance")
{
  const effects::RatioPart num{2.0, 0.1, 100.0};
  const effects::RatioPart den{1.0, 0.2, 10.0};
  CHECK(effects::ratio_variance_rate_aware(num, den) == Approx(0.4));
  const effects::RatioPart num_eq{2.0, 0.1, 10.0};
  CHECK(effects::ratio_variance_rate_aware(num_eq, den) == Approx(std::sqrt(0.17)));
  const effects::RatioPart exact{2.0, 0.0, 10.0};
  CHECK(effects::ratio_variance_rate_aware(exact, den) == Approx(0.4));
  const effects::RatioPart slow_num{2.0, 0.3, 1.0};
  CHECK(effects::ratio_variance_rate_aware(slow_num, den) == Approx(0.3));
  CHECK_ERRC(effects::ratio_variance_rate_aware(num, {0.0, 0.1, 1.0}), Errc::ZeroDenominator);
}

TEST_CASE("influence ratio variance")
{
  const std::vector<double> zero(6, 0.0);
  const std::vector<double> den = {0.5, -1.0, 2.0, 0.0, 1.5, -0.5};
  const auto s = test::summarize(den);
  CHECK(effects::ratio_variance_influence(zero, den, 3.0, 2.0) ==
        Approx(3.0 / 4.0 * s.sd / std::sqrt(6.0)).epsilon(1e-12));
  const std::vector<double> c1(6, 1.0);
  const std::vector<double> c2(6, -2.0);
  CHECK(effects::ratio_variance_influence(c1, c2, 1.0, 2.0) == Approx(0.0).scale(1.0));
  CHECK_ERRC(effects::ratio_variance_influence(c1, std::vector<double>(5, 0.0), 1.0, 1.0), Errc::MisalignedFolds);
  CHECK_ERRC(effects::ratio_variance_influence(c1, c2, 1.0, 0.0), Errc::ZeroDenominator);
}

TEST_CASE("LIV with an instrument-free outcome" * doctest::timeout(300))
{
  // The grid points share most of their data, so one draw says little; the
  // fraction inside the band is averaged over independent data sets.
  const auto g = grid(1.0, 3.0, 21);
  std::vector<double> fraction;
  for (std::uint64_t r = 0; r < 5; ++r) {
    const auto spec = sim::null_outcome(20000, 31 + r);
    const auto curve = effects::liv_curve(sim::generate(spec), g, liv_config(spec, 0.8, 2.0, 32 + r));
    std::size_t inside = 0;
    for (const auto& p : curve.points) {
      REQUIRE(std::isfinite(p.gamma));
      inside += std::abs(p.gamma) < 2.0 * p.stderr;
    }
    fraction.push_back(static_cast<double>(inside) / static_cast<double>(g.size()));
  }
  CHECK(test::summarize(fraction).mean >= 0.9);
}

TEST_CASE("LIV with an instrument-free treatment is flagged" * doctest::timeout(300))
{
  const auto spec = sim::null_treatment(20000, 33);
  const auto data = sim::generate(spec);
  const auto g = grid(1.0, 3.0, 21);
  auto cfg = liv_config(spec, 1.5, 3.0, 34);
  // two-sided 5% Bonferroni over the 21 points
  cfg.relevance_z = 3.04;
  const auto curve = effects::liv_curve(data, g, cfg);
  for (const auto& p : curve.points) {
    CHECK(p.flag == "effects.WeakInstrumentRegion");
    CHECK(std::isnan(p.gamma));
  }
}

TEST_CASE("threshold density" * doctest::timeout(300))
{
  pseudo::CrossfitConfig cfg;
  cfg.curve = {1, 3.0, KernelSpec::epanechnikov(), false};
  cfg.seed = 41;
  const auto g = grid(1.0, 3.0, 9);

  const auto main = sim::liv_main(20000, 42);
  cfg.nuisance = nuisance::fixed_factory(nuisance::true_nuisance(main));
  const auto d = effects::threshold_density(sim::generate(main), g, cfg);
  CHECK(d.negative_points == 0);
  for (const auto& p : d.curve.points) {
    CHECK(std::abs(p.derivative - 0.1) < 0.02);
  }

  const auto dec = sim::decreasing_treatment(20000, 43);
  cfg.nuisance = nuisance::fixed_factory(nuisance::true_nuisance(dec));
  const auto neg = effects::threshold_density(sim::generate(dec), g, cfg);
  CHECK(neg.negative_points == g.size());
  for (const auto& p : neg.curve.points) {
    CHECK(p.derivative < 0.0);
    CHECK(p.flag == "effects.NegativeDensity");
  }

  const auto flat = sim::null_treatment(20000, 44);
  cfg.nuisance = nuisance::fixed_factory(nuisance::true_nuisance(flat));
  const auto zero = effects::threshold_density(sim::generate(flat), g, cfg);
  for (const auto& p : zero.curve.points) {
    CHECK(std::abs(p.derivative) < 0.02);
  }
}

TEST_CASE("maximal complier class" * doctest::timeout(120))
{
  const auto spec = sim::complier_unit(10000, 51);
  effects::ComplierConfig cfg;
  cfg.nuisance = nuisance::fixed_factory(nuisance::true_nuisance(spec));
  cfg.seed = 52;
  const auto r = effects::maximal_complier(sim::generate(spec), cfg);
  CHECK(r.flag == "ok");
  CHECK(std::abs(r.proportion - 0.5) < 2.0 * r.proportion_se);
  CHECK(std::abs(r.late - 2.0) < 2.0 * r.late_se);
  CHECK(r.proportion_ci.lo < r.proportion);
  CHECK(r.late_ci.hi > r.late);
  CHECK(r.to_json().find("\"late\"") != std::string::npos);
}

TEST_CASE("constant treatment has no compliers")
{
  auto spec = sim::complier_unit(4000, 53);
  spec.lambda = sim::PolyInZ{{1.0}, {}};
  effects::ComplierConfig cfg;
  cfg.nuisance = nuisance::fixed_factory(nuisance::true_nuisance(spec));
  cfg.seed = 54;
  const auto r = effects::maximal_complier(sim::generate(spec), cfg);
  CHECK(r.proportion == Approx(0.0).scale(1.0));
  CHECK(r.flag == "effects.WeakInstrument");
  CHECK(std::isnan(r.late));
}

TEST_CASE("Z-independent Bernoulli treatment: proportion interval covers zero")
{
  auto spec = sim::complier_unit(10000, 55);
  spec.lambda = sim::PolyInZ{{0.45}, {}};
  effects::ComplierConfig cfg;
  cfg.nuisance = nuisance::fixed_factory(nuisance::true_nuisance(spec));
  cfg.seed = 56;
  const auto r = effects::maximal_complier(sim::generate(spec), cfg);
  CHECK(r.proportion_ci.lo == 0.0);
  CHECK(r.proportion < 2.0 * r.proportion_se);
}

TEST_CASE("rescaling onto the unit interval")
{
  const auto data = sim::generate(sim::liv_main(500, 57));
  const auto r = effects::rescale_unit(data);
  CHECK(*std::min_element(r.data.z().begin(), r.data.z().end()) == Approx(0.0).scale(1.0));
  CHECK(*std::max_element(r.data.z().begin(), r.data.z().end()) == Approx(1.0));
  CHECK(r.lo + (r.hi - r.lo) * r.data.z()[3] == Approx(data.z()[3]));
}

TEST_CASE("method names")
{
  CHECK(effects::method_from_name("localpoly") == effects::Method::LocalPoly);
  CHECK(effects::method_from_name(effects::method_name(effects::Method::Smooth)) == effects::Method::Smooth);
}
