#include "contiv/dgp.hpp"
#include "contiv/nuisance.hpp"
#include "contiv/surface.hpp"
#include "support.hpp"

using namespace contiv;
using doctest::Approx;

namespace {

Dataset
covariate_data(std::size_t n, std::size_t dim, std::uint64_t seed, const std::function<double(const double*, double)>& y_of)
{
  Rng rng(seed);
  RowMatrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  std::vector<double> z(n);
  std::vector<double> a(n);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rng.normal();
    }
    z[i] = rng.normal();
    a[i] = rng.normal();
    y[i] = y_of(&x(static_cast<Eigen::Index>(i), 0), z[i]);
  }
  return Dataset(std::move(x), std::move(z), std::move(a), std::move(y));
}

double
phi(double u)
{
  return 0.3989422804014327 * std::exp(-0.5 * u * u);
}

} // namespace

TEST_CASE("linear learner recovers a noiseless linear surface")
{
  const auto d = covariate_data(300, 3, 1, [](const double* x, double z) {
    return 1.0 + 2.0 * x[0] - x[1] + 0.25 * x[2] + 0.5 * z;
  });
  const auto mu = nuisance::fit_regression(d, Target::Outcome, nuisance::Learner::Linear);
  double worst = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    worst = std::max(worst, std::abs((*mu)(d.row(i), d.z()[i]) - d.y()[i]));
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("constant outcome gives a constant surface")
{
  const auto d = covariate_data(200, 2, 2, [](const double*, double) { return 4.5; });
  nuisance::LearnerOptions opt;
  for (const char* name : {"linear", "linear-cubic", "local-linear", "kernel-ridge"}) {
    const auto learner = nuisance::learner_from_name(name, opt);
    const auto mu = nuisance::fit_regression(d, Target::Outcome, learner, opt);
    const std::vector<double> probe = {0.3, -1.2};
    for (double z : {-1.0, 0.0, 1.5}) {
      CHECK((*mu)(probe, z) == Approx(4.5).epsilon(1e-6));
    }
  }
  CHECK_ERRC(nuisance::learner_from_name("forest", opt), Errc::UnknownLearner);
}

TEST_CASE("kernel ridge against the correctly specified linear learner" * doctest::timeout(120))
{
  std::vector<double> ratio;
  for (std::uint64_t r = 0; r < 20; ++r) {
    const auto full = sim::generate(sim::liv_main(4000, 100 + r));
    std::vector<std::size_t> train(2000);
    std::vector<std::size_t> test(2000);
    for (std::size_t i = 0; i < 2000; ++i) {
      train[i] = i;
      test[i] = 2000 + i;
    }
    const auto fit_fold = full.subset(train);
    const auto held = full.subset(test);
    nuisance::LearnerOptions cubic;
    cubic.basis = {3, true};
    const auto lin = nuisance::fit_regression(fit_fold, Target::Outcome, nuisance::Learner::Linear, cubic);
    const auto krr = nuisance::fit_regression(fit_fold, Target::Outcome, nuisance::Learner::KernelRidge);
    double e_lin = 0.0;
    double e_krr = 0.0;
    for (std::size_t i = 0; i < held.size(); ++i) {
      e_lin += std::pow((*lin)(held.row(i), held.z()[i]) - held.y()[i], 2);
      e_krr += std::pow((*krr)(held.row(i), held.z()[i]) - held.y()[i], 2);
    }
    ratio.push_back(std::sqrt(e_krr / e_lin));
  }
  CHECK(test::summarize(ratio).mean < 1.2);
}

TEST_CASE("residual KDE propensity improves with n")
{
  std::vector<double> err;
  for (std::size_t n : {500, 2000, 8000}) {
    double acc = 0.0;
    for (std::uint64_t r = 0; r < 4; ++r) {
      const auto spec = sim::liv_main(n, 7 + r);
      const auto pi_hat =
        nuisance::fit_propensity_residual_kde(sim::generate(spec), nuisance::Learner::Linear, nuisance::Learner::Linear);
      const auto probe = sim::generate(sim::liv_main(500, 999));
      for (std::size_t i = 0; i < probe.size(); ++i) {
        acc += std::pow(pi_hat->raw(probe.row(i), probe.z()[i]) - spec.pi(probe.row(i), probe.z()[i]), 2);
      }
    }
    err.push_back(acc / (4.0 * 500.0));
  }
  CHECK(err[1] < err[0]);
  CHECK(err[2] < err[1]);
}

TEST_CASE("instrument independent of covariates")
{
  const auto d = covariate_data(5000, 2, 11, [](const double*, double) { return 0.0; });
  const auto pi_hat = nuisance::fit_propensity_residual_kde(d, nuisance::Learner::Linear, nuisance::Learner::Linear);
  double worst = 0.0;
  const std::vector<double> x = {0.5, -0.5};
  for (double z = -2.0; z <= 2.0; z += 0.05) {
    worst = std::max(worst, std::abs(pi_hat->raw(x, z) - phi(z)));
  }
  CHECK(worst < 0.05);
}

TEST_CASE("synthetic nuisances")
{
  const auto spec = sim::liv_main(2000, 1);
  const auto fit = nuisance::synthetic_nuisance(spec, 10.0, 2000, 5);
  const auto truth = nuisance::true_nuisance(spec);
  const std::vector<double> x = {0.3, -0.2, 1.0, 0.5};
  for (double z : {0.5, 2.0, 3.5}) {
    CHECK(std::abs((*fit.mu_hat)(x, z) - (*truth.mu_hat)(x, z)) < 1e-20);
    CHECK(std::abs((*fit.lambda_hat)(x, z) - (*truth.lambda_hat)(x, z)) < 1e-20);
    CHECK(std::abs((*fit.pi_hat)(x, z) - (*truth.pi_hat)(x, z)) < 1e-20);
  }

  std::vector<double> shift;
  for (std::uint64_t s = 0; s < 400; ++s) {
    const auto f = nuisance::synthetic_nuisance(spec, 0.5, 10000, s);
    shift.push_back((*f.lambda_hat)(x, 1.0) - (*truth.lambda_hat)(x, 1.0));
  }
  const auto sum = test::summarize(shift);
  CHECK(sum.mean == Approx(0.01).epsilon(0.2));
  CHECK(sum.sd == Approx(0.01).epsilon(0.2));
  CHECK_ERRC(nuisance::synthetic_nuisance(spec, -0.1, 2000, 1), Errc::InvalidRate);
}

TEST_CASE("marginals")
{
  const auto fold = covariate_data(50, 2, 21, [](const double*, double) { return 0.0; });
  nuisance::NuisanceFit fit;
  fit.pi_hat = std::make_shared<UniformDensity>(-5.0, 5.0, ClipBounds{});
  sim::PolyInZ mu{{0.5, -2.0}, {{1.5, 0.25}}};
  fit.mu_hat = std::make_shared<PolySurface>(mu);
  fit.lambda_hat = std::make_shared<ConstantSurface>(0.3);
  const nuisance::MarginalFit m(fit, fold);
  const Eigen::VectorXd xbar = fold.x().colwise().mean();
  for (double z : {-1.0, 0.0, 2.5}) {
    CHECK(m.f_hat(z) == Approx((*fit.pi_hat)(fold.row(0), z)).epsilon(1e-15));
    CHECK(std::abs(m.tau0_hat(z) - (0.5 + 1.5 * xbar(0) + 0.25 * xbar(1) - 2.0 * z)) < 1e-12);
    CHECK(m.lambda0_hat(z) == Approx(0.3));
  }
}

TEST_CASE("fold overlap is rejected")
{
  const auto d = sim::generate(sim::liv_main(300, 3));
  nuisance::LearnedSpec spec;
  const auto fit = nuisance::fit_nuisances(d, spec);
  CHECK_ERRC(nuisance::marginals_from(fit, d), Errc::FoldOverlap);
  const auto other = sim::generate(sim::liv_main(300, 4));
  CHECK_NOTHROW(nuisance::marginals_from(fit, other));
}
