#include "contiv/sim.hpp"

#include "contiv/effects.hpp"
#include "contiv/error.hpp"
#include "contiv/nuisance.hpp"
#include "contiv/parallel.hpp"
#include "contiv/random.hpp"
#include "contiv/smooth.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>

namespace contiv::sim {

namespace {

constexpr double kZ975 = 1.959963984540054;

using Clock = std::chrono::steady_clock;

std::string
num(double v)
{
  if (std::isnan(v)) {
    return "NA";
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

//! Estimates and standard errors of one estimator in one replication.
struct RepCurve
{
  std::vector<double> est;
  std::vector<double> se;
  double seconds = 0.0;
  std::string error;
};

//! n^-1 sum_i d/dz m(X_i, z) by central differences of the row mean.
std::vector<double>
plug_in_derivative(const Surface& m, const RowMatrix& x, std::span<const double> grid)
{
  constexpr double step = 1e-5;
  std::vector<double> zs;
  zs.reserve(2 * grid.size());
  for (const double z : grid) {
    zs.push_back(z - step);
    zs.push_back(z + step);
  }
  std::vector<double> mean(zs.size());
  m.row_mean(x, zs, mean);
  std::vector<double> out(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    out[k] = (mean[2 * k + 1] - mean[2 * k]) / (2.0 * step);
  }
  return out;
}

//! psi_hat z with psi_hat the f_hat-weighted least squares coefficient of
//! the signal on z (no intercept).
std::vector<double>
linear_projection(std::span<const double> grid, std::span<const double> signal, std::span<const double> f)
{
  double num_sum = 0.0;
  double den_sum = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (std::isnan(signal[k]) || std::isnan(f[k])) {
      continue;
    }
    num_sum += f[k] * grid[k] * signal[k];
    den_sum += f[k] * grid[k] * grid[k];
  }
  std::vector<double> out(grid.size(), std::nan(""));
  if (den_sum > 0.0) {
    for (std::size_t k = 0; k < grid.size(); ++k) {
      out[k] = num_sum / den_sum * grid[k];
    }
  }
  return out;
}

bool
wants(const std::vector<Estimator>& list, Estimator e)
{
  return std::find(list.begin(), list.end(), e) != list.end();
}

//! All requested estimators on one replication.
std::map<Estimator, RepCurve>
replicate(const SimConfig& config,
          const DgpSpec& base,
          std::size_t n,
          double alpha,
          std::uint64_t rep_seed,
          const ScoringGrid& grid)
{
  DgpSpec dgp = base;
  dgp.n = n;
  dgp.seed = derive_seed(rep_seed, {1});
  const Dataset data = generate(dgp);
  const auto nf = config.nuisance == NuisanceMode::Synthetic
                    ? nuisance::synthetic_nuisance(dgp, alpha, n, derive_seed(rep_seed, {2}))
                    : nuisance::true_nuisance(dgp);
  const auto plan =
    pseudo::make_plan(data, nuisance::fixed_factory(nf), derive_seed(rep_seed, {3}), config.rotate);
  const bool liv = dgp.estimand == Estimand::Liv;
  const std::size_t G = grid.z.size();

  std::map<Estimator, RepCurve> out;
  auto run = [&](Estimator e, auto&& body) {
    RepCurve rc;
    const auto t0 = Clock::now();
    try {
      body(rc);
    } catch (const Error& err) {
      rc.est.assign(G, std::nan(""));
      rc.se.assign(G, std::nan(""));
      rc.error = std::string(err.code_name()) + ": " + err.what();
    }
    rc.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    out[e] = std::move(rc);
  };

  std::vector<double> lp_signal;
  std::vector<double> lp_f;
  double lp_seconds = 0.0;
  if (wants(config.estimators, Estimator::LocalPoly) || wants(config.estimators, Estimator::ProjectionLinear)) {
    run(Estimator::LocalPoly, [&](RepCurve& rc) {
      const auto& s = config.local_poly;
      rc.est.resize(G);
      rc.se.resize(G);
      lp_f.resize(G);
      if (liv) {
        effects::LivConfig lc;
        lc.method = effects::Method::LocalPoly;
        lc.p = s.p;
        lc.p_a = s.p_a;
        lc.h_y = s.outcome_h(n);
        lc.h_a = s.treatment_h(n);
        lc.kernel = s.kernel;
        const auto curve = effects::liv_curve(plan, grid.z, lc);
        for (std::size_t k = 0; k < G; ++k) {
          rc.est[k] = curve.points[k].gamma;
          rc.se[k] = curve.points[k].stderr;
          lp_f[k] = curve.numerator.points[k].f_hat;
        }
      } else {
        const double h = s.outcome_h(n);
        const auto [lo, hi] = pseudo::pseudo_window(grid.z, h, s.kernel);
        std::vector<pseudo::PseudoSample> samples;
        for (const auto& rot : plan.rotations) {
          samples.push_back(pseudo::build_pseudo(rot, Target::Outcome, lo, hi));
        }
        const auto curve = pseudo::fit_curve(plan, samples, grid.z, {s.p, h, s.kernel, false});
        for (std::size_t k = 0; k < G; ++k) {
          rc.est[k] = curve.points[k].derivative;
          rc.se[k] = curve.points[k].derivative_se;
          lp_f[k] = curve.points[k].f_hat;
        }
      }
    });
    lp_signal = out[Estimator::LocalPoly].est;
    lp_seconds = out[Estimator::LocalPoly].seconds;
    if (lp_f.size() != G) {
      lp_f.assign(G, std::nan(""));
    }
  }
  if (wants(config.estimators, Estimator::Smooth)) {
    run(Estimator::Smooth, [&](RepCurve& rc) {
      const auto& s = config.smooth;
      rc.est.resize(G);
      rc.se.resize(G);
      if (liv) {
        effects::LivConfig lc;
        lc.method = effects::Method::Smooth;
        lc.h_y = s.outcome_h(n);
        lc.h_a = s.treatment_h(n);
        lc.kernel = s.kernel;
        const auto curve = effects::liv_curve(plan, grid.z, lc);
        for (std::size_t k = 0; k < G; ++k) {
          rc.est[k] = curve.points[k].gamma;
          rc.se[k] = curve.points[k].stderr;
        }
      } else {
        const auto curve = smooth::crossfit_smooth(plan, Target::Outcome, grid.z, s.outcome_h(n), s.kernel);
        for (std::size_t k = 0; k < G; ++k) {
          rc.est[k] = curve.points[k].derivative;
          rc.se[k] = curve.points[k].derivative_se;
        }
      }
    });
  }
  if (wants(config.estimators, Estimator::PlugIn)) {
    run(Estimator::PlugIn, [&](RepCurve& rc) {
      const auto dy = plug_in_derivative(*nf.mu_hat, data.x(), grid.z);
      rc.se.assign(G, std::nan(""));
      if (liv) {
        const auto da = plug_in_derivative(*nf.lambda_hat, data.x(), grid.z);
        rc.est.resize(G);
        for (std::size_t k = 0; k < G; ++k) {
          rc.est[k] = da[k] == 0.0 ? std::nan("") : dy[k] / da[k];
        }
      } else {
        rc.est = dy;
      }
    });
  }
  if (wants(config.estimators, Estimator::ProjectionLinear)) {
    run(Estimator::ProjectionLinear, [&](RepCurve& rc) {
      rc.est = linear_projection(grid.z, lp_signal, lp_f);
      rc.se.assign(G, std::nan(""));
    });
    out[Estimator::ProjectionLinear].seconds += lp_seconds;
  }
  if (!wants(config.estimators, Estimator::LocalPoly)) {
    out.erase(Estimator::LocalPoly);
  }
  return out;
}

} // namespace

std::string_view
estimator_name(Estimator e)
{
  switch (e) {
    case Estimator::LocalPoly:
      return "localpoly";
    case Estimator::Smooth:
      return "smooth";
    case Estimator::PlugIn:
      return "plugin";
    case Estimator::ProjectionLinear:
      return "projection-linear";
  }
  return "?";
}

Estimator
estimator_from_name(std::string_view name)
{
  for (const auto e :
       {Estimator::LocalPoly, Estimator::Smooth, Estimator::PlugIn, Estimator::ProjectionLinear}) {
    if (estimator_name(e) == name) {
      return e;
    }
  }
  throw Error(Errc::InvalidSimConfig, "unknown estimator '" + std::string(name) + "'");
}

double
EstimatorSettings::outcome_h(std::size_t n) const
{
  return h_y * std::pow(static_cast<double>(n), -exponent);
}

double
EstimatorSettings::treatment_h(std::size_t n) const
{
  return h_a * std::pow(static_cast<double>(n), -exponent);
}

std::string
EstimatorSettings::rule() const
{
  std::string s = "h_y=" + num(h_y) + ";h_a=" + num(h_a);
  if (exponent != 0.0) {
    s += ";n^-" + num(exponent);
  }
  s += ";p=" + std::to_string(p);
  if (p_a > 0) {
    s += ";p_a=" + std::to_string(p_a);
  }
  return s + ";kernel=" + kernel.name();
}

ScoringGrid
scoring_grid(const DgpSpec& dgp, std::size_t points, double trim_lo, double trim_hi)
{
  if (points < 2 || !(trim_lo < trim_hi) || trim_lo <= 0.0 || trim_hi >= 1.0) {
    throw Error(Errc::InvalidSimConfig, "scoring grid needs >= 2 points and 0 < trim_lo < trim_hi < 1");
  }
  ScoringGrid g;
  const double lo = dgp.z_quantile(trim_lo);
  const double hi = dgp.z_quantile(trim_hi);
  g.z.resize(points);
  g.truth.resize(points);
  g.weight.resize(points);
  const double step = (hi - lo) / static_cast<double>(points - 1);
  double total = 0.0;
  for (std::size_t k = 0; k < points; ++k) {
    g.z[k] = lo + step * static_cast<double>(k);
    g.truth[k] = dgp.truth(g.z[k]);
    const double trap = (k == 0 || k + 1 == points) ? 0.5 * step : step;
    g.weight[k] = trap * dgp.z_density(g.z[k]);
    total += g.weight[k];
  }
  for (auto& w : g.weight) {
    w /= total;
  }
  return g;
}

double
weighted_rmse(std::span<const double> weight,
              std::span<const double> truth,
              const std::vector<std::vector<double>>& estimates)
{
  double acc = 0.0;
  for (std::size_t k = 0; k < weight.size(); ++k) {
    double ss = 0.0;
    std::size_t m = 0;
    for (const auto& rep : estimates) {
      if (std::isnan(rep[k])) {
        continue;
      }
      ss += (rep[k] - truth[k]) * (rep[k] - truth[k]);
      ++m;
    }
    if (m == 0) {
      return std::nan("");
    }
    acc += weight[k] * std::sqrt(ss / static_cast<double>(m));
  }
  return acc;
}

double
coverage(std::span<const double> truth,
         const std::vector<std::vector<double>>& estimates,
         const std::vector<std::vector<double>>& stderrs)
{
  std::size_t hit = 0;
  std::size_t total = 0;
  for (std::size_t s = 0; s < estimates.size(); ++s) {
    for (std::size_t k = 0; k < truth.size(); ++k) {
      const double e = estimates[s][k];
      const double se = stderrs[s][k];
      if (std::isnan(e) || std::isnan(se)) {
        continue;
      }
      ++total;
      if (std::abs(e - truth[k]) <= kZ975 * se) {
        ++hit;
      }
    }
  }
  return total == 0 ? std::nan("") : static_cast<double>(hit) / static_cast<double>(total);
}

std::vector<SimResult>
run_grid(const SimConfig& config)
{
  if (config.S < 2) {
    throw Error(Errc::InvalidSimConfig, "at least 2 replications are required");
  }
  if (config.dgps.empty() || config.estimators.empty() || config.ns.empty() || config.alphas.empty()) {
    throw Error(Errc::InvalidSimConfig, "empty simulation grid");
  }
  for (const double a : config.alphas) {
    if (!(a >= 0.0)) {
      throw Error(Errc::InvalidRate, "alpha must be >= 0");
    }
  }
  std::vector<SimResult> results;
  for (std::size_t di = 0; di < config.dgps.size(); ++di) {
    const DgpSpec base = dgp_from_name(config.dgps[di], config.ns.front(), config.seed);
    const ScoringGrid grid = scoring_grid(base, config.grid_points, config.trim_lo, config.trim_hi);
    for (std::size_t ni = 0; ni < config.ns.size(); ++ni) {
      const std::size_t n = config.ns[ni];
      if (n == 0) {
        throw Error(Errc::InvalidSimConfig, "n must be positive");
      }
      for (std::size_t ai = 0; ai < config.alphas.size(); ++ai) {
        const double alpha = config.alphas[ai];
        std::vector<std::map<Estimator, RepCurve>> reps(config.S);
        parallel_for(config.S, [&](std::size_t s) {
          const auto seed = derive_seed(config.seed, {di, n, ai, s});
          reps[s] = replicate(config, base, n, alpha, seed, grid);
        });
        for (const auto e : config.estimators) {
          SimResult r;
          r.dgp = config.dgps[di];
          r.estimator = e;
          r.n = n;
          r.alpha = config.nuisance == NuisanceMode::Synthetic ? alpha : std::nan("");
          const auto& settings = e == Estimator::Smooth ? config.smooth : config.local_poly;
          r.h = e == Estimator::PlugIn ? std::nan("") : settings.outcome_h(n);
          r.h_rule = e == Estimator::PlugIn ? "none" : settings.rule();
          r.S = config.S;
          r.grid = grid;
          std::vector<std::vector<double>> est;
          std::vector<std::vector<double>> se;
          for (auto& rep : reps) {
            auto& rc = rep.at(e);
            r.seconds += rc.seconds;
            if (!rc.error.empty()) {
              ++r.failures;
              r.last_error = rc.error;
              continue;
            }
            est.push_back(rc.est);
            se.push_back(rc.se);
          }
          r.rmse = est.empty() ? std::nan("") : weighted_rmse(grid.weight, grid.truth, est);
          r.coverage = (e == Estimator::LocalPoly || e == Estimator::Smooth) && !est.empty()
                         ? coverage(grid.truth, est, se)
                         : std::nan("");
          if (config.keep_replications) {
            r.estimates = std::move(est);
            r.stderrs = std::move(se);
          }
          results.push_back(std::move(r));
        }
      }
    }
  }
  return results;
}

void
write_results_csv(std::ostream& out, const std::vector<SimResult>& results, bool timing)
{
  out << "dgp,estimator,n,alpha,h,S,rmse,coverage" << (timing ? ",seconds\n" : "\n");
  for (const auto& r : results) {
    out << r.dgp << ',' << estimator_name(r.estimator) << ',' << r.n << ',' << num(r.alpha) << ','
        << num(r.h) << ',' << r.S << ',' << num(r.rmse) << ',' << num(r.coverage);
    if (timing) {
      out << ',' << num(r.seconds);
    }
    out << '\n';
  }
}

void
write_replications_csv(std::ostream& out, const std::vector<SimResult>& results)
{
  out << "dgp,estimator,n,alpha,rep,z0,estimate,stderr,truth\n";
  for (const auto& r : results) {
    for (std::size_t s = 0; s < r.estimates.size(); ++s) {
      for (std::size_t k = 0; k < r.grid.z.size(); ++k) {
        out << r.dgp << ',' << estimator_name(r.estimator) << ',' << r.n << ',' << num(r.alpha) << ','
            << s << ',' << num(r.grid.z[k]) << ',' << num(r.estimates[s][k]) << ','
            << num(r.stderrs[s][k]) << ',' << num(r.grid.truth[k]) << '\n';
      }
    }
  }
}

RateResult
rate_slope(const std::string& dgp_name, const std::vector<std::size_t>& ns, const RateConfig& config)
{
  if (ns.size() < 4) {
    throw Error(Errc::InvalidSimConfig, "rate slope needs at least 4 sample sizes");
  }
  if (config.S < 2) {
    throw Error(Errc::InvalidSimConfig, "at least 2 replications are required");
  }
  if (config.estimator != Estimator::LocalPoly && config.estimator != Estimator::Smooth) {
    throw Error(Errc::InvalidSimConfig, "rate slopes are defined for the doubly robust estimators");
  }
  if (config.estimator == Estimator::Smooth && config.quantity == RateQuantity::Value) {
    throw Error(Errc::InvalidSimConfig, "the smooth estimator targets derivatives only");
  }
  const DgpSpec base = dgp_from_name(dgp_name, ns.front(), config.seed);
  ScoringGrid grid = scoring_grid(base, config.grid_points, 0.05, 0.95);
  if (config.quantity == RateQuantity::Value) {
    for (std::size_t k = 0; k < grid.z.size(); ++k) {
      grid.truth[k] = base.tau(grid.z[k]);
    }
  } else {
    for (std::size_t k = 0; k < grid.z.size(); ++k) {
      grid.truth[k] = base.theta_y(grid.z[k]);
    }
  }
  RateResult out;
  out.ns = ns;
  for (std::size_t ni = 0; ni < ns.size(); ++ni) {
    const std::size_t n = ns[ni];
    const double h = config.h0 * std::pow(static_cast<double>(n) / 1000.0, -config.exponent);
    out.hs.push_back(h);
    std::vector<std::vector<double>> est(config.S);
    parallel_for(config.S, [&](std::size_t s) {
      const auto seed = derive_seed(config.seed, {0x5A7E, n, s});
      DgpSpec dgp = base;
      dgp.n = n;
      dgp.seed = derive_seed(seed, {1});
      const Dataset data = generate(dgp);
      const auto plan =
        pseudo::make_plan(data, nuisance::fixed_factory(nuisance::true_nuisance(dgp)), derive_seed(seed, {3}));
      if (config.estimator == Estimator::Smooth) {
        est[s] = smooth::crossfit_smooth(plan, Target::Outcome, grid.z, h, config.kernel).derivatives();
        return;
      }
      const auto [lo, hi] = pseudo::pseudo_window(grid.z, h, config.kernel);
      std::vector<pseudo::PseudoSample> samples;
      for (const auto& rot : plan.rotations) {
        samples.push_back(pseudo::build_pseudo(rot, Target::Outcome, lo, hi));
      }
      const auto curve = pseudo::fit_curve(plan, samples, grid.z, {config.p, h, config.kernel, false});
      est[s] = config.quantity == RateQuantity::Value ? curve.values() : curve.derivatives();
    });
    out.rmse.push_back(weighted_rmse(grid.weight, grid.truth, est));
  }
  double mx = 0.0;
  double my = 0.0;
  const double m = static_cast<double>(ns.size());
  for (std::size_t i = 0; i < ns.size(); ++i) {
    mx += std::log(static_cast<double>(ns[i])) / m;
    my += std::log(out.rmse[i]) / m;
  }
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const double dx = std::log(static_cast<double>(ns[i])) - mx;
    sxy += dx * (std::log(out.rmse[i]) - my);
    sxx += dx * dx;
  }
  out.slope = sxy / sxx;
  return out;
}

} // namespace contiv::sim
