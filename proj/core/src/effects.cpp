#include "contiv/effects.hpp"

#include "contiv/error.hpp"
#include "contiv/smooth.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace contiv::effects {

namespace {

constexpr double kZ975 = 1.959963984540054;

std::string
format_number(double v)
{
  if (std::isnan(v)) {
    return "NA";
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void
require_nonzero(double den)
{
  if (den == 0.0 || !std::isfinite(den)) {
    throw Error(Errc::ZeroDenominator, "ratio denominator is zero");
  }
}

// Sample covariance of two aligned arrays divided by n: the covariance of
// the two estimators they linearize.
double
estimator_covariance(std::span<const double> a, std::span<const double> b)
{
  const auto n = a.size();
  if (n != b.size()) {
    throw Error(Errc::MisalignedFolds, "influence arrays differ in length");
  }
  if (n < 2) {
    return 0.0;
  }
  double ma = 0.0;
  double mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double c = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    c += (a[i] - ma) * (b[i] - mb);
  }
  return c / static_cast<double>(n - 1) / static_cast<double>(n);
}

double
correlation(std::span<const double> a, std::span<const double> b)
{
  const double cab = estimator_covariance(a, b);
  const double caa = estimator_covariance(a, a);
  const double cbb = estimator_covariance(b, b);
  if (!(caa > 0.0) || !(cbb > 0.0)) {
    return 0.0;
  }
  return cab / std::sqrt(caa * cbb);
}

} // namespace

std::string_view
method_name(Method m)
{
  return m == Method::LocalPoly ? "localpoly" : "smooth";
}

Method
method_from_name(std::string_view name)
{
  if (name == "localpoly" || name == "local-poly") {
    return Method::LocalPoly;
  }
  if (name == "smooth") {
    return Method::Smooth;
  }
  throw Error(Errc::InvalidConfig, "unknown method '" + std::string(name) + "'");
}

double
ratio_variance_rate_aware(const RatioPart& num, const RatioPart& den, double cov)
{
  require_nonzero(den.estimate);
  const double d = den.estimate;
  const double tol = 1e-9 * std::max(num.rate, den.rate);
  if (num.rate > den.rate + tol) {
    return std::abs(num.estimate) * den.stderr / (d * d);
  }
  if (den.rate > num.rate + tol) {
    return num.stderr / std::abs(d);
  }
  const double v = num.stderr * num.stderr / (d * d) +
                   num.estimate * num.estimate * den.stderr * den.stderr / (d * d * d * d) -
                   2.0 * num.estimate * cov / (d * d * d);
  return std::sqrt(std::max(v, 0.0));
}

double
ratio_variance_influence(std::span<const double> phi_num,
                         std::span<const double> phi_den,
                         double num,
                         double den)
{
  if (phi_num.size() != phi_den.size()) {
    throw Error(Errc::MisalignedFolds, "influence arrays differ in length");
  }
  require_nonzero(den);
  const auto n = phi_num.size();
  if (n < 2) {
    return 0.0;
  }
  std::vector<double> c(n);
  for (std::size_t i = 0; i < n; ++i) {
    c[i] = phi_num[i] / den - num / (den * den) * phi_den[i];
  }
  return std::sqrt(std::max(estimator_covariance(c, c), 0.0));
}

LivCurve
liv_curve(const pseudo::CrossfitPlan& plan, std::span<const double> grid, const LivConfig& config)
{
  LivCurve out;
  out.method = config.method;
  out.route = config.route;
  if (config.method == Method::LocalPoly) {
    pseudo::CurveConfig cy{config.p, config.h_y, config.kernel, true};
    pseudo::CurveConfig ca{config.p_a > 0 ? config.p_a : config.p, config.h_a, config.kernel, true};
    const double h_max = std::max(config.h_y, config.h_a);
    const auto [lo, hi] = pseudo::pseudo_window(grid, h_max, config.kernel);
    std::vector<pseudo::PseudoSample> sy;
    std::vector<pseudo::PseudoSample> sa;
    const Target both[] = {Target::Outcome, Target::Treatment};
    for (const auto& rot : plan.rotations) {
      auto s = pseudo::build_pseudo(rot, both, lo, hi);
      sy.push_back(std::move(s[0]));
      sa.push_back(std::move(s[1]));
    }
    out.numerator = pseudo::fit_curve(plan, sy, grid, cy);
    out.denominator = pseudo::fit_curve(plan, sa, grid, ca);
  } else {
    out.numerator = smooth::crossfit_smooth(plan, Target::Outcome, grid, config.h_y, config.kernel, true);
    out.denominator = smooth::crossfit_smooth(plan, Target::Treatment, grid, config.h_a, config.kernel, true);
  }
  if (out.numerator.influence_ids != out.denominator.influence_ids) {
    throw Error(Errc::MisalignedFolds, "numerator and denominator use different rows");
  }

  const double n = static_cast<double>(plan.n);
  out.points.resize(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    auto& pt = out.points[g];
    const auto& ny = out.numerator.points[g];
    const auto& na = out.denominator.points[g];
    pt.z0 = grid[g];
    pt.theta_y = ny.derivative;
    pt.theta_a = na.derivative;
    if (std::isnan(ny.derivative)) {
      pt.flag = ny.flag;
      continue;
    }
    if (std::isnan(na.derivative)) {
      pt.flag = na.flag;
      continue;
    }
    const auto& phi_y = out.numerator.influence_derivative[g];
    const auto& phi_a = out.denominator.influence_derivative[g];
    const bool weak = std::abs(na.derivative) <= config.relevance_floor ||
                      (config.relevance_z > 0.0 &&
                       std::abs(na.derivative) <= config.relevance_z * std::sqrt(estimator_covariance(phi_a, phi_a)));
    if (weak) {
      pt.flag = std::string(errc_name(Errc::WeakInstrumentRegion));
      continue;
    }
    pt.gamma = ny.derivative / na.derivative;
    if (config.route == VarianceRoute::InfluenceExpansion) {
      pt.stderr = ratio_variance_influence(phi_y, phi_a, ny.derivative, na.derivative);
    } else {
      const RatioPart num{ny.derivative, ny.derivative_se, std::sqrt(n * std::pow(config.h_y, 3))};
      const RatioPart den{na.derivative, na.derivative_se, std::sqrt(n * std::pow(config.h_a, 3))};
      pt.stderr = ratio_variance_rate_aware(num, den, estimator_covariance(phi_y, phi_a));
    }
    pt.flag = (ny.boundary || na.boundary) ? "boundary" : "ok";
  }
  return out;
}

LivCurve
liv_curve(const Dataset& data, std::span<const double> grid, const LivConfig& config)
{
  require_bandwidth(config.h_y);
  require_bandwidth(config.h_a);
  const auto plan = pseudo::make_plan(data, config.nuisance, config.seed, config.rotate);
  return liv_curve(plan, grid, config);
}

void
write_liv_csv(std::ostream& out, const LivCurve& curve)
{
  out << "z0,gamma,stderr,ci_lo,ci_hi,theta_y,theta_a,flag\n";
  for (const auto& p : curve.points) {
    out << format_number(p.z0) << ',' << format_number(p.gamma) << ',' << format_number(p.stderr)
        << ',' << format_number(p.gamma - kZ975 * p.stderr) << ','
        << format_number(p.gamma + kZ975 * p.stderr) << ',' << format_number(p.theta_y) << ','
        << format_number(p.theta_a) << ',' << p.flag << '\n';
  }
}

ThresholdDensity
threshold_density(const Dataset& data, std::span<const double> grid, const pseudo::CrossfitConfig& config)
{
  ThresholdDensity out;
  out.curve = pseudo::crossfit_curve(data, Target::Treatment, config, grid);
  for (auto& p : out.curve.points) {
    if (!std::isnan(p.derivative) && p.derivative < 0.0) {
      ++out.negative_points;
      p.flag = std::string(errc_name(Errc::NegativeDensity));
    }
  }
  return out;
}

std::string
ComplierResult::to_json() const
{
  using nlohmann::json;
  auto num = [](double v) { return std::isnan(v) ? json() : json(v); };
  auto comp = [](const BoundaryComponent& c) {
    return json{{"estimate", c.estimate}, {"stderr", c.stderr}};
  };
  json j;
  j["proportion"] = proportion;
  j["proportion_stderr"] = proportion_se;
  j["proportion_ci"] = {proportion_ci.lo, proportion_ci.hi};
  j["late"] = num(late);
  j["late_stderr"] = num(late_se);
  j["late_ci"] = {num(late_ci.lo), num(late_ci.hi)};
  j["components"] = {{"lambda_1", comp(lambda1)},
                     {"lambda_0", comp(lambda0)},
                     {"tau_1", comp(tau1)},
                     {"tau_0", comp(tau0)},
                     {"corr_1", corr1},
                     {"corr_0", corr0}};
  j["flag"] = flag;
  return j.dump(2);
}

ComplierResult
maximal_complier(const Dataset& data, const ComplierConfig& config)
{
  const auto [mn, mx] = std::minmax_element(data.z().begin(), data.z().end());
  if (data.empty() || *mn < 0.0 || *mx > 1.0) {
    throw Error(Errc::InvalidConfig, "instrument must lie in [0, 1]; rescale first");
  }
  const auto plan = pseudo::make_plan(data, config.nuisance, config.seed, config.rotate);
  const double grid[] = {0.0, 1.0};
  const auto [lo, hi] = pseudo::pseudo_window(grid, config.h, config.kernel);
  std::vector<pseudo::PseudoSample> sy;
  std::vector<pseudo::PseudoSample> sa;
  const Target both[] = {Target::Outcome, Target::Treatment};
  for (const auto& rot : plan.rotations) {
    auto s = pseudo::build_pseudo(rot, both, lo, hi);
    sy.push_back(std::move(s[0]));
    sa.push_back(std::move(s[1]));
  }
  const pseudo::CurveConfig cc{config.p, config.h, config.kernel, true};
  const auto cy = pseudo::fit_curve(plan, sy, grid, cc);
  const auto ca = pseudo::fit_curve(plan, sa, grid, cc);
  for (const auto* c : {&cy, &ca}) {
    for (const auto& p : c->points) {
      if (std::isnan(p.value)) {
        throw Error(Errc::NotEnoughLocalData, "boundary fit failed at z0 = " +
                                                std::to_string(p.z0) + " (" + p.flag + ")");
      }
    }
  }

  ComplierResult r;
  r.tau0 = {cy.points[0].value, cy.points[0].value_se};
  r.tau1 = {cy.points[1].value, cy.points[1].value_se};
  r.lambda0 = {ca.points[0].value, ca.points[0].value_se};
  r.lambda1 = {ca.points[1].value, ca.points[1].value_se};
  r.corr0 = correlation(cy.influence_value[0], ca.influence_value[0]);
  r.corr1 = correlation(cy.influence_value[1], ca.influence_value[1]);

  const double prop = r.lambda1.estimate - r.lambda0.estimate;
  r.proportion_se = std::hypot(r.lambda1.stderr, r.lambda0.stderr);
  r.proportion = std::clamp(prop, 0.0, 1.0);
  r.proportion_ci = {std::clamp(prop - kZ975 * r.proportion_se, 0.0, 1.0),
                     std::clamp(prop + kZ975 * r.proportion_se, 0.0, 1.0)};
  if (!(prop > config.relevance_floor)) {
    r.flag = std::string(errc_name(Errc::WeakInstrument));
    return r;
  }
  const double num = r.tau1.estimate - r.tau0.estimate;
  const double num_se = std::hypot(r.tau1.stderr, r.tau0.stderr);
  const double cov = r.corr1 * r.tau1.stderr * r.lambda1.stderr +
                     r.corr0 * r.tau0.stderr * r.lambda0.stderr;
  r.late = num / prop;
  r.late_se = ratio_variance_rate_aware({num, num_se, 1.0}, {prop, r.proportion_se, 1.0}, cov);
  r.late_ci = {r.late - kZ975 * r.late_se, r.late + kZ975 * r.late_se};
  return r;
}

Rescaled
rescale_unit(const Dataset& data)
{
  if (data.empty()) {
    throw Error(Errc::EmptyFold, "cannot rescale an empty dataset");
  }
  const auto [mn, mx] = std::minmax_element(data.z().begin(), data.z().end());
  const double lo = *mn;
  const double hi = *mx;
  if (!(hi > lo)) {
    throw Error(Errc::InvalidConfig, "instrument is constant");
  }
  std::vector<double> z(data.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    z[i] = (data.z()[i] - lo) / (hi - lo);
  }
  return {data.with_instrument(std::move(z)), lo, hi};
}

} // namespace contiv::effects
