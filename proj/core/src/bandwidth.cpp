#include "contiv/bandwidth.hpp"

#include "contiv/error.hpp"
#include "contiv/parallel.hpp"
#include "contiv/pseudo.hpp"
#include "contiv/random.hpp"
#include "contiv/smooth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

namespace contiv::bandwidth {

namespace {

std::vector<double>
trapezoid_weights(std::span<const double> nodes)
{
  std::vector<double> t(nodes.size(), 0.0);
  for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
    const double half = 0.5 * (nodes[k + 1] - nodes[k]);
    t[k] += half;
    t[k + 1] += half;
  }
  return t;
}

std::vector<double>
linspace(double lo, double hi, std::size_t n)
{
  std::vector<double> v(n);
  for (std::size_t k = 0; k < n; ++k) {
    v[k] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
  }
  return v;
}

} // namespace

WeightSpec
WeightSpec::marginal_density(std::span<const double> z)
{
  std::vector<double> v(z.begin(), z.end());
  WeightSpec s;
  s.kind = Kind::MarginalDensity;
  s.zero_lo = quantile(v, 0.01);
  s.flat_lo = quantile(v, 0.05);
  s.flat_hi = quantile(v, 0.95);
  s.zero_hi = quantile(v, 0.99);
  return s;
}

double
taper(double z, const WeightSpec& s)
{
  if (z <= s.zero_lo || z >= s.zero_hi) {
    return 0.0;
  }
  if (z < s.flat_lo) {
    const double t = (z - s.zero_lo) / (s.flat_lo - s.zero_lo);
    return 0.5 * (1.0 - std::cos(std::numbers::pi * t));
  }
  if (z > s.flat_hi) {
    const double t = (s.zero_hi - z) / (s.zero_hi - s.flat_hi);
    return 0.5 * (1.0 - std::cos(std::numbers::pi * t));
  }
  return 1.0;
}

std::vector<double>
weight_on_grid(std::span<const double> nodes, const WeightSpec& spec, const nuisance::MarginalFit* marginals)
{
  std::vector<double> w(nodes.size());
  if (spec.kind == WeightSpec::Kind::Custom) {
    if (!spec.custom) {
      throw Error(Errc::InvalidConfig, "custom weight without a function");
    }
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      w[k] = spec.custom(nodes[k]);
    }
    return w;
  }
  if (marginals == nullptr) {
    throw Error(Errc::InvalidConfig, "marginal density weight needs marginals");
  }
  const auto f = marginals->f_hat(nodes);
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    w[k] = f[k] * taper(nodes[k], spec);
  }
  return w;
}

RiskFunctional::RiskFunctional(std::vector<double> nodes,
                               std::span<const double> theta_bar,
                               std::span<const double> weights,
                               const nuisance::NuisanceFit& nuisance,
                               Target target,
                               double h_min,
                               std::size_t dim)
  : nodes_(std::move(nodes))
  , nuisance_(&nuisance)
  , target_(target)
{
  const auto n = nodes_.size();
  if (n < 3 || theta_bar.size() != n || weights.size() != n) {
    throw Error(Errc::GridTooCoarse, "risk grid needs at least 3 aligned nodes");
  }
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (!(nodes_[k + 1] > nodes_[k])) {
      throw Error(Errc::InvalidGrid, "risk grid must increase strictly");
    }
    if (nodes_[k + 1] - nodes_[k] > 0.25 * h_min) {
      throw Error(Errc::GridTooCoarse,
                  "risk grid spacing " + std::to_string(nodes_[k + 1] - nodes_[k]) +
                    " exceeds h_min / 4 = " + std::to_string(0.25 * h_min));
    }
  }
  std::vector<double> g(n);
  for (std::size_t k = 0; k < n; ++k) {
    g[k] = weights[k] * theta_bar[k];
  }
  gprime_.resize(n);
  gprime_[0] = (g[1] - g[0]) / (nodes_[1] - nodes_[0]);
  gprime_[n - 1] = (g[n - 1] - g[n - 2]) / (nodes_[n - 1] - nodes_[n - 2]);
  for (std::size_t k = 1; k + 1 < n; ++k) {
    gprime_[k] = (g[k + 1] - g[k - 1]) / (nodes_[k + 1] - nodes_[k - 1]);
  }
  const auto t = trapezoid_weights(nodes_);
  std::vector<double> qw(n);
  for (std::size_t k = 0; k < n; ++k) {
    square_ += t[k] * theta_bar[k] * theta_bar[k] * weights[k];
    qw[k] = t[k] * gprime_[k];
  }
  integral_ = nuisance.regression(target).z_functional(nodes_, qw, dim);
}

double
RiskFunctional::gprime_at(double z) const
{
  if (z < nodes_.front() || z > nodes_.back()) {
    return 0.0;
  }
  const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), z);
  if (it == nodes_.end()) {
    return gprime_.back();
  }
  const auto k = static_cast<std::size_t>(it - nodes_.begin()) - 1;
  const double u = (z - nodes_[k]) / (nodes_[k + 1] - nodes_[k]);
  return (1.0 - u) * gprime_[k] + u * gprime_[k + 1];
}

double
RiskFunctional::loss(std::span<const double> x, double z, double w_obs) const
{
  double pointwise = 0.0;
  const double gp = gprime_at(z);
  if (gp != 0.0) {
    const Surface& m = nuisance_->regression(target_);
    pointwise = gp * (w_obs - m(x, z)) / (*nuisance_->pi_hat)(x, z);
  }
  return square_ + 2.0 * (integral_(x) + pointwise);
}

double
RiskFunctional::loss(const Observation& o) const
{
  return loss(o.x, o.z, target_ == Target::Outcome ? o.y : o.a);
}

double
RiskFunctional::mean_loss(const Dataset& fold) const
{
  if (fold.empty()) {
    throw Error(Errc::EmptyFold, "risk evaluation fold is empty");
  }
  const auto& w = target_ == Target::Outcome ? fold.y() : fold.a();
  double sum = 0.0;
  for (std::size_t i = 0; i < fold.size(); ++i) {
    sum += loss(fold.row(i), fold.z()[i], w[i]);
  }
  return sum / static_cast<double>(fold.size());
}

double
pseudo_risk_loss(const Observation& o,
                 std::span<const double> nodes,
                 std::span<const double> theta_bar,
                 const nuisance::NuisanceFit& nuisance,
                 const nuisance::MarginalFit& marginals,
                 const WeightSpec& w_spec,
                 Target target,
                 double h_min)
{
  const auto w = weight_on_grid(nodes, w_spec, &marginals);
  const RiskFunctional r({nodes.begin(), nodes.end()}, theta_bar, w, nuisance, target, h_min, o.x.size());
  return r.loss(o);
}

double
weighted_sq_distance(std::span<const double> nodes,
                     std::span<const double> a,
                     std::span<const double> b,
                     std::span<const double> w)
{
  const auto t = trapezoid_weights(nodes);
  double s = 0.0;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    if (w[k] != 0.0) {
      s += t[k] * (a[k] - b[k]) * (a[k] - b[k]) * w[k];
    }
  }
  return s;
}

std::size_t
argmin_risk(std::span<const double> candidates, std::span<const double> risk)
{
  std::size_t best = candidates.size();
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    if (!std::isfinite(risk[c])) {
      continue;
    }
    if (best == candidates.size() || risk[c] < risk[best] ||
        (risk[c] == risk[best] && candidates[c] > candidates[best])) {
      best = c;
    }
  }
  if (best == candidates.size()) {
    throw Error(Errc::AllCandidatesFailed, "no bandwidth candidate produced a finite risk");
  }
  return best;
}

RiskTable
select(const Dataset& data, std::span<const double> candidates, const SelectConfig& config)
{
  if (candidates.empty()) {
    throw Error(Errc::AllCandidatesFailed, "no bandwidth candidates");
  }
  for (const double h : candidates) {
    require_bandwidth(h);
  }
  if (!config.nuisance) {
    throw Error(Errc::InvalidConfig, "bandwidth selection needs a nuisance factory");
  }
  const double h_min = *std::min_element(candidates.begin(), candidates.end());
  const double h_max = *std::max_element(candidates.begin(), candidates.end());

  WeightSpec weight = config.weight;
  if (config.auto_weight && weight.kind == WeightSpec::Kind::MarginalDensity) {
    weight = WeightSpec::marginal_density(data.z());
  }
  double lo = weight.zero_lo;
  double hi = weight.zero_hi;
  if (weight.kind == WeightSpec::Kind::Custom || !(hi > lo)) {
    std::vector<double> v(data.z().begin(), data.z().end());
    lo = quantile(v, 0.01);
    hi = quantile(v, 0.99);
  }
  std::size_t n_nodes = config.grid_points;
  if (n_nodes == 0) {
    n_nodes = static_cast<std::size_t>(std::ceil((hi - lo) / (0.25 * h_min))) + 1;
    n_nodes = std::max<std::size_t>(n_nodes, 3);
  }

  RiskTable table;
  table.candidates.assign(candidates.begin(), candidates.end());
  table.nodes = linspace(lo, hi, n_nodes);
  table.fold_scheme.seed = derive_seed(config.seed, {0xB0});
  const auto folds = split_folds(data, 2, table.fold_scheme.seed);
  table.fold_scheme.fold_sizes[0] = folds[0].size();
  table.fold_scheme.fold_sizes[1] = folds[1].size();
  const auto nc = candidates.size();
  table.flags.assign(nc, "ok");
  std::vector<std::string> fold_flags[2];

  for (std::size_t k = 0; k < 2; ++k) {
    const Dataset& train = folds[k];
    const Dataset& eval = folds[1 - k];
    table.risk_fold[k].assign(nc, std::nan(""));
    fold_flags[k].assign(nc, "ok");

    const auto plan = pseudo::make_plan(train, config.nuisance, derive_seed(config.seed, {0xB1, k}), config.rotate);
    const auto eval_nuisance = config.nuisance(train);
    std::vector<double> w;
    if (weight.kind == WeightSpec::Kind::MarginalDensity) {
      const nuisance::MarginalFit marginals(eval_nuisance, eval);
      w = weight_on_grid(table.nodes, weight, &marginals);
    } else {
      w = weight_on_grid(table.nodes, weight, nullptr);
    }

    std::vector<pseudo::PseudoSample> samples;
    if (config.method == effects::Method::LocalPoly) {
      const auto [wlo, whi] = pseudo::pseudo_window(table.nodes, h_max, config.kernel);
      for (const auto& rot : plan.rotations) {
        samples.push_back(pseudo::build_pseudo(rot, config.target, wlo, whi));
      }
    }

    parallel_for(nc, [&](std::size_t c) {
      try {
        pseudo::CurveEstimate curve;
        if (config.method == effects::Method::LocalPoly) {
          const pseudo::CurveConfig cc{config.p, candidates[c], config.kernel, false};
          curve = pseudo::fit_curve(plan, samples, table.nodes, cc);
        } else {
          curve = smooth::crossfit_smooth(plan, config.target, table.nodes, candidates[c], config.kernel, false);
        }
        std::vector<double> theta(n_nodes, 0.0);
        for (std::size_t g = 0; g < n_nodes; ++g) {
          const double v = curve.points[g].derivative;
          if (std::isnan(v)) {
            if (w[g] != 0.0) {
              throw Error(Errc::NotEnoughLocalData,
                          "curve missing at z = " + std::to_string(table.nodes[g]) + " (" +
                            curve.points[g].flag + ")");
            }
            continue;
          }
          theta[g] = v;
        }
        const RiskFunctional r(table.nodes, theta, w, eval_nuisance, config.target, h_min, data.dim());
        table.risk_fold[k][c] = r.mean_loss(eval);
      } catch (const Error& e) {
        fold_flags[k][c] = std::string(e.code_name());
      }
    });
  }

  table.risk_hat.resize(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    table.risk_hat[c] = 0.5 * (table.risk_fold[0][c] + table.risk_fold[1][c]);
    if (fold_flags[0][c] != "ok") {
      table.flags[c] = fold_flags[0][c];
    } else if (fold_flags[1][c] != "ok") {
      table.flags[c] = fold_flags[1][c];
    }
  }
  table.chosen = argmin_risk(table.candidates, table.risk_hat);
  return table;
}

std::vector<double>
default_candidates(std::span<const double> z, std::size_t count)
{
  const double pilot = nuisance::silverman_bandwidth(z);
  require_bandwidth(pilot);
  std::vector<double> out(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double t = count == 1 ? 0.5 : static_cast<double>(k) / static_cast<double>(count - 1);
    out[k] = pilot * std::pow(2.0, -1.0 + 2.0 * t);
  }
  return out;
}

void
write_risk_csv(std::ostream& out, const RiskTable& table)
{
  auto num = [](double v) {
    if (std::isnan(v)) {
      return std::string("NA");
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return std::string(buf);
  };
  out << "h,risk_hat,risk_fold1,risk_fold2,chosen,flag\n";
  for (std::size_t c = 0; c < table.candidates.size(); ++c) {
    out << num(table.candidates[c]) << ',' << num(table.risk_hat[c]) << ','
        << num(table.risk_fold[0][c]) << ',' << num(table.risk_fold[1][c]) << ','
        << (c == table.chosen ? 1 : 0) << ',' << table.flags[c] << '\n';
  }
}

} // namespace contiv::bandwidth
