#include "contiv/pseudo.hpp"

#include "contiv/error.hpp"
#include "contiv/parallel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace contiv::pseudo {

namespace {

constexpr double kZ975 = 1.959963984540054;

void
require_disjoint(const Provenance& rows, const nuisance::NuisanceFit& nuisance, const nuisance::MarginalFit& marginals)
{
  if (rows.overlaps(nuisance.training)) {
    throw Error(Errc::FoldOverlap, "regression rows overlap the nuisance training fold");
  }
  if (rows.overlaps(marginals.source())) {
    throw Error(Errc::FoldOverlap, "regression rows overlap the marginal fold");
  }
}

double
checked(double v)
{
  if (!std::isfinite(v)) {
    throw Error(Errc::NonFiniteResult, "pseudo-outcome is not finite");
  }
  return v;
}

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

} // namespace

double
pseudo_outcome(const Observation& o,
               const nuisance::NuisanceFit& nuisance,
               const nuisance::MarginalFit& marginals,
               Target target)
{
  if (nuisance.training.contains(o.source, o.row) || marginals.source().contains(o.source, o.row)) {
    throw Error(Errc::FoldOverlap, "observation belongs to a nuisance or marginal fold");
  }
  const double w = target == Target::Outcome ? o.y : o.a;
  const double m = nuisance.regression(target)(o.x, o.z);
  const double pi = (*nuisance.pi_hat)(o.x, o.z);
  return checked((w - m) * marginals.f_hat(o.z) / pi + marginals.initial(target, o.z));
}

CrossfitPlan
make_plan(const Dataset& data, const nuisance::NuisanceFactory& factory, std::uint64_t seed, bool rotate)
{
  auto folds = split_folds(data, 3, seed);
  CrossfitPlan plan;
  plan.seed = seed;
  const std::size_t n_rot = rotate ? 3 : 1;
  plan.rotations.resize(n_rot);
  std::vector<std::size_t> sizes;
  for (const auto& f : folds) {
    sizes.push_back(f.size());
  }
  parallel_for(n_rot, [&](std::size_t r) {
    Rotation& rot = plan.rotations[r];
    rot.scheme.rotation = r;
    rot.scheme.nuisance_fold = r;
    rot.scheme.marginal_fold = (r + 1) % 3;
    rot.scheme.regression_fold = (r + 2) % 3;
    rot.scheme.fold_sizes = sizes;
    rot.scheme.seed = seed;
    rot.nuisance = factory(folds[r]);
    rot.marginals = nuisance::MarginalFit(rot.nuisance, folds[(r + 1) % 3]);
    rot.regression = folds[(r + 2) % 3];
  });
  for (const auto& rot : plan.rotations) {
    plan.n += rot.regression.size();
  }
  return plan;
}

std::vector<PseudoSample>
build_pseudo(const Rotation& rotation, std::span<const Target> targets, double window_lo, double window_hi)
{
  const Dataset& fold = rotation.regression;
  require_disjoint(fold.provenance(), rotation.nuisance, rotation.marginals);
  if (fold.empty()) {
    throw Error(Errc::EmptyFold, "regression fold is empty");
  }
  std::vector<std::size_t> rows;
  std::vector<double> zs;
  for (std::size_t i = 0; i < fold.size(); ++i) {
    const double z = fold.z()[i];
    if (z >= window_lo && z <= window_hi) {
      rows.push_back(i);
      zs.push_back(z);
    }
  }
  const auto [mn, mx] = std::minmax_element(fold.z().begin(), fold.z().end());
  const std::vector<double> f = rotation.marginals.f_hat(zs);
  std::vector<double> pi(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    pi[k] = (*rotation.nuisance.pi_hat)(fold.row(rows[k]), zs[k]);
  }

  std::vector<PseudoSample> out;
  for (const Target t : targets) {
    PseudoSample s;
    s.target = t;
    s.scheme = rotation.scheme;
    s.n_total = fold.size();
    s.support_lo = *mn;
    s.support_hi = *mx;
    s.rows = rows;
    s.z = zs;
    s.xi.resize(rows.size());
    const std::vector<double> m0 = rotation.marginals.initial(t, zs);
    const Surface& reg = rotation.nuisance.regression(t);
    const auto& w = t == Target::Outcome ? fold.y() : fold.a();
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const auto i = rows[k];
      const double m = reg(fold.row(i), zs[k]);
      s.xi[k] = checked((w[i] - m) * f[k] / pi[k] + m0[k]);
    }
    out.push_back(std::move(s));
  }
  return out;
}

PseudoSample
build_pseudo(const Rotation& rotation, Target target, double window_lo, double window_hi)
{
  const Target t[] = {target};
  return std::move(build_pseudo(rotation, t, window_lo, window_hi).front());
}

std::vector<double>
CurveEstimate::grid() const
{
  std::vector<double> g;
  for (const auto& p : points) {
    g.push_back(p.z0);
  }
  return g;
}

std::vector<double>
CurveEstimate::derivatives() const
{
  std::vector<double> g;
  for (const auto& p : points) {
    g.push_back(p.derivative);
  }
  return g;
}

std::vector<double>
CurveEstimate::values() const
{
  std::vector<double> g;
  for (const auto& p : points) {
    g.push_back(p.value);
  }
  return g;
}

namespace {

// Influence values of one rotation's fit at z0 for e_k^T beta / h^k, laid
// out over all rows of the regression fold.
void
local_influence(const Rotation& rot,
                const PseudoSample& s,
                const localpoly::LocalFit& fit,
                int component,
                double estimate,
                double scale,
                std::span<double> out)
{
  const int p = fit.p;
  const auto dim = static_cast<Eigen::Index>(p + 1);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
  e(component) = 1.0;
  Eigen::VectorXd c = fit.dhat.llt().solve(e);
  if (component == 1) {
    c /= fit.h;
  }
  const double n_r = static_cast<double>(s.n_total);
  std::vector<double> nodes;
  std::vector<double> weights;
  std::vector<double> term1(s.n_total, 0.0);
  Eigen::VectorXd g(dim);
  for (std::size_t k = 0; k < s.z.size(); ++k) {
    const double u = s.z[k] - fit.z0;
    const double w = eval(fit.kernel, u / fit.h) / fit.h;
    if (w == 0.0) {
      continue;
    }
    localpoly::basis(u, fit.h, p, g.data());
    const double cg = c.dot(g);
    nodes.push_back(s.z[k]);
    weights.push_back(cg * w / n_r);
    term1[s.rows[k]] = cg * w * (s.xi[k] - g.dot(fit.beta));
  }
  const Dataset& fold = rot.regression;
  const auto functional =
    rot.nuisance.regression(s.target).z_functional(nodes, weights, fold.dim());
  for (std::size_t i = 0; i < s.n_total; ++i) {
    out[i] = scale * (term1[i] + functional(fold.row(i)) - estimate);
  }
}

} // namespace

CurveEstimate
fit_curve(const CrossfitPlan& plan,
          std::span<const PseudoSample> samples,
          std::span<const double> grid,
          const CurveConfig& config)
{
  const std::size_t n_rot = samples.size();
  if (n_rot == 0 || n_rot > plan.rotations.size()) {
    throw std::invalid_argument("fit_curve: one pseudo sample per rotation required");
  }
  CurveEstimate out;
  out.target = samples[0].target;
  out.method = "localpoly";
  out.h = config.h;
  out.p = config.p;
  out.kernel = config.kernel.name();
  out.points.resize(grid.size());
  out.rotation_value.assign(n_rot, std::vector<double>(grid.size(), std::nan("")));
  out.rotation_derivative.assign(n_rot, std::vector<double>(grid.size(), std::nan("")));

  std::vector<std::vector<double>> f_rot(n_rot);
  for (std::size_t r = 0; r < n_rot; ++r) {
    f_rot[r] = plan.rotations[r].marginals.f_hat(grid);
  }

  std::size_t n_all = 0;
  std::vector<std::size_t> offset(n_rot);
  for (std::size_t r = 0; r < n_rot; ++r) {
    offset[r] = n_all;
    n_all += samples[r].n_total;
  }
  if (config.keep_influence) {
    out.influence_value.assign(grid.size(), std::vector<double>(n_all, std::nan("")));
    out.influence_derivative.assign(grid.size(), std::vector<double>(n_all, std::nan("")));
    out.influence_ids.resize(n_all);
    for (std::size_t r = 0; r < n_rot; ++r) {
      const Dataset& fold = plan.rotations[r].regression;
      for (std::size_t i = 0; i < fold.size(); ++i) {
        out.influence_ids[offset[r] + i] = fold.observation(i).row;
      }
    }
  }

  parallel_for(grid.size(), [&](std::size_t gi) {
    CurvePoint& pt = out.points[gi];
    pt.z0 = grid[gi];
    double v_sum = 0.0;
    double d_sum = 0.0;
    double v_var = 0.0;
    double d_var = 0.0;
    double f_sum = 0.0;
    try {
      for (std::size_t r = 0; r < n_rot; ++r) {
        const PseudoSample& s = samples[r];
        localpoly::FitOptions opts;
        opts.n_total = s.n_total;
        opts.support_lo = s.support_lo;
        opts.support_hi = s.support_hi;
        const auto fit = localpoly::fit(s.z, s.xi, pt.z0, config.h, config.p, config.kernel, opts);
        const double f = f_rot[r][gi];
        const double value = localpoly::value(fit);
        const double vse = localpoly::value_stderr(fit, f, s.n_total);
        out.rotation_value[r][gi] = value;
        v_sum += value;
        v_var += vse * vse;
        double deriv = std::nan("");
        if (config.p >= 1) {
          deriv = localpoly::derivative(fit);
          const double dse = localpoly::derivative_stderr(fit, f, s.n_total);
          d_sum += deriv;
          d_var += dse * dse;
          out.rotation_derivative[r][gi] = deriv;
        }
        f_sum += f;
        pt.n_local += fit.n_local;
        pt.boundary = pt.boundary || fit.boundary;
        if (config.keep_influence) {
          const double scale = static_cast<double>(n_all) /
                               (static_cast<double>(n_rot) * static_cast<double>(s.n_total));
          local_influence(plan.rotations[r], s, fit, 0, value, scale,
                          std::span<double>(out.influence_value[gi]).subspan(offset[r], s.n_total));
          if (config.p >= 1) {
            local_influence(plan.rotations[r], s, fit, 1, deriv, scale,
                            std::span<double>(out.influence_derivative[gi]).subspan(offset[r], s.n_total));
          }
        }
      }
      const double rn = static_cast<double>(n_rot);
      pt.value = v_sum / rn;
      pt.value_se = std::sqrt(v_var) / rn;
      if (config.p >= 1) {
        pt.derivative = d_sum / rn;
        pt.derivative_se = std::sqrt(d_var) / rn;
      }
      pt.f_hat = f_sum / rn;
      pt.flag = pt.boundary ? "boundary" : "ok";
    } catch (const Error& e) {
      pt.value = pt.value_se = pt.derivative = pt.derivative_se = std::nan("");
      pt.flag = std::string(e.code_name());
    }
  });
  return out;
}

std::vector<double>
default_grid(std::span<const double> z, std::size_t n, double lo, double hi)
{
  if (z.empty() || n == 0) {
    throw Error(Errc::InvalidGrid, "grid needs data and at least one point");
  }
  std::vector<double> v(z.begin(), z.end());
  const double a = quantile(v, lo);
  const double b = quantile(v, hi);
  std::vector<double> g(n);
  for (std::size_t k = 0; k < n; ++k) {
    g[k] = n == 1 ? 0.5 * (a + b)
                  : a + (b - a) * static_cast<double>(k) / static_cast<double>(n - 1);
  }
  return g;
}

std::pair<double, double>
pseudo_window(std::span<const double> grid, double h, const KernelSpec& kernel)
{
  if (grid.empty()) {
    throw Error(Errc::InvalidGrid, "empty grid");
  }
  if (kernel.support() != KernelSupport::Compact) {
    return {-kInf, kInf};
  }
  const auto [mn, mx] = std::minmax_element(grid.begin(), grid.end());
  return {*mn - h, *mx + h};
}

CurveEstimate
crossfit_curve(const Dataset& data, Target target, const CrossfitConfig& config, std::span<const double> grid)
{
  if (data.size() < static_cast<std::size_t>(3 * (config.curve.p + 2))) {
    throw Error(Errc::NotEnoughLocalData, "need at least 3 (p + 2) observations");
  }
  require_bandwidth(config.curve.h);
  const auto plan = make_plan(data, config.nuisance, config.seed, config.rotate);
  const auto [lo, hi] = pseudo_window(grid, config.curve.h, config.curve.kernel);
  std::vector<PseudoSample> samples;
  for (const auto& rot : plan.rotations) {
    samples.push_back(build_pseudo(rot, target, lo, hi));
  }
  return fit_curve(plan, samples, grid, config.curve);
}

CurvePoint
boundary_curve(const Dataset& data, Target target, double z0, const CrossfitConfig& config)
{
  const double g[] = {z0};
  return crossfit_curve(data, target, config, g).points.front();
}

void
write_curve_csv(std::ostream& out, const CurveEstimate& curve, Quantity quantity)
{
  out << "z0,estimate,stderr,ci_lo,ci_hi,n_local,flag\n";
  for (const auto& p : curve.points) {
    const double est = quantity == Quantity::Value ? p.value : p.derivative;
    const double se = quantity == Quantity::Value ? p.value_se : p.derivative_se;
    out << format_number(p.z0) << ',' << format_number(est) << ',' << format_number(se) << ','
        << format_number(est - kZ975 * se) << ',' << format_number(est + kZ975 * se) << ','
        << p.n_local << ',' << p.flag << '\n';
  }
}

} // namespace contiv::pseudo
