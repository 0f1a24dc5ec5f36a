#include "contiv/smooth.hpp"

#include "contiv/error.hpp"
#include "contiv/parallel.hpp"
#include "contiv/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace contiv::smooth {

double
window_radius(const KernelSpec& kernel)
{
  return kernel.support() == KernelSupport::Compact ? 1.0 : 8.0;
}

QuadGrid
quad_grid(double z0, double h, const KernelSpec& kernel, std::size_t n_nodes)
{
  require_bandwidth(h);
  const std::size_t half_nodes = std::max<std::size_t>(n_nodes / 2, 1);
  const auto& rule = quad::gauss_legendre(half_nodes);
  const double r = window_radius(kernel) * h;
  QuadGrid g;
  g.nodes.reserve(2 * half_nodes);
  g.weights.reserve(2 * half_nodes);
  // The window is split at z0 so that a kink of the integrand there does
  // not spoil the rule.
  for (const double sign : {-1.0, 1.0}) {
    const double mid = z0 + sign * 0.5 * r;
    const double half = 0.5 * r;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      const double z = mid + half * rule.nodes[q];
      g.nodes.push_back(z);
      g.weights.push_back(half * rule.weights[q] * eval_derivative(kernel, (z - z0) / h) / (h * h));
    }
  }
  return g;
}

double
influence_value(const Observation& o,
                const nuisance::NuisanceFit& nuisance,
                Target target,
                double z0,
                double h,
                const KernelSpec& kernel,
                const QuadGrid& grid)
{
  const Surface& m = nuisance.regression(target);
  const double w = target == Target::Outcome ? o.y : o.a;
  const double kd = eval_derivative(kernel, (o.z - z0) / h) / (h * h);
  double first = 0.0;
  if (kd != 0.0) {
    first = -kd * (w - m(o.x, o.z)) / (*nuisance.pi_hat)(o.x, o.z);
  }
  double integral = 0.0;
  for (std::size_t q = 0; q < grid.nodes.size(); ++q) {
    integral += grid.weights[q] * m(o.x, grid.nodes[q]);
  }
  return first - integral;
}

std::size_t
resolve_nodes(const Surface& regression,
              const RowMatrix& probes,
              double z0,
              double h,
              const KernelSpec& kernel,
              double rel_tol,
              std::size_t min_nodes,
              std::size_t max_nodes)
{
  const auto d = static_cast<std::size_t>(probes.cols());
  const auto n_probe = static_cast<std::size_t>(probes.rows());
  auto integrals = [&](const QuadGrid& g, std::vector<double>& val, std::vector<double>& mass) {
    val.assign(n_probe, 0.0);
    mass.assign(n_probe, 0.0);
    for (std::size_t i = 0; i < n_probe; ++i) {
      const std::span<const double> x(probes.data() + i * d, d);
      for (std::size_t q = 0; q < g.nodes.size(); ++q) {
        const double t = g.weights[q] * regression(x, g.nodes[q]);
        val[i] += t;
        mass[i] += std::abs(t);
      }
    }
  };
  std::size_t n = min_nodes;
  std::vector<double> v1;
  std::vector<double> m1;
  std::vector<double> v2;
  std::vector<double> m2;
  integrals(quad_grid(z0, h, kernel, n), v1, m1);
  while (n < max_nodes) {
    integrals(quad_grid(z0, h, kernel, 2 * n), v2, m2);
    bool ok = true;
    for (std::size_t i = 0; i < n_probe; ++i) {
      if (std::abs(v2[i] - v1[i]) > rel_tol * m2[i]) {
        ok = false;
        break;
      }
    }
    if (ok) {
      return n;
    }
    n *= 2;
    v1.swap(v2);
    m1.swap(m2);
  }
  throw Error(Errc::QuadratureUnderResolved,
              "integral term still changing at " + std::to_string(max_nodes) + " nodes (z0 = " +
                std::to_string(z0) + ", h = " + std::to_string(h) + ")");
}

SmoothDerivEstimate
estimate(const Dataset& fold,
         const nuisance::NuisanceFit& nuisance,
         Target target,
         double z0,
         double h,
         const KernelSpec& kernel,
         bool keep_influence)
{
  require_bandwidth(h);
  if (fold.empty()) {
    throw Error(Errc::EmptyFold, "cannot estimate on an empty fold");
  }
  if (fold.provenance().overlaps(nuisance.training)) {
    throw Error(Errc::FoldOverlap, "estimation fold overlaps the nuisance training fold");
  }
  const auto n = fold.size();
  const auto d = fold.dim();
  const Surface& m = nuisance.regression(target);
  const RowMatrix probes = fold.x().topRows(static_cast<Eigen::Index>(std::min<std::size_t>(n, 16)));
  const std::size_t nodes = resolve_nodes(m, probes, z0, h, kernel);
  const QuadGrid grid = quad_grid(z0, h, kernel, nodes);
  const auto integral = m.z_functional(grid.nodes, grid.weights, d);
  const auto& w = target == Target::Outcome ? fold.y() : fold.a();

  std::vector<double> phi(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = fold.row(i);
    const double z = fold.z()[i];
    const double kd = eval_derivative(kernel, (z - z0) / h) / (h * h);
    double first = 0.0;
    if (kd != 0.0) {
      first = -kd * (w[i] - m(x, z)) / (*nuisance.pi_hat)(x, z);
    }
    phi[i] = first - integral(x);
    sum += phi[i];
  }
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (const double v : phi) {
    ss += (v - mean) * (v - mean);
  }
  SmoothDerivEstimate out;
  out.z0 = z0;
  out.h = h;
  out.theta_hat = mean;
  out.stderr = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
  out.kernel = kernel;
  out.n_used = n;
  out.quad_nodes = nodes;
  if (keep_influence) {
    out.influence = std::move(phi);
  }
  return out;
}

pseudo::CurveEstimate
crossfit_smooth(const pseudo::CrossfitPlan& plan,
                Target target,
                std::span<const double> grid,
                double h,
                const KernelSpec& kernel,
                bool keep_influence)
{
  const std::size_t n_rot = plan.rotations.size();
  pseudo::CurveEstimate out;
  out.target = target;
  out.method = "smooth";
  out.h = h;
  out.p = 0;
  out.kernel = kernel.name();
  out.points.resize(grid.size());
  out.rotation_value.assign(n_rot, std::vector<double>(grid.size(), std::nan("")));
  out.rotation_derivative.assign(n_rot, std::vector<double>(grid.size(), std::nan("")));

  std::size_t n_all = 0;
  std::vector<std::size_t> offset(n_rot);
  for (std::size_t r = 0; r < n_rot; ++r) {
    offset[r] = n_all;
    n_all += plan.rotations[r].regression.size();
  }
  if (keep_influence) {
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
    auto& pt = out.points[gi];
    pt.z0 = grid[gi];
    try {
      double sum = 0.0;
      double var = 0.0;
      std::size_t used = 0;
      for (std::size_t r = 0; r < n_rot; ++r) {
        const auto& rot = plan.rotations[r];
        auto est = estimate(rot.regression, rot.nuisance, target, pt.z0, h, kernel, keep_influence);
        out.rotation_derivative[r][gi] = est.theta_hat;
        sum += est.theta_hat;
        var += est.stderr * est.stderr;
        used += est.n_used;
        if (keep_influence) {
          const double scale = static_cast<double>(n_all) /
                               (static_cast<double>(n_rot) * static_cast<double>(est.n_used));
          auto& dst = out.influence_derivative[gi];
          for (std::size_t i = 0; i < est.influence.size(); ++i) {
            dst[offset[r] + i] = scale * (est.influence[i] - est.theta_hat);
          }
        }
      }
      const double rn = static_cast<double>(n_rot);
      pt.derivative = sum / rn;
      pt.derivative_se = std::sqrt(var) / rn;
      pt.n_local = used;
      pt.flag = "ok";
    } catch (const Error& e) {
      pt.derivative = pt.derivative_se = std::nan("");
      pt.flag = std::string(e.code_name());
    }
  });
  return out;
}

double
smoothing_bias_oracle(const SurfaceFn& mu,
                      const SurfaceFn& dmu_dz,
                      const CovariateSampler& x_law,
                      double z0,
                      double h,
                      const KernelSpec& kernel,
                      std::size_t draws,
                      std::uint64_t seed)
{
  require_bandwidth(h);
  if (draws == 0) {
    throw std::invalid_argument("smoothing_bias_oracle: draws must be positive");
  }
  Rng rng(seed);
  std::vector<std::vector<double>> xs(draws);
  for (auto& x : xs) {
    x = x_law(rng);
  }
  // Resolve the node count on the first few draws, then reuse it.
  const std::size_t n_probe = std::min<std::size_t>(draws, 8);
  std::size_t nodes = 64;
  for (;;) {
    const auto g1 = quad_grid(z0, h, kernel, nodes);
    const auto g2 = quad_grid(z0, h, kernel, 2 * nodes);
    bool ok = true;
    for (std::size_t i = 0; i < n_probe && ok; ++i) {
      double v1 = 0.0;
      double v2 = 0.0;
      double mass = 0.0;
      for (std::size_t q = 0; q < g1.nodes.size(); ++q) {
        v1 += g1.weights[q] * mu(xs[i], g1.nodes[q]);
      }
      for (std::size_t q = 0; q < g2.nodes.size(); ++q) {
        const double t = g2.weights[q] * mu(xs[i], g2.nodes[q]);
        v2 += t;
        mass += std::abs(t);
      }
      ok = std::abs(v2 - v1) <= 1e-10 * std::max(mass, 1e-300);
    }
    if (ok) {
      break;
    }
    nodes *= 2;
    if (nodes > 8192) {
      throw Error(Errc::QuadratureUnderResolved, "oracle quadrature did not settle");
    }
  }
  const auto g = quad_grid(z0, h, kernel, 2 * nodes);
  double acc = 0.0;
  for (const auto& x : xs) {
    double theta_h = 0.0;
    for (std::size_t q = 0; q < g.nodes.size(); ++q) {
      theta_h -= g.weights[q] * mu(x, g.nodes[q]);
    }
    acc += theta_h - dmu_dz(x, z0);
  }
  return acc / static_cast<double>(draws);
}

} // namespace contiv::smooth
