#include "contiv/surface.hpp"

#include <json.hpp>

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace contiv {

namespace {

using nlohmann::json;

constexpr double kInvSqrt2Pi = 0.3989422804014327;

Eigen::VectorXd
column_mean(const RowMatrix& x)
{
  if (x.rows() == 0) {
    return Eigen::VectorXd::Zero(x.cols());
  }
  return x.colwise().mean().transpose();
}

} // namespace

bool
Surface::affine_in_x(double, double&, std::span<double>) const
{
  return false;
}

void
Surface::row_mean(const RowMatrix& x, std::span<const double> zs, std::span<double> out) const
{
  const auto n = static_cast<std::size_t>(x.rows());
  const auto d = static_cast<std::size_t>(x.cols());
  std::vector<double> b(d);
  double a = 0.0;
  if (!zs.empty() && affine_in_x(zs[0], a, b)) {
    const Eigen::VectorXd m = column_mean(x);
    for (std::size_t k = 0; k < zs.size(); ++k) {
      affine_in_x(zs[k], a, b);
      double acc = a;
      for (std::size_t j = 0; j < d; ++j) {
        acc += b[j] * m(static_cast<Eigen::Index>(j));
      }
      out[k] = acc;
    }
    return;
  }
  for (std::size_t k = 0; k < zs.size(); ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      acc += (*this)({x.data() + i * d, d}, zs[k]);
    }
    out[k] = n > 0 ? acc / static_cast<double>(n) : 0.0;
  }
}

std::function<double(std::span<const double>)>
Surface::z_functional(std::span<const double> nodes,
                      std::span<const double> weights,
                      std::size_t dim) const
{
  std::vector<double> b(dim);
  double a = 0.0;
  if (!nodes.empty() && affine_in_x(nodes[0], a, b)) {
    double sa = 0.0;
    std::vector<double> sb(dim, 0.0);
    for (std::size_t q = 0; q < nodes.size(); ++q) {
      affine_in_x(nodes[q], a, b);
      sa += weights[q] * a;
      for (std::size_t j = 0; j < dim; ++j) {
        sb[j] += weights[q] * b[j];
      }
    }
    return [sa, sb = std::move(sb)](std::span<const double> x) {
      double acc = sa;
      for (std::size_t j = 0; j < sb.size(); ++j) {
        acc += sb[j] * x[j];
      }
      return acc;
    };
  }
  std::vector<double> z(nodes.begin(), nodes.end());
  std::vector<double> w(weights.begin(), weights.end());
  return [this, z = std::move(z), w = std::move(w)](std::span<const double> x) {
    double acc = 0.0;
    for (std::size_t q = 0; q < z.size(); ++q) {
      acc += w[q] * (*this)(x, z[q]);
    }
    return acc;
  };
}

bool
ConstantSurface::affine_in_x(double, double& a, std::span<double> b) const
{
  a = c_;
  std::fill(b.begin(), b.end(), 0.0);
  return true;
}

std::string
ConstantSurface::summary() const
{
  return json{{"type", "constant"}, {"value", c_}}.dump();
}

bool
PolySurface::affine_in_x(double z, double& a, std::span<double> b) const
{
  std::fill(b.begin(), b.end(), 0.0);
  a = poly_.marginal(z);
  double zj = 1.0;
  for (std::size_t j = 0; j < poly_.intercept.size(); ++j) {
    if (j < poly_.slope.size()) {
      const auto& s = poly_.slope[j];
      for (std::size_t k = 0; k < s.size() && k < b.size(); ++k) {
        b[k] += zj * s[k];
      }
    }
    zj *= z;
  }
  return true;
}

std::string
PolySurface::summary() const
{
  return json{{"type", "polynomial_in_z"},
              {"intercept", poly_.intercept},
              {"slope", poly_.slope}}
    .dump();
}

GridAffineSurface::GridAffineSurface(std::vector<double> grid, std::vector<double> a, RowMatrix b)
  : grid_(std::move(grid))
  , a_(std::move(a))
  , b_(std::move(b))
{}

bool
GridAffineSurface::affine_in_x(double z, double& a, std::span<double> b) const
{
  const auto d = static_cast<std::size_t>(b_.cols());
  std::size_t lo = 0;
  double t = 0.0;
  if (z <= grid_.front()) {
    lo = 0;
  } else if (z >= grid_.back()) {
    lo = grid_.size() - 1;
  } else {
    lo = static_cast<std::size_t>(std::upper_bound(grid_.begin(), grid_.end(), z) - grid_.begin()) - 1;
    t = (z - grid_[lo]) / (grid_[lo + 1] - grid_[lo]);
  }
  const std::size_t hi = t > 0.0 ? lo + 1 : lo;
  a = (1.0 - t) * a_[lo] + t * a_[hi];
  for (std::size_t k = 0; k < d && k < b.size(); ++k) {
    b[k] = (1.0 - t) * b_(static_cast<Eigen::Index>(lo), static_cast<Eigen::Index>(k)) +
           t * b_(static_cast<Eigen::Index>(hi), static_cast<Eigen::Index>(k));
  }
  return true;
}

double
GridAffineSurface::operator()(std::span<const double> x, double z) const
{
  std::vector<double> b(x.size());
  double a = 0.0;
  affine_in_x(z, a, b);
  for (std::size_t k = 0; k < x.size(); ++k) {
    a += b[k] * x[k];
  }
  return a;
}

std::string
GridAffineSurface::summary() const
{
  std::vector<std::vector<double>> slopes;
  for (Eigen::Index g = 0; g < b_.rows(); ++g) {
    slopes.emplace_back(b_.row(g).data(), b_.row(g).data() + b_.cols());
  }
  return json{{"type", "local_linear_in_z_linear_in_x"},
              {"grid", grid_},
              {"intercept", a_},
              {"slope", slopes}}
    .dump();
}

KernelRidgeSurface::KernelRidgeSurface(RowMatrix centers,
                                       std::vector<double> alpha,
                                       std::vector<double> shift,
                                       std::vector<double> scale,
                                       double lengthscale,
                                       double intercept,
                                       double lambda,
                                       bool uses_z)
  : centers_(std::move(centers))
  , alpha_(std::move(alpha))
  , shift_(std::move(shift))
  , scale_(std::move(scale))
  , lengthscale_(lengthscale)
  , intercept_(intercept)
  , lambda_(lambda)
  , uses_z_(uses_z)
{}

double
KernelRidgeSurface::x_factor(std::span<const double> x, std::size_t k) const
{
  const auto d = x.size();
  double r2 = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    const double u = (x[j] - shift_[j]) / scale_[j] -
                     centers_(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j));
    r2 += u * u;
  }
  return std::exp(-0.5 * r2 / (lengthscale_ * lengthscale_));
}

double
KernelRidgeSurface::z_factor(double z, std::size_t k) const
{
  if (!uses_z_) {
    return 1.0;
  }
  const auto zc = static_cast<Eigen::Index>(centers_.cols() - 1);
  const double u = (z - shift_.back()) / scale_.back() - centers_(static_cast<Eigen::Index>(k), zc);
  return std::exp(-0.5 * u * u / (lengthscale_ * lengthscale_));
}

double
KernelRidgeSurface::operator()(std::span<const double> x, double z) const
{
  double acc = intercept_;
  for (std::size_t k = 0; k < alpha_.size(); ++k) {
    acc += alpha_[k] * x_factor(x, k) * z_factor(z, k);
  }
  return acc;
}

void
KernelRidgeSurface::row_mean(const RowMatrix& x, std::span<const double> zs, std::span<double> out) const
{
  // The RBF kernel factorizes over x and z, so the row average collapses to
  // one weight per center.
  const auto n = static_cast<std::size_t>(x.rows());
  const auto d = static_cast<std::size_t>(x.cols());
  std::vector<double> beta(alpha_.size(), 0.0);
  for (std::size_t k = 0; k < alpha_.size(); ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      acc += x_factor({x.data() + i * d, d}, k);
    }
    beta[k] = n > 0 ? alpha_[k] * acc / static_cast<double>(n) : 0.0;
  }
  for (std::size_t q = 0; q < zs.size(); ++q) {
    double acc = intercept_;
    for (std::size_t k = 0; k < beta.size(); ++k) {
      acc += beta[k] * z_factor(zs[q], k);
    }
    out[q] = acc;
  }
}

std::function<double(std::span<const double>)>
KernelRidgeSurface::z_functional(std::span<const double> nodes,
                                 std::span<const double> weights,
                                 std::size_t) const
{
  double wsum = 0.0;
  for (const double w : weights) {
    wsum += w;
  }
  std::vector<double> c(alpha_.size(), 0.0);
  for (std::size_t k = 0; k < alpha_.size(); ++k) {
    double acc = 0.0;
    for (std::size_t q = 0; q < nodes.size(); ++q) {
      acc += weights[q] * z_factor(nodes[q], k);
    }
    c[k] = alpha_[k] * acc;
  }
  return [this, c = std::move(c), wsum](std::span<const double> x) {
    double acc = intercept_ * wsum;
    for (std::size_t k = 0; k < c.size(); ++k) {
      acc += c[k] * x_factor(x, k);
    }
    return acc;
  };
}

std::string
KernelRidgeSurface::summary() const
{
  return json{{"type", "kernel_ridge"},
              {"centers", centers_.rows()},
              {"lengthscale", lengthscale_},
              {"lambda", lambda_},
              {"intercept", intercept_},
              {"uses_z", uses_z_},
              {"shift", shift_},
              {"scale", scale_},
              {"alpha", alpha_}}
    .dump();
}

ConditionalDensity::ConditionalDensity(ClipBounds clip)
  : clip_(clip)
{
  if (!(clip.lo > 0.0) || !(clip.hi > clip.lo)) {
    throw std::invalid_argument("clip bounds must satisfy 0 < lo < hi");
  }
}

double
ConditionalDensity::clipped(double v) const
{
  if (v < clip_.lo) {
    clip_events_.fetch_add(1, std::memory_order_relaxed);
    return clip_.lo;
  }
  if (v > clip_.hi) {
    clip_events_.fetch_add(1, std::memory_order_relaxed);
    return clip_.hi;
  }
  return v;
}

double
ConditionalDensity::clipped(double v, std::size_t& events) const
{
  if (v < clip_.lo) {
    ++events;
    return clip_.lo;
  }
  if (v > clip_.hi) {
    ++events;
    return clip_.hi;
  }
  return v;
}

double
ConditionalDensity::operator()(std::span<const double> x, double z) const
{
  return clipped(raw(x, z));
}

void
ConditionalDensity::row_mean(const RowMatrix& x, std::span<const double> zs, std::span<double> out) const
{
  const auto n = static_cast<std::size_t>(x.rows());
  const auto d = static_cast<std::size_t>(x.cols());
  std::size_t events = 0;
  for (std::size_t k = 0; k < zs.size(); ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      acc += clipped(raw({x.data() + i * d, d}, zs[k]), events);
    }
    out[k] = n > 0 ? acc / static_cast<double>(n) : 0.0;
  }
  add_clip_events(events);
}

NormalDensity::NormalDensity(double eta0, std::vector<double> eta, double sd, ClipBounds clip)
  : ConditionalDensity(clip)
  , eta0_(eta0)
  , eta_(std::move(eta))
  , sd_(sd)
{}

double
NormalDensity::raw(std::span<const double> x, double z) const
{
  double m = eta0_;
  for (std::size_t k = 0; k < eta_.size(); ++k) {
    m += eta_[k] * x[k];
  }
  const double u = (z - m) / sd_;
  return kInvSqrt2Pi * std::exp(-0.5 * u * u) / sd_;
}

void
NormalDensity::row_mean(const RowMatrix& x, std::span<const double> zs, std::span<double> out) const
{
  const auto n = x.rows();
  Eigen::ArrayXd m = Eigen::ArrayXd::Constant(n, eta0_);
  for (std::size_t k = 0; k < eta_.size(); ++k) {
    m += eta_[k] * x.col(static_cast<Eigen::Index>(k)).array();
  }
  const double lo = clip().lo;
  const double hi = clip().hi;
  const double inv_sd = 1.0 / sd_;
  Eigen::ArrayXd v(n);
  std::size_t events = 0;
  for (std::size_t q = 0; q < zs.size(); ++q) {
    v = (-0.5 * ((zs[q] - m) * inv_sd).square()).exp() * (kInvSqrt2Pi * inv_sd);
    events += static_cast<std::size_t>(((v < lo) || (v > hi)).count());
    out[q] = n > 0 ? v.max(lo).min(hi).mean() : 0.0;
  }
  add_clip_events(events);
}

std::string
NormalDensity::summary() const
{
  return json{{"type", "normal"},
              {"eta0", eta0_},
              {"eta", eta_},
              {"sd", sd_},
              {"clip", {clip().lo, clip().hi}}}
    .dump();
}

UniformDensity::UniformDensity(double lo, double hi, ClipBounds clip)
  : ConditionalDensity(clip)
  , lo_(lo)
  , hi_(hi)
{}

double
UniformDensity::raw(std::span<const double>, double z) const
{
  return (z >= lo_ && z <= hi_) ? 1.0 / (hi_ - lo_) : 0.0;
}

std::string
UniformDensity::summary() const
{
  return json{{"type", "uniform"}, {"lo", lo_}, {"hi", hi_}, {"clip", {clip().lo, clip().hi}}}
    .dump();
}

GriddedKde::GriddedKde(std::span<const double> sample, double bandwidth, std::size_t nodes)
  : bandwidth_(bandwidth)
{
  const auto [mn, mx] = std::minmax_element(sample.begin(), sample.end());
  lo_ = *mn - 4.0 * bandwidth;
  const double hi = *mx + 4.0 * bandwidth;
  step_ = (hi - lo_) / static_cast<double>(nodes - 1);
  values_.assign(nodes, 0.0);
  const double scale = kInvSqrt2Pi / (bandwidth * static_cast<double>(sample.size()));
  for (std::size_t g = 0; g < nodes; ++g) {
    const double e = lo_ + step_ * static_cast<double>(g);
    double acc = 0.0;
    for (const double s : sample) {
      const double u = (e - s) / bandwidth;
      acc += std::exp(-0.5 * u * u);
    }
    values_[g] = acc * scale;
  }
}

double
GriddedKde::operator()(double e) const
{
  const double t = (e - lo_) / step_;
  if (!(t >= 0.0) || t >= static_cast<double>(values_.size() - 1)) {
    return 0.0;
  }
  const auto g = static_cast<std::size_t>(t);
  const double f = t - static_cast<double>(g);
  return (1.0 - f) * values_[g] + f * values_[g + 1];
}

ResidualKdeDensity::ResidualKdeDensity(SurfacePtr mean,
                                       SurfacePtr variance,
                                       GriddedKde kde,
                                       double variance_floor,
                                       ClipBounds clip)
  : ConditionalDensity(clip)
  , mean_(std::move(mean))
  , variance_(std::move(variance))
  , kde_(std::move(kde))
  , floor_(variance_floor)
{}

double
ResidualKdeDensity::scale_at(std::span<const double> x) const
{
  double v = (*variance_)(x, 0.0);
  if (!(v > floor_)) {
    floor_events_.fetch_add(1, std::memory_order_relaxed);
    v = floor_;
  }
  return std::sqrt(v);
}

double
ResidualKdeDensity::raw(std::span<const double> x, double z) const
{
  const double s = scale_at(x);
  return kde_((z - (*mean_)(x, 0.0)) / s) / s;
}

void
ResidualKdeDensity::row_mean(const RowMatrix& x, std::span<const double> zs, std::span<double> out) const
{
  const auto n = static_cast<std::size_t>(x.rows());
  const auto d = static_cast<std::size_t>(x.cols());
  std::vector<double> m(n);
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::span<const double> row(x.data() + i * d, d);
    m[i] = (*mean_)(row, 0.0);
    s[i] = scale_at(row);
  }
  std::size_t events = 0;
  for (std::size_t q = 0; q < zs.size(); ++q) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      acc += clipped(kde_((zs[q] - m[i]) / s[i]) / s[i], events);
    }
    out[q] = n > 0 ? acc / static_cast<double>(n) : 0.0;
  }
  add_clip_events(events);
}

std::string
ResidualKdeDensity::summary() const
{
  return json{{"type", "residual_kde"},
              {"mean", json::parse(mean_->summary())},
              {"variance", json::parse(variance_->summary())},
              {"kde_bandwidth", kde_.bandwidth()},
              {"kde_grid_lo", kde_.lo()},
              {"kde_grid_step", kde_.step()},
              {"kde_values", kde_.values()},
              {"variance_floor", floor_},
              {"clip", {clip().lo, clip().hi}}}
    .dump();
}

} // namespace contiv
