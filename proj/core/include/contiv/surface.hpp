#pragma once

#include "contiv/dataset.hpp"
#include "contiv/dgp.hpp"

#include <atomic>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace contiv {

//! Evaluable function s(x, z) of covariates and instrument. Implementations
//! are immutable after construction and safe to evaluate concurrently.
class Surface
{
public:
  virtual ~Surface() = default;

  virtual double operator()(std::span<const double> x, double z) const = 0;

  //! When s(x, z) = a + b^T x at this z, writes a and b and returns true.
  virtual bool affine_in_x(double z, double& a, std::span<double> b) const;

  //! out[k] = mean over rows i of s(X_i, zs[k]).
  virtual void row_mean(const RowMatrix& x,
                        std::span<const double> zs,
                        std::span<double> out) const;

  //! x -> sum_q weights[q] s(x, nodes[q]) for a fixed node set and
  //! covariate dimension. The functional borrows this surface.
  virtual std::function<double(std::span<const double>)>
  z_functional(std::span<const double> nodes,
               std::span<const double> weights,
               std::size_t dim) const;

  //! JSON text describing the fitted object.
  virtual std::string summary() const = 0;
};

using SurfacePtr = std::shared_ptr<const Surface>;

class ConstantSurface final : public Surface
{
public:
  explicit ConstantSurface(double c)
    : c_(c)
  {}
  double operator()(std::span<const double>, double) const override { return c_; }
  bool affine_in_x(double z, double& a, std::span<double> b) const override;
  std::string summary() const override;

private:
  double c_;
};

//! sum_j z^j (intercept_j + slope_j^T x).
class PolySurface final : public Surface
{
public:
  explicit PolySurface(sim::PolyInZ poly)
    : poly_(std::move(poly))
  {}
  double operator()(std::span<const double> x, double z) const override { return poly_(x, z); }
  bool affine_in_x(double z, double& a, std::span<double> b) const override;
  std::string summary() const override;
  const sim::PolyInZ& poly() const { return poly_; }

private:
  sim::PolyInZ poly_;
};

//! a(z) + b(z)^T x with a, b tabulated on an increasing z grid and linearly
//! interpolated (held constant outside the grid).
class GridAffineSurface final : public Surface
{
public:
  GridAffineSurface(std::vector<double> grid, std::vector<double> a, RowMatrix b);
  double operator()(std::span<const double> x, double z) const override;
  bool affine_in_x(double z, double& a, std::span<double> b) const override;
  std::string summary() const override;

private:
  std::vector<double> grid_;
  std::vector<double> a_;
  RowMatrix b_;
};

//! Gaussian-RBF kernel ridge fit on standardized features. When uses_z is
//! false the surface ignores z (a regression on X only).
class KernelRidgeSurface final : public Surface
{
public:
  KernelRidgeSurface(RowMatrix centers,
                     std::vector<double> alpha,
                     std::vector<double> shift,
                     std::vector<double> scale,
                     double lengthscale,
                     double intercept,
                     double lambda,
                     bool uses_z);
  double operator()(std::span<const double> x, double z) const override;
  void row_mean(const RowMatrix& x,
                std::span<const double> zs,
                std::span<double> out) const override;
  std::function<double(std::span<const double>)>
  z_functional(std::span<const double> nodes,
               std::span<const double> weights,
               std::size_t dim) const override;
  std::string summary() const override;

private:
  double x_factor(std::span<const double> x, std::size_t k) const;
  double z_factor(double z, std::size_t k) const;

  RowMatrix centers_; // standardized; last column is z when uses_z_
  std::vector<double> alpha_;
  std::vector<double> shift_;
  std::vector<double> scale_;
  double lengthscale_;
  double intercept_;
  double lambda_;
  bool uses_z_;
};

struct ClipBounds
{
  double lo = 0.01;
  double hi = 100.0;
};

//! Conditional density pi(z | x) whose values are clipped into [lo, hi].
//! Every clipped evaluation increments a counter.
class ConditionalDensity : public Surface
{
public:
  explicit ConditionalDensity(ClipBounds clip);

  double operator()(std::span<const double> x, double z) const final;
  bool affine_in_x(double, double&, std::span<double>) const final { return false; }
  void row_mean(const RowMatrix& x,
                std::span<const double> zs,
                std::span<double> out) const override;

  //! Unclipped density value.
  virtual double raw(std::span<const double> x, double z) const = 0;

  const ClipBounds& clip() const { return clip_; }
  std::size_t clip_events() const { return clip_events_.load(); }

protected:
  double clipped(double v) const;
  //! Clips without touching the counter; the caller adds its count once.
  double clipped(double v, std::size_t& events) const;
  void add_clip_events(std::size_t k) const { clip_events_.fetch_add(k); }

private:
  ClipBounds clip_;
  mutable std::atomic<std::size_t> clip_events_{0};
};

using DensityPtr = std::shared_ptr<const ConditionalDensity>;

//! N(eta0 + eta^T x, sd^2) density in z.
class NormalDensity final : public ConditionalDensity
{
public:
  NormalDensity(double eta0, std::vector<double> eta, double sd, ClipBounds clip);
  double raw(std::span<const double> x, double z) const override;
  void row_mean(const RowMatrix& x,
                std::span<const double> zs,
                std::span<double> out) const override;
  std::string summary() const override;
  double eta0() const { return eta0_; }
  const std::vector<double>& eta() const { return eta_; }

private:
  double eta0_;
  std::vector<double> eta_;
  double sd_;
};

//! U[lo, hi] density, independent of x.
class UniformDensity final : public ConditionalDensity
{
public:
  UniformDensity(double lo, double hi, ClipBounds clip);
  double raw(std::span<const double> x, double z) const override;
  std::string summary() const override;

private:
  double lo_;
  double hi_;
};

//! Gaussian KDE tabulated on a uniform grid and linearly interpolated; zero
//! outside the grid.
class GriddedKde
{
public:
  GriddedKde() = default;
  GriddedKde(std::span<const double> sample, double bandwidth, std::size_t nodes = 512);
  double operator()(double e) const;
  double bandwidth() const { return bandwidth_; }
  const std::vector<double>& values() const { return values_; }
  double lo() const { return lo_; }
  double step() const { return step_; }

private:
  double bandwidth_ = 0.0;
  double lo_ = 0.0;
  double step_ = 1.0;
  std::vector<double> values_;
};

//! pi(z | x) = g((z - m(x)) / s(x)) / s(x) with g a KDE of standardized
//! residuals and s^2 floored at variance_floor.
class ResidualKdeDensity final : public ConditionalDensity
{
public:
  ResidualKdeDensity(SurfacePtr mean,
                     SurfacePtr variance,
                     GriddedKde kde,
                     double variance_floor,
                     ClipBounds clip);
  double raw(std::span<const double> x, double z) const override;
  void row_mean(const RowMatrix& x,
                std::span<const double> zs,
                std::span<double> out) const override;
  std::string summary() const override;

  //! Number of evaluations where the fitted variance fell below the floor.
  std::size_t variance_floor_events() const { return floor_events_.load(); }
  const GriddedKde& kde() const { return kde_; }

private:
  double scale_at(std::span<const double> x) const;

  SurfacePtr mean_;
  SurfacePtr variance_;
  GriddedKde kde_;
  double floor_;
  mutable std::atomic<std::size_t> floor_events_{0};
};

} // namespace contiv
