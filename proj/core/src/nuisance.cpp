#include "contiv/nuisance.hpp"

#include "contiv/error.hpp"
#include "contiv/random.hpp"

#include <json.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace contiv {

std::string_view
target_name(Target t)
{
  return t == Target::Outcome ? "outcome" : "treatment";
}

} // namespace contiv

namespace contiv::nuisance {

namespace {

using nlohmann::json;

void
require_rows(std::size_t n)
{
  if (n == 0) {
    throw Error(Errc::EmptyFold, "cannot fit on an empty fold");
  }
}

double
mean_of(std::span<const double> v)
{
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double
sd_of(std::span<const double> v)
{
  const double m = mean_of(v);
  double acc = 0.0;
  for (const double e : v) {
    acc += (e - m) * (e - m);
  }
  return v.size() > 1 ? std::sqrt(acc / static_cast<double>(v.size() - 1)) : 0.0;
}

// Least squares by column-pivoted QR; rejects rank-deficient designs.
Eigen::VectorXd
least_squares(const Eigen::MatrixXd& design, const Eigen::VectorXd& response)
{
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < design.cols()) {
    throw Error(Errc::RankDeficientDesign,
                "design has rank " + std::to_string(qr.rank()) + " < " +
                  std::to_string(design.cols()) + " columns");
  }
  return qr.solve(response);
}

SurfacePtr
fit_linear(const RowMatrix& x,
           std::span<const double> z,
           std::span<const double> response,
           const LinearBasis& basis,
           bool uses_z)
{
  const auto n = static_cast<Eigen::Index>(response.size());
  const auto d = x.cols();
  const int deg = uses_z ? std::max(basis.z_degree, 1) : 0;
  const bool inter = uses_z && basis.z_x_interactions;
  const Eigen::Index cols = 1 + d + deg + (inter ? d : 0);
  Eigen::MatrixXd design(n, cols);
  Eigen::VectorXd rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index c = 0;
    design(i, c++) = 1.0;
    for (Eigen::Index k = 0; k < d; ++k) {
      design(i, c++) = x(i, k);
    }
    double zj = 1.0;
    for (int j = 1; j <= deg; ++j) {
      zj *= z[static_cast<std::size_t>(i)];
      design(i, c++) = zj;
    }
    if (inter) {
      for (Eigen::Index k = 0; k < d; ++k) {
        design(i, c++) = z[static_cast<std::size_t>(i)] * x(i, k);
      }
    }
    rhs(i) = response[static_cast<std::size_t>(i)];
  }
  const Eigen::VectorXd coef = least_squares(design, rhs);
  sim::PolyInZ poly;
  poly.intercept.assign(static_cast<std::size_t>(deg + 1), 0.0);
  poly.intercept[0] = coef(0);
  std::vector<double> slope0(static_cast<std::size_t>(d));
  for (Eigen::Index k = 0; k < d; ++k) {
    slope0[static_cast<std::size_t>(k)] = coef(1 + k);
  }
  poly.slope.push_back(std::move(slope0));
  for (int j = 1; j <= deg; ++j) {
    poly.intercept[static_cast<std::size_t>(j)] = coef(d + j);
  }
  if (inter) {
    std::vector<double> slope1(static_cast<std::size_t>(d));
    for (Eigen::Index k = 0; k < d; ++k) {
      slope1[static_cast<std::size_t>(k)] = coef(1 + d + deg + k);
    }
    poly.slope.push_back(std::move(slope1));
  }
  return std::make_shared<PolySurface>(std::move(poly));
}

SurfacePtr
fit_local_linear(const RowMatrix& x,
                 std::span<const double> z,
                 std::span<const double> response,
                 std::size_t grid_size)
{
  const auto n = response.size();
  const auto d = x.cols();
  const Eigen::Index cols = 2 + 2 * d;
  const auto min_local = std::min<std::size_t>(n, static_cast<std::size_t>(30 * cols));
  if (n < static_cast<std::size_t>(cols)) {
    throw Error(Errc::RankDeficientDesign, "fewer rows than local design columns");
  }
  const auto [zmin_it, zmax_it] = std::minmax_element(z.begin(), z.end());
  const double zmin = *zmin_it;
  const double zmax = *zmax_it;
  const double h0 = 1.5 * sd_of(z) * std::pow(static_cast<double>(n), -0.2);
  grid_size = std::max<std::size_t>(grid_size, 2);

  std::vector<double> grid(grid_size);
  std::vector<double> a(grid_size);
  RowMatrix b(static_cast<Eigen::Index>(grid_size), d);
  std::vector<double> dist(n);
  for (std::size_t g = 0; g < grid_size; ++g) {
    const double zg = zmin + (zmax - zmin) * static_cast<double>(g) /
                               static_cast<double>(grid_size - 1);
    grid[g] = zg;
    for (std::size_t i = 0; i < n; ++i) {
      dist[i] = std::abs(z[i] - zg);
    }
    std::vector<double> tmp = dist;
    std::nth_element(tmp.begin(), tmp.begin() + static_cast<std::ptrdiff_t>(min_local - 1), tmp.end());
    const double h = std::max(h0, 1.0001 * tmp[min_local - 1]);

    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < n; ++i) {
      if (dist[i] < h) {
        rows.push_back(i);
      }
    }
    Eigen::MatrixXd design(static_cast<Eigen::Index>(rows.size()), cols);
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto i = rows[r];
      const double u = z[i] - zg;
      const double t = u / h;
      const double sw = std::sqrt(0.75 * (1.0 - t * t));
      const auto ri = static_cast<Eigen::Index>(r);
      design(ri, 0) = sw;
      design(ri, 1 + d) = sw * u;
      for (Eigen::Index k = 0; k < d; ++k) {
        const double xv = x(static_cast<Eigen::Index>(i), k);
        design(ri, 1 + k) = sw * xv;
        design(ri, 2 + d + k) = sw * u * xv;
      }
      rhs(ri) = sw * response[i];
    }
    const Eigen::VectorXd coef = least_squares(design, rhs);
    a[g] = coef(0);
    for (Eigen::Index k = 0; k < d; ++k) {
      b(static_cast<Eigen::Index>(g), k) = coef(1 + k);
    }
  }
  return std::make_shared<GridAffineSurface>(std::move(grid), std::move(a), std::move(b));
}

double
median_pairwise_distance(const Eigen::MatrixXd& f, Eigen::Index m)
{
  std::vector<double> dists;
  dists.reserve(static_cast<std::size_t>(m * (m - 1) / 2));
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      dists.push_back((f.row(i) - f.row(j)).norm());
    }
  }
  if (dists.empty()) {
    return 1.0;
  }
  auto mid = dists.begin() + static_cast<std::ptrdiff_t>(dists.size() / 2);
  std::nth_element(dists.begin(), mid, dists.end());
  return *mid > 0.0 ? *mid : 1.0;
}

Eigen::MatrixXd
rbf_gram(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double ell)
{
  Eigen::MatrixXd g(a.rows(), b.rows());
  const double inv = 0.5 / (ell * ell);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      g(i, j) = std::exp(-inv * (a.row(i) - b.row(j)).squaredNorm());
    }
  }
  return g;
}

SurfacePtr
fit_kernel_ridge(const RowMatrix& x,
                 std::span<const double> z,
                 std::span<const double> response,
                 std::size_t max_centers,
                 bool uses_z)
{
  const auto n = response.size();
  const auto d = static_cast<std::size_t>(x.cols());
  const std::size_t p = d + (uses_z ? 1 : 0);
  const auto m = static_cast<Eigen::Index>(std::min(n, std::max<std::size_t>(max_centers, 10)));

  std::vector<double> shift(p);
  std::vector<double> scale(p);
  Eigen::MatrixXd f(m, static_cast<Eigen::Index>(p));
  for (std::size_t k = 0; k < p; ++k) {
    std::vector<double> col(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i) {
      col[static_cast<std::size_t>(i)] =
        k < d ? x(i, static_cast<Eigen::Index>(k)) : z[static_cast<std::size_t>(i)];
    }
    shift[k] = mean_of(col);
    const double s = sd_of(col);
    scale[k] = s > 0.0 ? s : 1.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      f(i, static_cast<Eigen::Index>(k)) = (col[static_cast<std::size_t>(i)] - shift[k]) / scale[k];
    }
  }
  Eigen::VectorXd y(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    y(i) = response[static_cast<std::size_t>(i)];
  }
  const double intercept = y.mean();
  y.array() -= intercept;

  const double ell0 = median_pairwise_distance(f, std::min<Eigen::Index>(m, 300));
  const std::vector<double> ell_grid{0.5 * ell0, ell0, 2.0 * ell0};
  const std::vector<double> lambda_grid{1e-3, 1e-2, 1e-1};

  double best_ell = ell0;
  double best_lambda = 1e-2;
  const Eigen::Index m_train = (m * 4) / 5;
  if (m_train >= 10 && m - m_train >= 5) {
    const Eigen::MatrixXd ft = f.topRows(m_train);
    const Eigen::MatrixXd fv = f.bottomRows(m - m_train);
    const Eigen::VectorXd yt = y.head(m_train);
    const Eigen::VectorXd yv = y.tail(m - m_train);
    double best = std::numeric_limits<double>::infinity();
    for (const double ell : ell_grid) {
      const Eigen::MatrixXd kt = rbf_gram(ft, ft, ell);
      const Eigen::MatrixXd kv = rbf_gram(fv, ft, ell);
      for (const double lam : lambda_grid) {
        Eigen::MatrixXd reg = kt;
        reg.diagonal().array() += lam * static_cast<double>(m_train);
        Eigen::LLT<Eigen::MatrixXd> llt(reg);
        if (llt.info() != Eigen::Success) {
          continue;
        }
        const double err = (kv * llt.solve(yt) - yv).squaredNorm();
        if (err < best) {
          best = err;
          best_ell = ell;
          best_lambda = lam;
        }
      }
    }
  }
  Eigen::MatrixXd k = rbf_gram(f, f, best_ell);
  k.diagonal().array() += best_lambda * static_cast<double>(m);
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) {
    throw Error(Errc::RankDeficientDesign, "kernel ridge system not positive definite");
  }
  const Eigen::VectorXd alpha = llt.solve(y);
  RowMatrix centers = f;
  return std::make_shared<KernelRidgeSurface>(std::move(centers),
                                              std::vector<double>(alpha.data(), alpha.data() + m),
                                              std::move(shift),
                                              std::move(scale),
                                              best_ell,
                                              intercept,
                                              best_lambda,
                                              uses_z);
}

} // namespace

Learner
learner_from_name(std::string_view name, LearnerOptions& options)
{
  if (name == "linear") {
    options.basis = {1, false};
    return Learner::Linear;
  }
  if (name == "linear-cubic") {
    options.basis = {3, true};
    return Learner::Linear;
  }
  if (name == "local-linear") {
    return Learner::LocalLinearInZ_LinearInX;
  }
  if (name == "kernel-ridge") {
    return Learner::KernelRidge;
  }
  throw Error(Errc::UnknownLearner, "unknown learner '" + std::string(name) + "'");
}

std::string_view
learner_name(Learner learner)
{
  switch (learner) {
    case Learner::Linear:
      return "linear";
    case Learner::LocalLinearInZ_LinearInX:
      return "local-linear";
    case Learner::KernelRidge:
      return "kernel-ridge";
  }
  return "unknown";
}

SurfacePtr
fit_regression(const Dataset& fold, Target target, Learner learner, const LearnerOptions& options)
{
  require_rows(fold.size());
  const auto& w = target == Target::Outcome ? fold.y() : fold.a();
  switch (learner) {
    case Learner::Linear:
      return fit_linear(fold.x(), fold.z(), w, options.basis, true);
    case Learner::LocalLinearInZ_LinearInX:
      return fit_local_linear(fold.x(), fold.z(), w, options.local_grid);
    case Learner::KernelRidge:
      return fit_kernel_ridge(fold.x(), fold.z(), w, options.ridge_max_centers, true);
  }
  throw Error(Errc::UnknownLearner, "unsupported learner");
}

SurfacePtr
fit_covariate_regression(const RowMatrix& x,
                         std::span<const double> response,
                         Learner learner,
                         const LearnerOptions& options)
{
  require_rows(response.size());
  switch (learner) {
    case Learner::Linear:
      return fit_linear(x, {}, response, options.basis, false);
    case Learner::KernelRidge:
      return fit_kernel_ridge(x, {}, response, options.ridge_max_centers, false);
    case Learner::LocalLinearInZ_LinearInX:
      break;
  }
  throw Error(Errc::UnknownLearner, "learner is not available for regressions on X alone");
}

double
silverman_bandwidth(std::span<const double> sample)
{
  std::vector<double> v(sample.begin(), sample.end());
  const double sd = sd_of(sample);
  const double iqr = quantile(v, 0.75) - quantile(v, 0.25);
  double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  if (!(spread > 0.0)) {
    spread = 1.0;
  }
  return 0.9 * spread * std::pow(static_cast<double>(sample.size()), -0.2);
}

DensityPtr
fit_propensity_residual_kde(const Dataset& fold,
                            Learner mean_learner,
                            Learner var_learner,
                            ClipBounds clip,
                            const LearnerOptions& options)
{
  require_rows(fold.size());
  if (fold.size() < 50) {
    throw Error(Errc::EmptyFold, "residual KDE needs at least 50 rows, got " +
                                   std::to_string(fold.size()));
  }
  const auto n = fold.size();
  const auto d = fold.dim();
  auto mean = fit_covariate_regression(fold.x(), fold.z(), mean_learner, options);
  std::vector<double> resid(n);
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) {
    resid[i] = fold.z()[i] - (*mean)(fold.row(i), 0.0);
    sq[i] = resid[i] * resid[i];
  }
  auto variance = fit_covariate_regression(fold.x(), sq, var_learner, options);
  std::vector<double> std_resid(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = std::max((*variance)(fold.row(i), 0.0), kVarianceFloor);
    std_resid[i] = resid[i] / std::sqrt(v);
  }
  (void)d;
  GriddedKde kde(std_resid, silverman_bandwidth(std_resid));
  return std::make_shared<ResidualKdeDensity>(std::move(mean), std::move(variance), std::move(kde),
                                              kVarianceFloor, clip);
}

std::string
NuisanceFit::summary() const
{
  json j;
  j["pi_hat"] = pi_hat ? json::parse(pi_hat->summary()) : json();
  j["mu_hat"] = mu_hat ? json::parse(mu_hat->summary()) : json();
  j["lambda_hat"] = lambda_hat ? json::parse(lambda_hat->summary()) : json();
  j["clip"] = {clip.lo, clip.hi};
  j["training_rows"] = training.is_external() ? json("external")
                                              : json(training.rows().size());
  j["clip_events"] = pi_hat ? pi_hat->clip_events() : 0;
  return j.dump();
}

MarginalFit::MarginalFit(NuisanceFit nuisance, const Dataset& fold)
  : nuisance_(std::move(nuisance))
  , x_(fold.x())
  , source_(fold.provenance())
{
  if (nuisance_.training.overlaps(source_)) {
    throw Error(Errc::FoldOverlap, "marginal fold shares rows with the nuisance training fold");
  }
  require_rows(fold.size());
}

double
MarginalFit::f_hat(double z) const
{
  double out = 0.0;
  nuisance_.pi_hat->row_mean(x_, {&z, 1}, {&out, 1});
  return out;
}

double
MarginalFit::tau0_hat(double z) const
{
  double out = 0.0;
  nuisance_.mu_hat->row_mean(x_, {&z, 1}, {&out, 1});
  return out;
}

double
MarginalFit::lambda0_hat(double z) const
{
  double out = 0.0;
  nuisance_.lambda_hat->row_mean(x_, {&z, 1}, {&out, 1});
  return out;
}

std::vector<double>
MarginalFit::f_hat(std::span<const double> zs) const
{
  std::vector<double> out(zs.size());
  nuisance_.pi_hat->row_mean(x_, zs, out);
  return out;
}

std::vector<double>
MarginalFit::initial(Target t, std::span<const double> zs) const
{
  std::vector<double> out(zs.size());
  nuisance_.regression(t).row_mean(x_, zs, out);
  return out;
}

MarginalFit
marginals_from(const NuisanceFit& nuisance, const Dataset& fold)
{
  return MarginalFit(nuisance, fold);
}

NuisanceFit
fit_nuisances(const Dataset& fold, const LearnedSpec& spec)
{
  NuisanceFit out;
  out.pi_hat = fit_propensity_residual_kde(fold, spec.pi_mean, spec.pi_variance, spec.clip, spec.options);
  out.mu_hat = fit_regression(fold, Target::Outcome, spec.regression, spec.options);
  out.lambda_hat = fit_regression(fold, Target::Treatment, spec.regression, spec.options);
  out.training = fold.provenance();
  out.clip = spec.clip;
  return out;
}

namespace {

DensityPtr
propensity_of(const sim::DgpSpec& t, double eta_shift, double scale, ClipBounds clip)
{
  if (t.z_law == sim::InstrumentLaw::Uniform) {
    return std::make_shared<UniformDensity>(t.z_lo * scale, t.z_hi * scale, clip);
  }
  std::vector<double> eta = t.eta;
  for (auto& e : eta) {
    e *= scale;
  }
  return std::make_shared<NormalDensity>(scale * t.eta0 + eta_shift, std::move(eta), t.z_sd, clip);
}

sim::PolyInZ
scaled(sim::PolyInZ p, double c)
{
  for (auto& v : p.intercept) {
    v *= c;
  }
  for (auto& s : p.slope) {
    for (auto& v : s) {
      v *= c;
    }
  }
  return p;
}

} // namespace

NuisanceFit
true_nuisance(const sim::DgpSpec& truth, ClipBounds clip)
{
  NuisanceFit out;
  out.pi_hat = propensity_of(truth, 0.0, 1.0, clip);
  out.mu_hat = std::make_shared<PolySurface>(truth.mu);
  out.lambda_hat = std::make_shared<PolySurface>(truth.lambda);
  out.clip = clip;
  return out;
}

NuisanceFit
synthetic_nuisance(const sim::DgpSpec& truth,
                   double alpha,
                   std::size_t n,
                   std::uint64_t seed,
                   ClipBounds clip)
{
  if (!(alpha >= 0.0)) {
    throw Error(Errc::InvalidRate, "alpha must be non-negative");
  }
  if (n == 0) {
    throw Error(Errc::InvalidRate, "n must be positive");
  }
  const double s = std::pow(static_cast<double>(n), -alpha);
  Rng rng(seed);
  const double d_eta = rng.normal(s, s);
  const double d_lambda = rng.normal(s, s);
  const double d_mu = rng.normal(s, s);

  NuisanceFit out;
  out.pi_hat = propensity_of(truth, d_eta, 1.0, clip);
  sim::PolyInZ lambda = truth.lambda;
  if (lambda.intercept.empty()) {
    lambda.intercept.push_back(0.0);
  }
  lambda.intercept[0] += d_lambda;
  sim::PolyInZ mu = truth.mu;
  if (!mu.intercept.empty()) {
    mu.intercept.back() *= 1.0 + d_mu;
  }
  out.mu_hat = std::make_shared<PolySurface>(std::move(mu));
  out.lambda_hat = std::make_shared<PolySurface>(std::move(lambda));
  out.clip = clip;
  return out;
}

NuisanceFit
misspecified_nuisance(const sim::DgpSpec& truth, Misspecify which, ClipBounds clip)
{
  NuisanceFit out = true_nuisance(truth, clip);
  if (which == Misspecify::Propensity) {
    out.pi_hat = propensity_of(truth, 0.0, 2.0, clip);
  } else {
    out.mu_hat = std::make_shared<PolySurface>(scaled(truth.mu, 2.0));
    out.lambda_hat = std::make_shared<PolySurface>(scaled(truth.lambda, 2.0));
  }
  return out;
}

NuisanceFactory
learned_factory(LearnedSpec spec)
{
  return [spec = std::move(spec)](const Dataset& fold) { return fit_nuisances(fold, spec); };
}

NuisanceFactory
fixed_factory(NuisanceFit fit)
{
  return [fit = std::move(fit)](const Dataset&) { return fit; };
}

} // namespace contiv::nuisance
