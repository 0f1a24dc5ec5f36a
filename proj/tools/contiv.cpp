// contiv: command-line front end for dose-response derivative, LIV and
// complier estimation and the simulation harness.

#include "contiv/bandwidth.hpp"
#include "contiv/dgp.hpp"
#include "contiv/effects.hpp"
#include "contiv/error.hpp"
#include "contiv/io.hpp"
#include "contiv/kernels.hpp"
#include "contiv/nuisance.hpp"
#include "contiv/parallel.hpp"
#include "contiv/pseudo.hpp"
#include "contiv/random.hpp"
#include "contiv/sim.hpp"
#include "contiv/smooth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#ifndef CONTIV_VERSION
#define CONTIV_VERSION "0.0.0"
#endif

using namespace contiv;
using json = nlohmann::ordered_json;

namespace {

constexpr int kManifestSchema = 1;

//! Options shared by the estimation commands.
struct DataOptions
{
  std::string input;
  std::string dgp;
  std::size_t n = 2000;
  std::string treatment = "binary";
  std::string nuisance = "learned";
  std::string learner = "linear-cubic";
  double alpha = 0.1;
};

struct Common
{
  std::uint64_t seed = 0;
  std::size_t jobs = 0;
  std::string output;
  std::string manifest;
  std::string format = "csv";
};

struct CurveOptions
{
  std::string method = "localpoly";
  std::string target = "outcome";
  std::string quantity = "derivative";
  std::string kernel = "epanechnikov";
  int p = 2;
  int p_a = 0;
  std::string h = "auto";
  std::string h_a;
  std::string grid;
  std::vector<double> candidates;
  bool no_rotate = false;
  std::string route = "influence";
  double relevance_z = 0.0;
  std::string risk_output;
};

struct LateOptions
{
  int p = 1;
  double h = 0.3;
  std::string kernel = "epanechnikov";
  bool rescale = true;
};

struct SimOptions
{
  std::vector<std::string> dgps = {"liv_main"};
  std::vector<std::string> estimators = {"localpoly", "smooth", "projection-linear"};
  std::vector<std::size_t> ns = {2000};
  std::vector<double> alphas = {0.1, 0.45};
  std::size_t S = 100;
  std::string nuisance = "synthetic";
  double lp_h_y = 1.6;
  double lp_h_a = 4.0;
  int lp_p = 2;
  int lp_p_a = 1;
  double sm_h_y = 0.4;
  double sm_h_a = 3.0;
  std::string sm_kernel = "gaussian4";
  double exponent = 0.0;
  std::size_t grid_points = 50;
  std::string replications;
};

std::string
timestamp()
{
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json
number(double v)
{
  return std::isfinite(v) ? json(v) : json(nullptr);
}

//! Options of a subcommand as given (defaults included), keyed by long name.
json
config_echo(const CLI::App& sub)
{
  json out = json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "config") {
      continue;
    }
    auto values = opt->results();
    if (values.empty()) {
      const std::string d = opt->get_default_str();
      if (d.empty()) {
        if (opt->get_expected_min() == 0) {
          out[name] = false;
        }
        continue;
      }
      values = {d};
    }
    if (opt->get_expected_min() == 0) {
      out[name] = opt->count() > 0;
    } else if (values.size() == 1) {
      out[name] = values.front();
    } else {
      out[name] = values;
    }
  }
  return out;
}

class Manifest
{
public:
  Manifest(const CLI::App& sub, const Common& common)
    : started_(std::chrono::steady_clock::now())
  {
    doc_["schema_version"] = kManifestSchema;
    doc_["tool"] = "contiv";
    doc_["version"] = CONTIV_VERSION;
    doc_["command"] = sub.get_name();
    doc_["seed"] = common.seed;
    doc_["jobs"] = default_jobs();
    doc_["config"] = config_echo(sub);
    doc_["config_ini"] = sub.config_to_str(true, false);
    doc_["started"] = timestamp();
    doc_["outputs"] = json::array();
    path_ = common.manifest.empty() ? common.output + ".manifest.json" : common.manifest;
  }

  json& operator[](const char* key) { return doc_[key]; }

  void add_output(const std::string& path) { doc_["outputs"].push_back(path); }

  void write()
  {
    doc_["finished"] = timestamp();
    doc_["seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
    std::ofstream out(path_);
    if (!out) {
      throw Error(Errc::InvalidConfig, "cannot write manifest '" + path_ + "'");
    }
    out << doc_.dump(2) << '\n';
  }

private:
  json doc_;
  std::string path_;
  std::chrono::steady_clock::time_point started_;
};

std::ofstream
open_output(const std::string& path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(Errc::InvalidConfig, "cannot write output '" + path + "'");
  }
  return out;
}

//! Data and the nuisance factory from --input or --dgp.
struct Loaded
{
  Dataset data;
  nuisance::NuisanceFactory factory;
  std::optional<sim::DgpSpec> dgp;
};

Loaded
load(const DataOptions& o, std::uint64_t seed)
{
  if (o.input.empty() == o.dgp.empty()) {
    throw Error(Errc::InvalidConfig, "give exactly one of --input and --dgp");
  }
  Loaded out;
  if (!o.input.empty()) {
    io::IngestOptions ingest;
    if (o.treatment == "binary") {
      ingest.treatment = io::TreatmentKind::Binary;
    } else if (o.treatment == "continuous") {
      ingest.treatment = io::TreatmentKind::Continuous;
    } else {
      throw Error(Errc::InvalidConfig, "--treatment must be binary or continuous");
    }
    out.data = io::ingest_csv(o.input, ingest);
  } else {
    out.dgp = sim::dgp_from_name(o.dgp, o.n, derive_seed(seed, {0x6E}));
    out.data = sim::generate(*out.dgp);
  }
  if (o.nuisance == "learned") {
    nuisance::LearnedSpec spec;
    spec.regression = nuisance::learner_from_name(o.learner, spec.options);
    out.factory = nuisance::learned_factory(spec);
  } else if (o.nuisance == "true" || o.nuisance == "synthetic") {
    if (!out.dgp) {
      throw Error(Errc::InvalidConfig, "--nuisance " + o.nuisance + " needs --dgp");
    }
    out.factory = nuisance::fixed_factory(
      o.nuisance == "true" ? nuisance::true_nuisance(*out.dgp)
                           : nuisance::synthetic_nuisance(*out.dgp, o.alpha, o.n, derive_seed(seed, {0x5A})));
  } else {
    throw Error(Errc::InvalidConfig, "--nuisance must be learned, true or synthetic");
  }
  return out;
}

//! "lo:hi:n"; empty means 50 points between the 5% and 95% quantiles of z.
std::vector<double>
parse_grid(const std::string& spec, std::span<const double> z)
{
  if (spec.empty()) {
    return pseudo::default_grid(z, 50);
  }
  double lo = 0.0;
  double hi = 0.0;
  std::size_t n = 0;
  char c1 = 0;
  char c2 = 0;
  std::istringstream in(spec);
  if (!(in >> lo >> c1 >> hi >> c2 >> n) || c1 != ':' || c2 != ':' || n < 1 || !(hi >= lo) || !in.eof()) {
    throw Error(Errc::InvalidConfig, "--grid must look like lo:hi:n, got '" + spec + "'");
  }
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return g;
}

Target
target_from(const std::string& s)
{
  if (s == "outcome") {
    return Target::Outcome;
  }
  if (s == "treatment") {
    return Target::Treatment;
  }
  throw Error(Errc::InvalidConfig, "--target must be outcome or treatment");
}

double
parse_h(const std::string& s)
{
  std::size_t used = 0;
  double h = 0.0;
  try {
    h = std::stod(s, &used);
  } catch (const std::exception&) {
    throw Error(Errc::InvalidConfig, "bandwidth must be a number or auto, got '" + s + "'");
  }
  if (used != s.size()) {
    throw Error(Errc::InvalidConfig, "bandwidth must be a number or auto, got '" + s + "'");
  }
  require_bandwidth(h);
  return h;
}

//! Resolves "auto" through the pseudo-risk selector; records the choice.
double
resolve_h(const std::string& h,
          const Loaded& in,
          Target target,
          effects::Method method,
          int p,
          const KernelSpec& kernel,
          const CurveOptions& c,
          std::uint64_t seed,
          Manifest& manifest,
          const char* key)
{
  if (h != "auto") {
    return parse_h(h);
  }
  bandwidth::SelectConfig cfg;
  cfg.method = method;
  cfg.target = target;
  cfg.p = p;
  cfg.kernel = kernel;
  cfg.nuisance = in.factory;
  cfg.rotate = !c.no_rotate;
  cfg.seed = derive_seed(seed, {0xB0, static_cast<std::uint64_t>(target)});
  const auto candidates = c.candidates.empty() ? bandwidth::default_candidates(in.data.z()) : c.candidates;
  const auto table = bandwidth::select(in.data, candidates, cfg);
  manifest["bandwidth"][key] = {{"rule", "auto"},
                                {"chosen_h", table.chosen_h()},
                                {"candidates", table.candidates},
                                {"risk_hat", table.risk_hat}};
  if (!c.risk_output.empty()) {
    const std::string path = c.risk_output + (target == Target::Outcome ? "" : ".treatment.csv");
    auto out = open_output(path);
    bandwidth::write_risk_csv(out, table);
    manifest.add_output(path);
  }
  return table.chosen_h();
}

json
curve_json(const pseudo::CurveEstimate& c, pseudo::Quantity q)
{
  json pts = json::array();
  for (const auto& p : c.points) {
    const double est = q == pseudo::Quantity::Value ? p.value : p.derivative;
    const double se = q == pseudo::Quantity::Value ? p.value_se : p.derivative_se;
    pts.push_back({{"z0", p.z0},
                   {"estimate", number(est)},
                   {"stderr", number(se)},
                   {"ci_lo", number(est - 1.959963984540054 * se)},
                   {"ci_hi", number(est + 1.959963984540054 * se)},
                   {"n_local", p.n_local},
                   {"flag", p.flag}});
  }
  return {{"target", std::string(target_name(c.target))},
          {"method", c.method},
          {"quantity", q == pseudo::Quantity::Value ? "value" : "derivative"},
          {"h", c.h},
          {"p", c.p},
          {"kernel", c.kernel},
          {"points", pts}};
}

json
liv_json(const effects::LivCurve& c)
{
  json pts = json::array();
  for (const auto& p : c.points) {
    pts.push_back({{"z0", p.z0},
                   {"gamma", number(p.gamma)},
                   {"stderr", number(p.stderr)},
                   {"ci_lo", number(p.gamma - 1.959963984540054 * p.stderr)},
                   {"ci_hi", number(p.gamma + 1.959963984540054 * p.stderr)},
                   {"theta_y", number(p.theta_y)},
                   {"theta_a", number(p.theta_a)},
                   {"flag", p.flag}});
  }
  return {{"method", std::string(effects::method_name(c.method))}, {"points", pts}};
}

void
check_format(const std::string& f)
{
  if (f != "csv" && f != "json") {
    throw Error(Errc::InvalidConfig, "--format must be csv or json");
  }
}

int
run_generate(const CLI::App& sub, const Common& common, const std::string& dgp_name, std::size_t n)
{
  Manifest manifest(sub, common);
  const auto dgp = sim::dgp_from_name(dgp_name, n, common.seed);
  const auto data = sim::generate(dgp);
  auto out = open_output(common.output);
  io::write_csv(out, data);
  manifest.add_output(common.output);
  manifest["rows"] = data.size();
  manifest.write();
  return 0;
}

int
run_estimate_curve(const CLI::App& sub, const Common& common, const DataOptions& d, const CurveOptions& c)
{
  check_format(common.format);
  Manifest manifest(sub, common);
  const auto in = load(d, common.seed);
  const Target target = target_from(c.target);
  const auto method = effects::method_from_name(c.method);
  const auto kernel = kernel_from_name(c.kernel);
  pseudo::Quantity quantity;
  if (c.quantity == "derivative") {
    quantity = pseudo::Quantity::Derivative;
  } else if (c.quantity == "value") {
    quantity = pseudo::Quantity::Value;
    if (method == effects::Method::Smooth) {
      throw Error(Errc::InvalidConfig, "the smooth method estimates derivatives only");
    }
  } else {
    throw Error(Errc::InvalidConfig, "--quantity must be value or derivative");
  }
  const auto grid = parse_grid(c.grid, in.data.z());
  const double h = resolve_h(c.h, in, target, method, c.p, kernel, c, common.seed, manifest, "h");
  manifest["h"] = h;
  const std::uint64_t plan_seed = derive_seed(common.seed, {0xC0});

  pseudo::CurveEstimate curve;
  if (method == effects::Method::LocalPoly) {
    pseudo::CrossfitConfig cfg;
    cfg.curve = {c.p, h, kernel, false};
    cfg.nuisance = in.factory;
    cfg.rotate = !c.no_rotate;
    cfg.seed = plan_seed;
    curve = pseudo::crossfit_curve(in.data, target, cfg, grid);
  } else {
    const auto plan = pseudo::make_plan(in.data, in.factory, plan_seed, !c.no_rotate);
    curve = smooth::crossfit_smooth(plan, target, grid, h, kernel);
  }
  auto out = open_output(common.output);
  if (common.format == "csv") {
    pseudo::write_curve_csv(out, curve, quantity);
  } else {
    out << curve_json(curve, quantity).dump(2) << '\n';
  }
  manifest.add_output(common.output);
  manifest["rows"] = in.data.size();
  manifest.write();
  return 0;
}

int
run_estimate_liv(const CLI::App& sub, const Common& common, const DataOptions& d, const CurveOptions& c)
{
  check_format(common.format);
  Manifest manifest(sub, common);
  const auto in = load(d, common.seed);
  const auto method = effects::method_from_name(c.method);
  const auto kernel = kernel_from_name(c.kernel);
  const auto grid = parse_grid(c.grid, in.data.z());

  effects::LivConfig cfg;
  cfg.method = method;
  cfg.p = c.p;
  cfg.p_a = c.p_a;
  cfg.kernel = kernel;
  cfg.nuisance = in.factory;
  cfg.rotate = !c.no_rotate;
  cfg.seed = derive_seed(common.seed, {0xC0});
  if (c.relevance_z < 0.0) {
    throw Error(Errc::InvalidConfig, "--relevance-z must be non-negative");
  }
  cfg.relevance_z = c.relevance_z;
  if (c.route == "influence") {
    cfg.route = effects::VarianceRoute::InfluenceExpansion;
  } else if (c.route == "rate-aware") {
    cfg.route = effects::VarianceRoute::RateAware;
  } else {
    throw Error(Errc::InvalidConfig, "--route must be influence or rate-aware");
  }
  cfg.h_y = resolve_h(c.h, in, Target::Outcome, method, c.p, kernel, c, common.seed, manifest, "h_y");
  const std::string h_a = c.h_a.empty() ? c.h : c.h_a;
  cfg.h_a = h_a == c.h && h_a != "auto"
              ? cfg.h_y
              : resolve_h(h_a, in, Target::Treatment, method, cfg.p_a > 0 ? cfg.p_a : cfg.p, kernel, c, common.seed,
                          manifest, "h_a");
  manifest["h_y"] = cfg.h_y;
  manifest["h_a"] = cfg.h_a;

  const auto curve = effects::liv_curve(in.data, grid, cfg);
  auto out = open_output(common.output);
  if (common.format == "csv") {
    effects::write_liv_csv(out, curve);
  } else {
    out << liv_json(curve).dump(2) << '\n';
  }
  manifest.add_output(common.output);
  manifest["rows"] = in.data.size();
  manifest.write();
  return 0;
}

int
run_estimate_late(const CLI::App& sub, const Common& common, const DataOptions& d, const LateOptions& l, bool no_rotate)
{
  check_format(common.format);
  Manifest manifest(sub, common);
  const auto in = load(d, common.seed);
  Dataset data = in.data;
  if (l.rescale) {
    auto r = effects::rescale_unit(in.data);
    manifest["instrument_range"] = {r.lo, r.hi};
    data = std::move(r.data);
  }
  effects::ComplierConfig cfg;
  cfg.p = l.p;
  cfg.h = l.h;
  cfg.kernel = kernel_from_name(l.kernel);
  cfg.nuisance = in.factory;
  cfg.rotate = !no_rotate;
  cfg.seed = derive_seed(common.seed, {0xC0});
  const auto res = effects::maximal_complier(data, cfg);
  auto out = open_output(common.output);
  if (common.format == "json") {
    out << res.to_json() << '\n';
  } else {
    char buf[256];
    auto row = [&](const char* q, double est, double se, effects::Interval ci) {
      std::snprintf(buf, sizeof buf, "%s,%.10g,%.10g,%.10g,%.10g,%s\n", q, est, se, ci.lo, ci.hi, res.flag.c_str());
      out << buf;
    };
    out << "quantity,estimate,stderr,ci_lo,ci_hi,flag\n";
    row("proportion", res.proportion, res.proportion_se, res.proportion_ci);
    row("late", res.late, res.late_se, res.late_ci);
  }
  manifest.add_output(common.output);
  manifest["rows"] = data.size();
  manifest.write();
  return 0;
}

int
run_select(const CLI::App& sub, const Common& common, const DataOptions& d, const CurveOptions& c)
{
  Manifest manifest(sub, common);
  const auto in = load(d, common.seed);
  bandwidth::SelectConfig cfg;
  cfg.method = effects::method_from_name(c.method);
  cfg.target = target_from(c.target);
  cfg.p = c.p;
  cfg.kernel = kernel_from_name(c.kernel);
  cfg.nuisance = in.factory;
  cfg.rotate = !c.no_rotate;
  cfg.seed = derive_seed(common.seed, {0xB0, static_cast<std::uint64_t>(cfg.target)});
  const auto candidates = c.candidates.empty() ? bandwidth::default_candidates(in.data.z()) : c.candidates;
  const auto table = bandwidth::select(in.data, candidates, cfg);
  auto out = open_output(common.output);
  bandwidth::write_risk_csv(out, table);
  manifest.add_output(common.output);
  manifest["bandwidth"]["h"] = {{"rule", "auto"},
                                {"chosen_h", table.chosen_h()},
                                {"candidates", table.candidates},
                                {"risk_hat", table.risk_hat}};
  manifest["h"] = table.chosen_h();
  manifest.write();
  return 0;
}

int
run_simulate(const CLI::App& sub, const Common& common, const SimOptions& s)
{
  Manifest manifest(sub, common);
  sim::SimConfig cfg;
  cfg.dgps = s.dgps;
  cfg.estimators.clear();
  for (const auto& e : s.estimators) {
    cfg.estimators.push_back(sim::estimator_from_name(e));
  }
  cfg.ns = s.ns;
  cfg.alphas = s.alphas;
  cfg.S = s.S;
  cfg.seed = common.seed;
  if (s.nuisance == "synthetic") {
    cfg.nuisance = sim::NuisanceMode::Synthetic;
  } else if (s.nuisance == "true") {
    cfg.nuisance = sim::NuisanceMode::True;
  } else {
    throw Error(Errc::InvalidConfig, "--nuisance must be synthetic or true for simulate");
  }
  cfg.local_poly = {s.lp_h_y, s.lp_h_a, s.exponent, s.lp_p, s.lp_p_a, KernelSpec::epanechnikov()};
  cfg.smooth = {s.sm_h_y, s.sm_h_a, s.exponent, 0, 0, kernel_from_name(s.sm_kernel)};
  cfg.grid_points = s.grid_points;
  cfg.keep_replications = !s.replications.empty();
  const auto results = sim::run_grid(cfg);

  auto out = open_output(common.output);
  sim::write_results_csv(out, results, false);
  manifest.add_output(common.output);
  if (!s.replications.empty()) {
    auto rep = open_output(s.replications);
    sim::write_replications_csv(rep, results);
    manifest.add_output(s.replications);
  }
  json cells = json::array();
  for (const auto& r : results) {
    cells.push_back({{"dgp", r.dgp},
                     {"estimator", std::string(sim::estimator_name(r.estimator))},
                     {"n", r.n},
                     {"alpha", r.alpha},
                     {"h_rule", r.h_rule},
                     {"seconds", r.seconds},
                     {"failures", r.failures},
                     {"last_error", r.last_error}});
  }
  manifest["cells"] = cells;
  manifest["truncation"] = {cfg.trim_lo, cfg.trim_hi};
  manifest.write();
  return 0;
}

void
report(int status, std::string_view code, const std::string& message)
{
  json err = {{"error", {{"code", code}, {"status", status}, {"message", message}}}};
  std::cerr << err.dump() << '\n';
}

void
add_data_options(CLI::App* sub, DataOptions& d)
{
  sub->add_option("--input", d.input, "CSV with columns x1..xd, z, a, y");
  sub->add_option("--dgp", d.dgp, "Simulate the data from a named design instead");
  sub->add_option("--n", d.n, "Sample size for --dgp")->capture_default_str();
  sub->add_option("--treatment", d.treatment, "binary or continuous")->capture_default_str();
  sub->add_option("--nuisance", d.nuisance, "learned, true or synthetic (the last two need --dgp)")
    ->capture_default_str();
  sub->add_option("--learner", d.learner, "linear, linear-cubic, local-linear or kernel-ridge")->capture_default_str();
  sub->add_option("--alpha", d.alpha, "Synthetic nuisance rate")->capture_default_str();
}

void
add_common(CLI::App* sub, Common& c, bool format)
{
  sub->add_option("--seed", c.seed, "Seed for every random stream")->capture_default_str();
  sub->add_option("--jobs", c.jobs, "Worker threads (0 = CONTIV_JOBS or all cores)")->capture_default_str();
  sub->add_option("--output", c.output, "Output file")->required();
  sub->add_option("--manifest", c.manifest, "Manifest path (default: output + .manifest.json)");
  if (format) {
    sub->add_option("--format", c.format, "csv or json")->capture_default_str();
  }
}

void
add_curve_options(CLI::App* sub, CurveOptions& c, bool liv)
{
  sub->add_option("--method", c.method, "localpoly or smooth")->capture_default_str();
  sub->add_option("--kernel", c.kernel, "epanechnikov, gaussian, gaussian4, gaussian6, ...")->capture_default_str();
  sub->add_option("--p", c.p, "Local polynomial degree")->capture_default_str();
  sub->add_option("--h", c.h, "Bandwidth or auto")->capture_default_str();
  sub->add_option("--candidates", c.candidates, "Bandwidth candidates for auto")->delimiter(',');
  sub->add_option("--risk-output", c.risk_output, "Write the risk table of auto selection here");
  sub->add_flag("--no-rotate", c.no_rotate, "Use a single cross-fitting rotation");
  sub->add_option("--grid", c.grid, "lo:hi:n (default: 50 points over the 5%-95% range of z)");
  if (liv) {
    sub->add_option("--p-a", c.p_a, "Treatment-curve degree (0 = --p)")->capture_default_str();
    sub->add_option("--h-a", c.h_a, "Treatment-curve bandwidth (default: --h)");
    sub->add_option("--route", c.route, "influence or rate-aware standard errors")->capture_default_str();
    sub->add_option("--relevance-z", c.relevance_z, "Also flag points with |theta_a| <= z * its standard error (0 = off)")
      ->capture_default_str();
  } else {
    sub->add_option("--target", c.target, "outcome or treatment")->capture_default_str();
    sub->add_option("--quantity", c.quantity, "value or derivative")->capture_default_str();
  }
}

} // namespace

int
main(int argc, char** argv)
{
  CLI::App app{"Doubly robust dose-response derivatives, LIV curves and complier effects"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.set_version_flag("--version", std::string(CONTIV_VERSION));
  app.set_config("--config", "", "key=value config file; [command] sections; flags win");
  app.require_subcommand(1);

  Common common;
  DataOptions data;
  CurveOptions curve;
  LateOptions late;
  SimOptions simo;
  std::string gen_dgp = "liv_main";
  std::size_t gen_n = 2000;

  auto* gen = app.add_subcommand("generate", "Write a simulated data set as CSV");
  gen->add_option("--dgp", gen_dgp, "Design name")->capture_default_str();
  gen->add_option("--n", gen_n, "Rows")->capture_default_str();
  add_common(gen, common, false);

  auto* est = app.add_subcommand("estimate-curve", "Dose-response curve or derivative");
  add_data_options(est, data);
  add_curve_options(est, curve, false);
  add_common(est, common, true);

  auto* liv = app.add_subcommand("estimate-liv", "Local IV curve");
  add_data_options(liv, data);
  add_curve_options(liv, curve, true);
  add_common(liv, common, true);

  auto* lat = app.add_subcommand("estimate-late", "Maximal complier proportion and LATE");
  add_data_options(lat, data);
  lat->add_option("--p", late.p, "Boundary polynomial degree")->capture_default_str();
  lat->add_option("--h", late.h, "Boundary bandwidth on the unit scale")->capture_default_str();
  lat->add_option("--kernel", late.kernel, "Kernel name")->capture_default_str();
  lat->add_flag("!--no-rescale", late.rescale, "Z is already on [0, 1]");
  lat->add_flag("--no-rotate", curve.no_rotate, "Use a single cross-fitting rotation");
  add_common(lat, common, true);

  auto* sel = app.add_subcommand("select-bandwidth", "Pseudo-risk bandwidth selection");
  add_data_options(sel, data);
  sel->add_option("--method", curve.method, "localpoly or smooth")->capture_default_str();
  sel->add_option("--target", curve.target, "outcome or treatment")->capture_default_str();
  sel->add_option("--kernel", curve.kernel, "Kernel name")->capture_default_str();
  sel->add_option("--p", curve.p, "Local polynomial degree")->capture_default_str();
  sel->add_option("--candidates", curve.candidates, "Bandwidth candidates")->delimiter(',');
  sel->add_flag("--no-rotate", curve.no_rotate, "Use a single cross-fitting rotation");
  add_common(sel, common, false);

  auto* simc = app.add_subcommand("simulate", "Monte Carlo RMSE and coverage grid");
  simc->add_option("--dgp", simo.dgps, "Designs")->delimiter(',')->capture_default_str();
  simc->add_option("--estimators", simo.estimators, "localpoly, smooth, plugin, projection-linear")
    ->delimiter(',')
    ->capture_default_str();
  simc->add_option("--n", simo.ns, "Sample sizes")->delimiter(',')->capture_default_str();
  simc->add_option("--alphas", simo.alphas, "Nuisance rates")->delimiter(',')->capture_default_str();
  simc->add_option("--S", simo.S, "Replications per cell")->capture_default_str();
  simc->add_option("--nuisance", simo.nuisance, "synthetic or true")->capture_default_str();
  simc->add_option("--lp-h-y", simo.lp_h_y, "Local polynomial outcome bandwidth")->capture_default_str();
  simc->add_option("--lp-h-a", simo.lp_h_a, "Local polynomial treatment bandwidth")->capture_default_str();
  simc->add_option("--lp-p", simo.lp_p, "Local polynomial degree")->capture_default_str();
  simc->add_option("--lp-p-a", simo.lp_p_a, "Treatment-curve degree (0 = --lp-p)")->capture_default_str();
  simc->add_option("--smooth-h-y", simo.sm_h_y, "Smooth outcome bandwidth")->capture_default_str();
  simc->add_option("--smooth-h-a", simo.sm_h_a, "Smooth treatment bandwidth")->capture_default_str();
  simc->add_option("--smooth-kernel", simo.sm_kernel, "Smooth kernel")->capture_default_str();
  simc->add_option("--exponent", simo.exponent, "Bandwidths scale as n^-exponent")->capture_default_str();
  simc->add_option("--grid-points", simo.grid_points, "Scoring grid size")->capture_default_str();
  simc->add_option("--replications", simo.replications, "Per-replication CSV");
  add_common(simc, common, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      return app.exit(e);
    }
    report(static_cast<int>(Errc::InvalidConfig), errc_name(Errc::InvalidConfig), e.what());
    return static_cast<int>(Errc::InvalidConfig);
  }

  try {
    set_default_jobs(common.jobs);
    if (gen->parsed()) {
      return run_generate(*gen, common, gen_dgp, gen_n);
    }
    if (est->parsed()) {
      return run_estimate_curve(*est, common, data, curve);
    }
    if (liv->parsed()) {
      return run_estimate_liv(*liv, common, data, curve);
    }
    if (lat->parsed()) {
      return run_estimate_late(*lat, common, data, late, curve.no_rotate);
    }
    if (sel->parsed()) {
      return run_select(*sel, common, data, curve);
    }
    if (simc->parsed()) {
      return run_simulate(*simc, common, simo);
    }
  } catch (const Error& e) {
    report(static_cast<int>(e.code()), e.code_name(), e.what());
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    report(1, "internal", e.what());
    return 1;
  }
  return 0;
}
