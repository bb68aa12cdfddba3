#include "geowrap/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "geowrap/io.hpp"
#include "geowrap/verification.hpp"

namespace geowrap::cli {

namespace {

using io::json;

constexpr std::uint64_t kDefaultSeed = 42;

// Output goes to a file via atomic_write, or to `out` when no path is given.
void emit(const std::string& path, const std::string& contents, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << contents;
  } else {
    io::atomic_write(path, contents);
  }
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json vector_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json matrix_json(const Matrix& m) {
  json a = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(vector_json(m.row(r).transpose()));
  return a;
}

Point parse_location(const ManifoldId& m, const std::string& arg) {
  const json j = io::read_json_argument(arg.front() == '[' ? "{\"location\":" + arg + "}" : arg);
  const json& loc = j.is_object() && j.contains("location") ? j.at("location") : j;
  if (!loc.is_array()) throw Error(ErrorCode::DataError, "location must be a JSON array of coordinates");
  Vector x(static_cast<Eigen::Index>(loc.size()));
  for (std::size_t i = 0; i < loc.size(); ++i) x(static_cast<Eigen::Index>(i)) = loc[i].get<double>();
  return make_point(m, x);
}

// Location given on the command line, or the profile-likelihood estimate.
LocationFit locate(const io::PointSet& data, WrappingKind kind, const std::string& location_arg) {
  if (data.points.empty()) throw Error(ErrorCode::DataError, "no samples");
  if (!location_arg.empty()) {
    const Point p = parse_location(data.manifold, location_arg);
    const SigmaEstimate est = mle_sigma(data.points, WrappingVariant(kind, p));
    LocationFit fit{p, est.matrix, 0.0, 0, true};
    return fit;
  }
  return estimate_location(data.points, kind);
}

struct SampleArgs {
  std::string spec;
  std::size_t n = 0;
  std::uint64_t seed = kDefaultSeed;
  std::string out;
};

int cmd_sample(const SampleArgs& a, std::ostream& out) {
  const WrappedNormal dist = io::distribution_from_json(io::read_json_argument(a.spec));
  Rng rng(a.seed);
  const auto points = dist.sample(rng, a.n);
  std::ostringstream csv;
  io::write_points_csv(csv, dist.manifold(), points);
  emit(a.out, csv.str(), out);
  return kOk;
}

struct LogpdfArgs {
  std::string spec;
  std::string points;
  std::string out;
};

int cmd_logpdf(const LogpdfArgs& a, std::ostream& out) {
  const WrappedNormal dist = io::distribution_from_json(io::read_json_argument(a.spec));
  const io::PointSet data = io::read_points_csv(a.points);
  if (!(data.manifold == dist.manifold())) {
    throw Error(ErrorCode::DataError, "points and distribution live on different manifolds");
  }
  std::ostringstream csv;
  csv << "log_pdf\n";
  for (const auto& p : data.points) csv << io::format_double(dist.log_pdf(p)) << '\n';
  emit(a.out, csv.str(), out);
  return kOk;
}

struct FitArgs {
  std::string samples;
  std::string variant = "isometry_lambert";
  std::string location;
  std::string out;
  // fit-bayes
  double prior_nu = 0.0;
  double prior_scale = 1.0;
  // fit-mixture
  int components = 2;
  std::uint64_t seed = kDefaultSeed;
  int max_iterations = 500;
};

int cmd_fit_sigma(const FitArgs& a, std::ostream& out) {
  const io::PointSet data = io::read_points_csv(a.samples);
  const WrappingKind kind = wrapping_kind_from_string(a.variant);
  const LocationFit fit = locate(data, kind, a.location);
  const SigmaEstimate est = mle_sigma(data.points, WrappingVariant(kind, fit.location));
  json j = {{"manifold", io::manifold_to_json(data.manifold)},
            {"variant", a.variant},
            {"location", vector_json(fit.location.coords())},
            {"sigma", matrix_json(est.matrix)},
            {"samples", data.points.size()},
            {"singular", est.singular}};
  if (!est.singular) {
    const WrappedNormal dist(WrappingVariant(kind, fit.location), CovarianceSpec(est.matrix));
    j["log_likelihood"] = -wrapped_normal_nll(dist, data.points);
  } else {
    j["log_likelihood"] = nullptr;
  }
  j["location_iterations"] = fit.iterations;
  j["location_converged"] = fit.converged;
  emit(a.out, dump(j), out);
  return kOk;
}

int cmd_fit_bayes(const FitArgs& a, std::ostream& out) {
  const io::PointSet data = io::read_points_csv(a.samples);
  const WrappingKind kind = wrapping_kind_from_string(a.variant);
  const int k = data.manifold.dim();
  const LocationFit fit = locate(data, kind, a.location);
  const double nu = a.prior_nu > 0.0 ? a.prior_nu : k + 2.0;
  const IWParams prior(nu, Matrix::Identity(k, k) * a.prior_scale);
  const IWParams post = iw_posterior(prior, data.points, WrappingVariant(kind, fit.location));
  json j = {{"manifold", io::manifold_to_json(data.manifold)},
            {"variant", a.variant},
            {"location", vector_json(fit.location.coords())},
            {"prior", {{"nu", prior.nu}, {"phi", matrix_json(prior.phi)}}},
            {"posterior", {{"nu", post.nu}, {"phi", matrix_json(post.phi)}}},
            {"samples", data.points.size()}};
  if (post.nu > k + 1.0) {
    const Matrix mean = iw_mean(post);
    j["sigma"] = matrix_json(mean);
    const WrappedNormal dist(WrappingVariant(kind, fit.location), CovarianceSpec(mean));
    j["log_likelihood"] = -wrapped_normal_nll(dist, data.points);
  }
  emit(a.out, dump(j), out);
  return kOk;
}

int cmd_fit_mixture(const FitArgs& a, std::ostream& out) {
  const io::PointSet data = io::read_points_csv(a.samples);
  const WrappingKind kind = wrapping_kind_from_string(a.variant);
  Rng rng(a.seed);
  EmOptions options;
  options.max_iterations = a.max_iterations;
  const EmResult res = em_fit(data.points, a.components, kind, rng, options);
  json j = io::mixture_to_json(res.mixture);
  j["log_likelihood"] = res.log_likelihood.empty() ? json(nullptr) : json(res.log_likelihood.back());
  j["log_likelihood_trace"] = res.log_likelihood;
  j["iterations"] = res.iterations;
  j["reseeds"] = res.reseeds;
  j["converged"] = res.converged;
  j["monotone"] = res.monotone;
  emit(a.out, dump(j), out);
  return kOk;
}

struct NetworkArgs {
  std::string edges;
  std::string manifold;
  int dim = 0;
  long iters = -1;
  long burn_in = -1;
  long thin = -1;
  std::uint64_t seed = 1;
  bool seed_given = false;
  std::string config;
  int chains = 1;
  std::string trace;
  std::string summary;
};

int cmd_network_fit(NetworkArgs a, std::ostream& out, std::ostream& err) {
  const Graph graph = io::read_edge_list(a.edges);
  MhConfig config;
  std::string manifold_name = "sphere";
  int dim = 2;
  double scale = 1.0;
  if (!a.config.empty()) {
    const json c = io::read_json_argument(a.config);
    try {
      config.iterations = c.value("iterations", config.iterations);
      config.burn_in = c.value("burn_in", config.burn_in);
      config.thin = c.value("thin", config.thin);
      config.step_position = c.value("step_position", config.step_position);
      config.step_alpha = c.value("step_alpha", config.step_alpha);
      config.initial_alpha = c.value("initial_alpha", config.initial_alpha);
      if (c.contains("seed") && !a.seed_given) a.seed = c.at("seed").get<std::uint64_t>();
      if (c.contains("manifold")) {
        const json& m = c.at("manifold");
        if (m.is_string()) {
          manifold_name = m.get<std::string>();
        } else {
          manifold_name = m.value("kind", manifold_name);
          dim = m.value("dim", dim);
          scale = m.value("scale", scale);
        }
      }
      if (c.contains("init")) {
        const std::string init = c.at("init").get<std::string>();
        if (init == "mds") config.init = InitMode::Mds;
        else if (init == "base") config.init = InitMode::Base;
        else throw Error(ErrorCode::DataError, "config init must be 'mds' or 'base'");
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::DataError, std::string("bad network config: ") + e.what());
    }
  }
  if (!a.manifold.empty()) manifold_name = a.manifold;
  if (a.dim > 0) dim = a.dim;
  if (a.iters >= 0) config.iterations = a.iters;
  if (a.burn_in >= 0) config.burn_in = a.burn_in;
  if (a.thin > 0) config.thin = a.thin;
  if (config.burn_in >= config.iterations) config.burn_in = config.iterations / 10;

  const ManifoldId manifold(manifold_kind_from_string(manifold_name), dim, scale);
  const NetworkPriors priors = NetworkPriors::defaults_for(manifold);
  const int threads = std::min(a.chains, thread_cap());
  const auto results = mh_run_chains(graph, manifold, config, priors, a.seed, a.chains, threads);

  std::ostringstream trace;
  if (a.chains == 1) {
    io::write_trace_csv(trace, results.front().trace);
  } else {
    trace << "chain,iteration,log_posterior,alpha,accept_rate_pos,accept_rate_alpha\n";
    for (int c = 0; c < a.chains; ++c) {
      std::ostringstream one;
      io::write_trace_csv(one, results[c].trace);
      std::istringstream lines(one.str());
      std::string line;
      std::getline(lines, line);  // header
      while (std::getline(lines, line)) trace << c << ',' << line << '\n';
    }
  }

  json chains = json::array();
  double pooled = 0.0;
  for (int c = 0; c < a.chains; ++c) {
    const PosteriorSummary& s = results[c].summary;
    pooled += s.alpha_mean / a.chains;
    chains.push_back({{"seed", a.seed + static_cast<std::uint64_t>(c)},
                      {"alpha_mean", s.alpha_mean},
                      {"alpha_sd", s.alpha_sd},
                      {"log_posterior_mean", s.log_posterior_mean},
                      {"accept_rate_position", s.accept_rate_position},
                      {"accept_rate_alpha", s.accept_rate_alpha},
                      {"geweke_z", s.geweke_z},
                      {"warnings", results[c].trace.warnings}});
  }
  json positions = json::array();
  for (const auto& p : results.front().state.positions) positions.push_back(vector_json(p.coords()));
  const json summary = {{"manifold", io::manifold_to_json(manifold)},
                        {"nodes", graph.size()},
                        {"edges", graph.edges().size()},
                        {"iterations", config.iterations},
                        {"burn_in", config.burn_in},
                        {"thin", config.thin},
                        {"seed", a.seed},
                        {"alpha_mean", pooled},
                        {"chains", chains},
                        {"final_positions", positions}};

  // Nothing is written until both documents are complete.
  if (!a.trace.empty()) io::atomic_write(a.trace, trace.str());
  emit(a.summary, dump(summary), out);
  for (const auto& r : results) {
    for (const auto& w : r.trace.warnings) err << "warning: " << w << '\n';
  }
  return kOk;
}

struct VerifyArgs {
  std::string out;
  std::uint64_t seed = verification::VerifyOptions{}.seed;
  bool skip_network = false;
};

int cmd_verify(const VerifyArgs& a, std::ostream& out) {
  verification::VerifyOptions options;
  options.seed = a.seed;
  options.include_network = !a.skip_network;
  const auto results = verification::run_verification(options, [&](const verification::CheckResult& r) {
    out << (r.passed ? "PASS " : "FAIL ") << r.name << "  measured=" << r.measured << " tol=" << r.tolerance << "  ("
        << r.seconds << " s)";
    if (!r.detail.empty()) out << "  " << r.detail;
    out << '\n';
  });
  bool all = true;
  json checks = json::array();
  for (const auto& r : results) {
    all = all && r.passed;
    checks.push_back({{"name", r.name},
                      {"anchor", r.anchor},
                      {"measured", std::isfinite(r.measured) ? json(r.measured) : json(nullptr)},
                      {"tolerance", r.tolerance},
                      {"passed", r.passed},
                      {"detail", r.detail}});
  }
  if (!a.out.empty()) {
    const json report = {{"seed", a.seed}, {"passed", all}, {"checks", checks}};
    io::atomic_write(a.out, dump(report));
  }
  return all ? kOk : kVerificationFailed;
}

struct LimitsArgs {
  std::string manifold = "hyperboloid";
  std::vector<double> radii{1.0, 2.0, 4.0, 8.0};
  int points = 20;
  double max_norm = 1.0;
  std::uint64_t seed = kDefaultSeed;
  std::string out;
};

int cmd_limits(const LimitsArgs& a, std::ostream& out) {
  const ManifoldKind mk = manifold_kind_from_string(a.manifold);
  if (mk == ManifoldKind::Euclidean) throw Error(ErrorCode::InvalidArgument, "limits needs a curved manifold");
  Rng rng(a.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::ostringstream csv;
  csv << "variant,point,u1,u2,radius,curvature,deviation\n";
  std::vector<Vector> us;
  for (int i = 0; i < a.points; ++i) {
    const double r = a.max_norm * std::sqrt(unif(rng));
    const double t = 2.0 * std::numbers::pi * unif(rng);
    Vector u(2);
    u << r * std::cos(t), r * std::sin(t);
    us.push_back(u);
  }
  for (WrappingKind kind :
       {WrappingKind::ExpParallelTransport, WrappingKind::IsometryExp, WrappingKind::IsometryLambert}) {
    for (int i = 0; i < a.points; ++i) {
      for (double radius : a.radii) {
        const ManifoldId m(mk, 2, radius);
        const Point z = wrap(WrappingVariant(kind, Point::base(m)), us[i]);
        csv << to_string(kind) << ',' << i << ',' << io::format_double(us[i](0)) << ','
            << io::format_double(us[i](1)) << ',' << io::format_double(radius) << ','
            << io::format_double(m.curvature()) << ',' << io::format_double((z.coords().head(2) - us[i]).norm())
            << '\n';
      }
    }
  }
  emit(a.out, csv.str(), out);
  return kOk;
}

}  // namespace

int thread_cap() {
  int cap = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("GEOWRAP_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) cap = static_cast<int>(v);
  }
  return cap;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Wrapped distributions on hyperbolic and spherical spaces", "geowrap"};
  app.require_subcommand(1);

  SampleArgs sample;
  auto* sc_sample = app.add_subcommand("sample", "Draw points from a wrapped normal");
  sc_sample->add_option("--spec", sample.spec, "Distribution spec (JSON file or inline JSON)")->required();
  sc_sample->add_option("--n", sample.n, "Number of draws")->required();
  sc_sample->add_option("--seed", sample.seed, "Random seed");
  sc_sample->add_option("--out", sample.out, "Output CSV (stdout when omitted)");

  LogpdfArgs logpdf;
  auto* sc_logpdf = app.add_subcommand("logpdf", "Evaluate log densities at points");
  sc_logpdf->add_option("--spec", logpdf.spec, "Distribution spec")->required();
  sc_logpdf->add_option("--points", logpdf.points, "Points CSV")->required()->check(CLI::ExistingFile);
  sc_logpdf->add_option("--out", logpdf.out, "Output CSV");

  FitArgs fit;
  auto add_fit_common = [&](CLI::App* sc) {
    sc->add_option("--samples", fit.samples, "Samples CSV")->required()->check(CLI::ExistingFile);
    sc->add_option("--variant", fit.variant, "exp_parallel_transport | isometry_exp | isometry_lambert");
    sc->add_option("--out", fit.out, "Output JSON");
  };
  auto* sc_sigma = app.add_subcommand("fit-sigma", "Maximum-likelihood Sigma");
  add_fit_common(sc_sigma);
  sc_sigma->add_option("--location", fit.location, "Known location (JSON array); estimated when omitted");
  auto* sc_bayes = app.add_subcommand("fit-bayes", "Inverse-Wishart posterior for Sigma");
  add_fit_common(sc_bayes);
  sc_bayes->add_option("--location", fit.location, "Known location (JSON array); estimated when omitted");
  sc_bayes->add_option("--prior-nu", fit.prior_nu, "Prior degrees of freedom (default k + 2)");
  sc_bayes->add_option("--prior-scale", fit.prior_scale, "Prior scale matrix is this times the identity")
      ->check(CLI::PositiveNumber);
  auto* sc_mix = app.add_subcommand("fit-mixture", "EM for a wrapped normal mixture");
  add_fit_common(sc_mix);
  sc_mix->add_option("--components", fit.components, "Number of components")->check(CLI::PositiveNumber);
  sc_mix->add_option("--seed", fit.seed, "Random seed");
  sc_mix->add_option("--max-iter", fit.max_iterations, "EM iteration cap")->check(CLI::PositiveNumber);

  NetworkArgs net;
  auto* sc_net = app.add_subcommand("network-fit", "Latent space network model by Metropolis-Hastings");
  sc_net->add_option("--edges", net.edges, "Edge list CSV")->required()->check(CLI::ExistingFile);
  sc_net->add_option("--manifold", net.manifold, "sphere | hyperboloid | euclidean");
  sc_net->add_option("--dim", net.dim, "Latent dimension (default 2)")->check(CLI::PositiveNumber);
  sc_net->add_option("--iters", net.iters, "MH sweeps")->check(CLI::NonNegativeNumber);
  sc_net->add_option("--burn-in", net.burn_in, "Burn-in sweeps")->check(CLI::NonNegativeNumber);
  sc_net->add_option("--thin", net.thin, "Record every thin-th sweep")->check(CLI::PositiveNumber);
  auto* seed_opt = sc_net->add_option("--seed", net.seed, "Random seed (chain c uses seed + c)");
  sc_net->add_option("--config", net.config, "Config JSON (file or inline)");
  sc_net->add_option("--chains", net.chains, "Independent chains")->check(CLI::PositiveNumber);
  sc_net->add_option("--trace", net.trace, "Trace CSV output");
  sc_net->add_option("--summary", net.summary, "Summary JSON output (stdout when omitted)");

  VerifyArgs verify;
  auto* sc_verify = app.add_subcommand("verify", "Run the numerical verification suite");
  sc_verify->add_option("--out", verify.out, "Report JSON");
  sc_verify->add_option("--seed", verify.seed, "Base seed");
  sc_verify->add_flag("--skip-network", verify.skip_network, "Skip the two MCMC checks");

  LimitsArgs limits;
  auto* sc_limits = app.add_subcommand("limits", "Curvature-limit sweep of chart deviations");
  sc_limits->add_option("--manifold", limits.manifold, "sphere | hyperboloid");
  sc_limits->add_option("--radii", limits.radii, "Radii to sweep")->delimiter(',');
  sc_limits->add_option("--points", limits.points, "Random chart points")->check(CLI::PositiveNumber);
  sc_limits->add_option("--max-norm", limits.max_norm, "Largest |u|")->check(CLI::PositiveNumber);
  sc_limits->add_option("--seed", limits.seed, "Random seed");
  sc_limits->add_option("--out", limits.out, "Output CSV");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*sc_sample) return cmd_sample(sample, out);
    if (*sc_logpdf) return cmd_logpdf(logpdf, out);
    if (*sc_sigma) return cmd_fit_sigma(fit, out);
    if (*sc_bayes) return cmd_fit_bayes(fit, out);
    if (*sc_mix) return cmd_fit_mixture(fit, out);
    if (*sc_net) {
      net.seed_given = seed_opt->count() > 0;
      return cmd_network_fit(net, out, err);
    }
    if (*sc_verify) return cmd_verify(verify, out);
    if (*sc_limits) return cmd_limits(limits, out);
  } catch (const Error& e) {
    err << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsage;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace geowrap::cli
