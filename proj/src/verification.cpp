#include "geowrap/verification.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "geowrap/inference.hpp"
#include "geowrap/network.hpp"
#include "geowrap/oracles.hpp"

namespace geowrap::verification {

namespace {

using oracles::Axis;
using oracles::GridSpec;

constexpr double kPi = std::numbers::pi;

const WrappingKind kAllKinds[] = {WrappingKind::ExpParallelTransport, WrappingKind::IsometryExp,
                                  WrappingKind::IsometryLambert};

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

Vector normal_vector(Rng& rng, int k, double sd = 1.0) {
  std::normal_distribution<double> g(0.0, sd);
  Vector v(k);
  for (int i = 0; i < k; ++i) v(i) = g(rng);
  return v;
}

// Uniform draw from the open disk of the given radius.
Vector disk_point(Rng& rng, double radius) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double r = radius * std::sqrt(unif(rng));
  const double t = 2.0 * kPi * unif(rng);
  return vec2(r * std::cos(t), r * std::sin(t));
}

Point point_at(const ManifoldId& m, const Vector& u) {
  return exp_map(embed_tangent(u, m));
}

// Rotation by theta in the plane of the first two ambient axes, fixing p0.
IsometryMatrix base_rotation(const ManifoldId& m, double theta) {
  Matrix r = Matrix::Identity(m.ambient_dim(), m.ambient_dim());
  r(0, 0) = std::cos(theta);
  r(0, 1) = -std::sin(theta);
  r(1, 0) = std::sin(theta);
  r(1, 1) = std::cos(theta);
  return IsometryMatrix(m, r);
}

CheckResult make_result(std::string name, std::string anchor, double measured, double tolerance, bool passed,
                        std::string detail = {}) {
  CheckResult r;
  r.name = std::move(name);
  r.anchor = std::move(anchor);
  r.measured = measured;
  r.tolerance = tolerance;
  r.passed = passed;
  r.detail = std::move(detail);
  return r;
}

}  // namespace

CheckResult check_lambert_area(std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (const ManifoldId& m : {ManifoldId::sphere(2, 1.0), ManifoldId::hyperboloid(2, 1.0)}) {
    const bool sphere = m.kind() == ManifoldKind::Sphere;
    const double radius = sphere ? 2.0 - 1e-3 : 3.0;
    const oracles::ChartMap map = [&](const Vector& u) { return lambert_forward(m, u); };
    for (int i = 0; i < 100; ++i) {
      const Vector u = disk_point(rng, radius);
      const double det = oracles::fd_jacobian_det(map, u, 1e-5, sphere ? std::optional<double>(2.0) : std::nullopt);
      worst = std::max(worst, std::abs(det - 1.0));
    }
  }
  return make_result("lambert_area", "Lambert maps on S^2 and H^2 have unit Jacobian determinant", worst, 1e-6,
                     worst < 1e-6, "max |det - 1| over 200 points");
}

CheckResult check_exp_jacobian(std::uint64_t seed) {
  Rng rng(seed);
  const ManifoldId m = ManifoldId::hyperboloid(2, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const WrappingVariant variant(WrappingKind::ExpParallelTransport, point_at(m, normal_vector(rng, 2)));
    Vector u = disk_point(rng, 3.0);
    if (u.norm() < 1e-3) u = vec2(1e-3, 0.0);
    const double det = oracles::fd_jacobian_det([&](const Vector& x) { return wrap(variant, x); }, u);
    const double r = u.norm();
    const double expected = std::sinh(r) / r;
    worst = std::max(worst, std::abs(det - expected) / expected);
  }
  return make_result("exp_jacobian", "exp-wrap Jacobian determinant equals (sinh|u|/|u|)^(k-1)", worst, 1e-6,
                     worst < 1e-6, "max relative error over 100 points on H^2");
}

CheckResult check_normalization() {
  const ManifoldId h2 = ManifoldId::hyperboloid(2, 1.0);
  const ManifoldId s2 = ManifoldId::sphere(2, 1.0);
  const Vector offset = vec2(0.3, 0.4);
  struct Case {
    const char* label;
    WrappedNormal dist;
    double rho_max;
  };
  std::vector<Case> cases;
  cases.push_back({"H2 isometry_lambert", {WrappingVariant(WrappingKind::IsometryLambert, point_at(h2, offset)),
                                           CovarianceSpec::isotropic(2, 0.25)}, 4.0});
  cases.push_back({"H2 isometry_exp", {WrappingVariant(WrappingKind::IsometryExp, point_at(h2, offset)),
                                       CovarianceSpec::diagonal(vec2(0.3, 0.6))}, 6.5});
  cases.push_back({"H2 exp_parallel_transport",
                   {WrappingVariant(WrappingKind::ExpParallelTransport, point_at(h2, offset)),
                    CovarianceSpec::isotropic(2, 1.0)}, 7.5});
  cases.push_back({"S2 isometry_lambert (truncated)",
                   {WrappingVariant(WrappingKind::IsometryLambert, point_at(s2, offset)),
                    CovarianceSpec::isotropic(2, 0.25)}, kPi});

  double worst = 0.0;
  std::ostringstream detail;
  for (const auto& c : cases) {
    const GridSpec grid({Axis{0.0, c.rho_max, 1501}, Axis{0.0, 2.0 * kPi, 1201}});
    const double mass = oracles::grid_normalization(c.dist, grid);
    worst = std::max(worst, std::abs(mass - 1.0));
    detail << c.label << ": " << mass << "; ";
  }
  return make_result("normalization", "wrapped densities integrate to one", worst, 1e-3, worst < 1e-3, detail.str());
}

CheckResult check_pushforward(std::uint64_t seed) {
  Rng rng(seed);
  const CovarianceSpec sigma = CovarianceSpec::diagonal(vec2(0.04, 0.09));
  const GridSpec bins({Axis{-0.8, 0.8, 16}, Axis{-1.2, 1.2, 16}});
  double worst = 0.0;
  std::ostringstream detail;
  for (const ManifoldId& m : {ManifoldId::hyperboloid(2, 1.0), ManifoldId::sphere(2, 1.0)}) {
    for (WrappingKind kind : kAllKinds) {
      const WrappedNormal dist(WrappingVariant(kind, point_at(m, vec2(0.3, -0.2))), sigma);
      const double tv = oracles::pushforward_tv_distance(dist, 100000, bins, rng);
      worst = std::max(worst, tv);
      detail << to_string(m.kind()) << ' ' << to_string(kind) << ": " << tv << "; ";
    }
  }
  return make_result("pushforward", "samples follow the analytic pushforward density", worst, 0.02, worst < 0.02,
                     detail.str());
}

CheckResult check_truncation_constant() {
  double worst = 0.0;
  for (double s : {0.1, 0.4, 1.0}) {
    const double c = disk_truncation_constant(CovarianceSpec::isotropic(2, s * s), std::sqrt(2.0));
    worst = std::max(worst, std::abs(c - (1.0 - std::exp(-1.0 / (s * s)))));
  }
  return make_result("truncation_constant", "Gaussian mass in the sqrt(2) disk is 1 - exp(-1/sigma^2)", worst, 1e-12,
                     worst < 1e-12);
}

CheckResult check_isometry_equivariance(std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const ManifoldId m = (i % 2 == 0) ? ManifoldId::hyperboloid(2, 1.0) : ManifoldId::sphere(2, 1.0);
    const WrappingKind kind = kAllKinds[i % 3];
    const double scale = m.kind() == ManifoldKind::Sphere ? 0.5 : 1.0;
    const Point p = point_at(m, normal_vector(rng, 2, scale));
    const IsometryMatrix a =
        isometry_to(point_at(m, normal_vector(rng, 2, scale))) * base_rotation(m, 2.0 * kPi * unif(rng));
    const double var = 0.05 + 0.3 * unif(rng);
    const WrappedNormal dist(WrappingVariant(kind, p), CovarianceSpec::isotropic(2, var));
    const WrappedNormal moved = dist.relocated(apply_isometry(a, p));
    Rng local(seed + 1000 + i);
    const Point z = dist.sample(local, 1).front();
    const double lhs = moved.log_pdf(apply_isometry(a, z));
    const double rhs = dist.log_pdf(z);
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return make_result("isometry_equivariance", "isometries carry the density at p to the density at phi(p)", worst,
                     1e-9, worst < 1e-9, "100 random isometries, isotropic Sigma");
}

CheckResult check_symmetry_unimodality(std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double worst = 0.0;
  int cases = 0;
  for (const ManifoldId& m : {ManifoldId::hyperboloid(2, 1.0), ManifoldId::sphere(2, 1.0)}) {
    for (WrappingKind kind : kAllKinds) {
      for (int i = 0; i < 20; ++i, ++cases) {
        const Point p = point_at(m, normal_vector(rng, 2, 0.5));
        const WrappedNormal dist(WrappingVariant(kind, p), CovarianceSpec::isotropic(2, 0.1 + 0.3 * unif(rng)));
        const IsometryMatrix to_p = isometry_to(p);
        const IsometryMatrix rot = to_p * base_rotation(m, 2.0 * kPi * unif(rng)) * to_p.inverse();
        const Point z = dist.sample(rng, 1).front();
        worst = std::max(worst, std::abs(dist.log_pdf(apply_isometry(rot, z)) - dist.log_pdf(z)));
      }
    }
  }

  // Strict decrease along 16 rays: every variant on H^2 and the Lambert
  // variant on S^2, with anisotropic Sigma.
  int violations = 0;
  const CovarianceSpec sigma = CovarianceSpec::diagonal(vec2(0.2, 0.45));
  auto scan = [&](const WrappedNormal& dist, double t_max) {
    const Point& p = dist.location();
    for (int r = 0; r < 16; ++r) {
      const double angle = 2.0 * kPi * r / 16.0;
      const TangentVector dir =
          parallel_transport(p, embed_tangent(vec2(std::cos(angle), std::sin(angle)), p.manifold()));
      double prev = dist.log_pdf(p);
      for (int s = 1; s <= 100; ++s) {
        const double t = t_max * s / 100.0;
        const double lp = dist.log_pdf(exp_map(make_tangent(p, t * dir.coords())));
        if (!(lp < prev)) ++violations;
        prev = lp;
      }
    }
  };
  for (WrappingKind kind : kAllKinds) {
    const ManifoldId h2 = ManifoldId::hyperboloid(2, 1.0);
    scan(WrappedNormal(WrappingVariant(kind, point_at(h2, vec2(0.4, -0.7))), sigma), 3.0);
  }
  const ManifoldId s2 = ManifoldId::sphere(2, 1.0);
  scan(WrappedNormal(WrappingVariant(WrappingKind::IsometryLambert, point_at(s2, vec2(0.4, -0.7))), sigma), 1.5);

  std::ostringstream detail;
  detail << cases << " rotation cases; " << violations << " monotonicity violations on 16 rays x 4 distributions";
  return make_result("symmetry_unimodality", "densities are rotation invariant about p and decrease along rays",
                     worst, 1e-9, worst < 1e-9 && violations == 0, detail.str());
}

CheckResult check_curvature_limit(std::uint64_t seed) {
  Rng rng(seed);
  double min_ratio = std::numeric_limits<double>::infinity();
  bool monotone = true;
  std::vector<Vector> us;
  for (int i = 0; i < 20; ++i) us.push_back(disk_point(rng, 1.0));
  for (ManifoldKind mk : {ManifoldKind::Hyperboloid, ManifoldKind::Sphere}) {
    for (WrappingKind kind : kAllKinds) {
      for (const Vector& u : us) {
        if (u.norm() < 1e-2) continue;
        double dev[3];
        const double radii[3] = {1.0, 2.0, 4.0};
        for (int c = 0; c < 3; ++c) {
          const ManifoldId m(mk, 2, radii[c]);
          const Point z = wrap(WrappingVariant(kind, Point::base(m)), u);
          dev[c] = (z.coords().head(2) - u).norm();
        }
        for (int c = 0; c < 2; ++c) {
          if (!(dev[c + 1] < dev[c])) monotone = false;
          min_ratio = std::min(min_ratio, dev[c] / dev[c + 1]);
        }
      }
    }
  }
  return make_result("curvature_limit", "wrapped chart deviation vanishes as curvature goes to zero", min_ratio, 3.0,
                     monotone && min_ratio >= 3.0, "radii 1, 2, 4; measured is the smallest step ratio");
}

CheckResult check_von_mises_limit() {
  double gaps[3];
  const double kappas[3] = {1.0, 10.0, 100.0};
  for (int i = 0; i < 3; ++i) {
    const double kappa = kappas[i];
    const VonMisesParams vm{0.0, kappa};
    gaps[i] = oracles::sup_norm_gap(
        [&](double x) { return std::exp(von_mises_log_pdf(vm, x)); },
        [&](double x) { return std::sqrt(kappa / (2.0 * kPi)) * std::exp(-0.5 * kappa * x * x); },
        Axis{-kPi, kPi, 10000});
  }
  std::ostringstream detail;
  detail << "gaps " << gaps[0] << ", " << gaps[1] << ", " << gaps[2];
  const bool ok = gaps[0] > gaps[1] && gaps[1] > gaps[2] && gaps[2] < 0.01;
  return make_result("von_mises_limit", "von Mises approaches N(mu, 1/kappa) as kappa grows", gaps[2], 0.01, ok,
                     detail.str());
}

CheckResult check_mle_consistency(std::uint64_t seed) {
  Rng rng(seed);
  const ManifoldId m = ManifoldId::hyperboloid(2, 1.0);
  const Matrix truth = vec2(0.04, 0.09).asDiagonal();
  const WrappedNormal dist(WrappingVariant(WrappingKind::IsometryLambert, point_at(m, vec2(0.5, -0.3))),
                           CovarianceSpec(truth));
  const auto samples = dist.sample(rng, 10000);
  const SigmaEstimate est = mle_sigma(samples, dist.variant());
  const double err = (est.matrix - truth).norm() / truth.norm();
  return make_result("mle_consistency", "Sigma-hat from unwrapped samples is consistent", err, 0.05, err < 0.05,
                     "m = 10000, relative Frobenius error");
}

CheckResult check_conjugacy(std::uint64_t seed) {
  Rng rng(seed);
  // Batch composition on H^2.
  const ManifoldId h2 = ManifoldId::hyperboloid(2, 1.0);
  const WrappedNormal dist2(WrappingVariant(WrappingKind::IsometryExp, point_at(h2, vec2(-0.2, 0.6))),
                            CovarianceSpec::diagonal(vec2(0.2, 0.1)));
  const auto all = dist2.sample(rng, 60);
  const std::span<const Point> a(all.data(), 25);
  const std::span<const Point> b(all.data() + 25, all.size() - 25);
  const IWParams prior(5.0, Matrix::Identity(2, 2) * 0.5);
  const IWParams seq = iw_posterior(iw_posterior(prior, a, dist2.variant()), b, dist2.variant());
  const IWParams batch = iw_posterior(prior, all, dist2.variant());
  const double batch_gap = std::abs(seq.nu - batch.nu) + (seq.phi - batch.phi).cwiseAbs().maxCoeff();

  // One-dimensional grid posterior on H^1: inverse-gamma prior times the
  // brute-force likelihood, against the conjugate update.
  const ManifoldId h1 = ManifoldId::hyperboloid(1, 1.0);
  Vector loc1(1);
  loc1 << 0.4;
  const WrappingVariant variant1(WrappingKind::IsometryExp, point_at(h1, loc1));
  Matrix true_var(1, 1);
  true_var << 0.5;
  const auto ys = WrappedNormal(variant1, CovarianceSpec(true_var)).sample(rng, 20);
  const double nu0 = 3.0;
  const double phi0 = 1.0;
  Matrix phi_mat(1, 1);
  phi_mat << phi0;
  const IWParams post = iw_posterior(IWParams(nu0, phi_mat), ys, variant1);

  const int grid = 10000;
  const double s_max = 5.0;
  std::vector<double> brute(grid), conj(grid);
  for (int i = 0; i < grid; ++i) {
    const double s = s_max * (i + 0.5) / grid;
    Matrix sm(1, 1);
    sm << s;
    const WrappedNormal candidate(variant1, CovarianceSpec(sm));
    double lp = -(nu0 / 2.0 + 1.0) * std::log(s) - phi0 / (2.0 * s);
    for (const auto& y : ys) lp += candidate.log_pdf(y);
    brute[i] = lp;
    conj[i] = iw_log_pdf(post, sm);
  }
  auto normalise = [](std::vector<double>& lp) {
    const double mx = *std::max_element(lp.begin(), lp.end());
    double total = 0.0;
    for (double& v : lp) total += (v = std::exp(v - mx));
    for (double& v : lp) v /= total;
  };
  normalise(brute);
  normalise(conj);
  double tv = 0.0;
  for (int i = 0; i < grid; ++i) tv += std::abs(brute[i] - conj[i]);
  tv *= 0.5;

  std::ostringstream detail;
  detail << "batch gap " << batch_gap << ", grid TV " << tv;
  return make_result("conjugacy", "inverse-Wishart prior is conjugate for Sigma", tv, 1e-3,
                     batch_gap == 0.0 && tv < 1e-3, detail.str());
}

CheckResult check_mixture_recovery(std::uint64_t seed) {
  Rng rng(seed);
  const ManifoldId m = ManifoldId::hyperboloid(2, 1.0);
  const Point c1 = point_at(m, vec2(-2.0, 0.0));
  const Point c2 = point_at(m, vec2(2.0, 0.0));
  const CovarianceSpec sigma = CovarianceSpec::isotropic(2, 0.05);
  const WrappedNormalMixture truth(
      {0.5, 0.5}, {WrappedNormal(WrappingVariant(WrappingKind::IsometryLambert, c1), sigma),
                   WrappedNormal(WrappingVariant(WrappingKind::IsometryLambert, c2), sigma)});
  const auto samples = truth.sample(rng, 2000);
  const EmResult fit = em_fit(samples, 2, WrappingKind::IsometryLambert, rng);
  const auto& comps = fit.mixture.components();
  const auto& w = fit.mixture.weights();
  // Match components to the truth by the better of the two assignments.
  const double d_same = std::max(geodesic_distance(comps[0].location(), c1), geodesic_distance(comps[1].location(), c2));
  const double d_swap = std::max(geodesic_distance(comps[0].location(), c2), geodesic_distance(comps[1].location(), c1));
  const double loc_err = std::min(d_same, d_swap);
  const double w_err = std::max(std::abs(w[0] - 0.5), std::abs(w[1] - 0.5));
  std::ostringstream detail;
  detail << "weight error " << w_err << ", location error " << loc_err << ", EM iterations " << fit.iterations
         << (fit.monotone ? ", monotone" : ", NOT monotone");
  return make_result("mixture_recovery", "EM recovers a two-component wrapped normal mixture", loc_err, 0.1,
                     loc_err < 0.1 && w_err < 0.05 && fit.monotone, detail.str());
}

CheckResult check_network_synthetic(std::uint64_t seed) {
  Rng rng(seed);
  const ManifoldId m = ManifoldId::sphere(2, 1.0);
  const NetworkPriors priors = NetworkPriors::defaults_for(m);
  const double alpha_true = -0.6;
  const auto positions = priors.position_prior(m).sample(rng, 15);
  const Graph graph = simulate_graph(positions, alpha_true, rng);
  MhConfig config;
  config.iterations = 100000;
  config.burn_in = 50000;
  config.thin = 10;
  const MhResult res = mh_run(graph, m, config, priors, rng);
  const double err = std::abs(res.summary.alpha_mean - alpha_true);
  std::ostringstream detail;
  detail << graph.edges().size() << " edges; alpha_mean " << res.summary.alpha_mean << ", Geweke z "
         << res.summary.geweke_z << ", accept " << res.summary.accept_rate_position << '/'
         << res.summary.accept_rate_alpha;
  return make_result("network_synthetic", "MH on the latent distance model recovers alpha", err, 0.3,
                     err < 0.3 && std::abs(res.summary.geweke_z) < 3.0, detail.str());
}

CheckResult check_florentine(std::uint64_t seed) {
  Rng rng(seed);
  const ManifoldId m = ManifoldId::sphere(2, 1.0);
  MhConfig config;
  config.iterations = 100000;
  const MhResult res = mh_run(florentine_graph(), m, config, NetworkPriors::defaults_for(m), rng);
  const double a = res.summary.alpha_mean;
  std::ostringstream detail;
  detail << "alpha_mean " << a << " (interval [-1.0, -0.2]), Geweke z " << res.summary.geweke_z;
  // Reported as the distance from the interval midpoint.
  return make_result("florentine", "spherical latent space fit of the Florentine marriages", std::abs(a + 0.6), 0.4,
                     a >= -1.0 && a <= -0.2, detail.str());
}

const std::vector<NamedCheck>& all_checks() {
  static const std::vector<NamedCheck> checks = {
      {"lambert_area", false, [](const VerifyOptions& o) { return check_lambert_area(o.seed + 1); }},
      {"exp_jacobian", false, [](const VerifyOptions& o) { return check_exp_jacobian(o.seed + 2); }},
      {"normalization", false, [](const VerifyOptions&) { return check_normalization(); }},
      {"pushforward", false, [](const VerifyOptions& o) { return check_pushforward(o.seed + 4); }},
      {"truncation_constant", false, [](const VerifyOptions&) { return check_truncation_constant(); }},
      {"isometry_equivariance", false, [](const VerifyOptions& o) { return check_isometry_equivariance(o.seed + 6); }},
      {"symmetry_unimodality", false, [](const VerifyOptions& o) { return check_symmetry_unimodality(o.seed + 7); }},
      {"curvature_limit", false, [](const VerifyOptions& o) { return check_curvature_limit(o.seed + 8); }},
      {"von_mises_limit", false, [](const VerifyOptions&) { return check_von_mises_limit(); }},
      {"mle_consistency", false, [](const VerifyOptions& o) { return check_mle_consistency(o.seed + 10); }},
      {"conjugacy", false, [](const VerifyOptions& o) { return check_conjugacy(o.seed + 11); }},
      {"mixture_recovery", false, [](const VerifyOptions& o) { return check_mixture_recovery(o.seed + 12); }},
      {"network_synthetic", true, [](const VerifyOptions& o) { return check_network_synthetic(o.seed + 13); }},
      {"florentine", true, [](const VerifyOptions& o) { return check_florentine(o.seed + 14); }},
  };
  return checks;
}

std::vector<CheckResult> run_verification(const VerifyOptions& options,
                                          const std::function<void(const CheckResult&)>& on_result) {
  std::vector<CheckResult> results;
  for (const auto& check : all_checks()) {
    if (check.network && !options.include_network) continue;
    const auto start = std::chrono::steady_clock::now();
    CheckResult r;
    try {
      r = check.run(options);
    } catch (const std::exception& e) {
      r = make_result(check.name, "", std::numeric_limits<double>::quiet_NaN(), 0.0, false,
                      std::string("exception: ") + e.what());
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (on_result) on_result(r);
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace geowrap::verification
