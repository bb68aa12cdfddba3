#include "geowrap/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "geowrap/special.hpp"

namespace geowrap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double weight_at(std::span<const double> weights, std::size_t i) { return weights.empty() ? 1.0 : weights[i]; }

void check_weights(std::span<const Point> samples, std::span<const double> weights) {
  if (!weights.empty() && weights.size() != samples.size()) {
    throw Error(ErrorCode::InvalidArgument, "one weight per sample expected");
  }
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error(ErrorCode::InvalidArgument, "weights must be finite and >= 0");
  }
}

const ManifoldId& common_manifold(std::span<const Point> samples) {
  if (samples.empty()) throw Error(ErrorCode::InvalidArgument, "no samples");
  for (const auto& s : samples) {
    if (!(s.manifold() == samples.front().manifold())) {
      throw Error(ErrorCode::InvalidArgument, "samples live on different manifolds");
    }
  }
  return samples.front().manifold();
}

// Weighted extrinsic mean projected back onto the manifold.
Point extrinsic_mean(std::span<const Point> samples, std::span<const double> weights) {
  const ManifoldId& m = samples.front().manifold();
  Vector acc = Vector::Zero(m.ambient_dim());
  double total = 0.0;
  std::size_t heaviest = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double w = weight_at(weights, i);
    acc += w * samples[i].coords();
    total += w;
    if (w > weight_at(weights, heaviest)) heaviest = i;
  }
  acc /= total;
  if (m.kind() == ManifoldKind::Sphere) {
    if (acc.norm() < 1e-6 * m.scale()) return samples[heaviest];
    return project_to_manifold(m, acc * (m.scale() / acc.norm()));
  }
  if (m.kind() == ManifoldKind::Hyperboloid) {
    const double q = -minkowski_inner(acc, acc);
    return project_to_manifold(m, acc * (m.scale() / std::sqrt(q)));
  }
  return project_to_manifold(m, acc);
}

Matrix weighted_outer(const std::vector<Vector>& us, std::span<const double> weights, double& total) {
  const Eigen::Index k = us.front().size();
  Matrix acc = Matrix::Zero(k, k);
  total = 0.0;
  for (std::size_t i = 0; i < us.size(); ++i) {
    const double w = weight_at(weights, i);
    acc.noalias() += w * us[i] * us[i].transpose();
    total += w;
  }
  return acc;
}

bool is_singular(const Matrix& m) {
  if (m.isZero(0.0)) return true;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff() <= 1e-14 * std::max(eig.eigenvalues().maxCoeff(), 0.0);
}

// Covariance usable for density evaluation: Sigma-hat plus a ridge of 1e-12
// of its mean eigenvalue.
std::optional<CovarianceSpec> regularised(const Matrix& sigma) {
  const Eigen::Index k = sigma.rows();
  const double level = std::max(sigma.trace() / k, 1e-300);
  try {
    return CovarianceSpec(sigma + 1e-12 * level * Matrix::Identity(k, k));
  } catch (const Error&) {
    return std::nullopt;
  }
}

struct ProfileObjective {
  std::span<const Point> samples;
  std::span<const double> weights;
  WrappingKind kind;
  const LocationOptions& options;

  // Negative log-likelihood at p; fills sigma_out with the Sigma used.
  double operator()(const Point& p, Matrix* sigma_out = nullptr) const {
    try {
      const WrappingVariant variant(kind, p);
      std::vector<Vector> us;
      us.reserve(samples.size());
      double ldj = 0.0;
      for (std::size_t i = 0; i < samples.size(); ++i) {
        us.push_back(unwrap(variant, samples[i]));
        const double w = weight_at(weights, i);
        if (w > 0.0) ldj += w * log_det_jacobian(variant, us.back());
      }
      Matrix sigma;
      if (options.fixed_sigma) {
        sigma = options.fixed_sigma->matrix();
      } else {
        double total = 0.0;
        sigma = weighted_outer(us, weights, total) / total;
      }
      auto spec = options.fixed_sigma ? options.fixed_sigma : regularised(sigma);
      if (!spec) return kInf;
      const WrappedNormal dist(variant, *spec, options.truncation_radius);
      double nll = ldj;
      for (std::size_t i = 0; i < us.size(); ++i) {
        const double w = weight_at(weights, i);
        if (w == 0.0) continue;
        const double lp = dist.log_pdf_chart(us[i]);
        if (!std::isfinite(lp)) return kInf;
        nll -= w * lp;
      }
      if (sigma_out) *sigma_out = sigma;
      return nll;
    } catch (const Error&) {
      return kInf;
    }
  }
};

}  // namespace

IWParams::IWParams(double nu_in, Matrix phi_in) : nu(nu_in), phi(std::move(phi_in)) {
  if (phi.rows() < 1 || phi.rows() != phi.cols()) throw Error(ErrorCode::InvalidArgument, "IW scale must be square");
  if (!(nu > phi.rows() - 1.0)) throw Error(ErrorCode::InvalidArgument, "IW degrees of freedom must exceed k - 1");
  CovarianceSpec check(phi);  // throws unless symmetric positive definite
}

double iw_log_pdf(const IWParams& params, const Matrix& sigma) {
  const int k = params.dim();
  const CovarianceSpec s(sigma);
  const CovarianceSpec phi(params.phi);
  const Matrix sigma_inv = s.cholesky_lower().transpose().triangularView<Eigen::Upper>().solve(
      s.cholesky_lower().triangularView<Eigen::Lower>().solve(Matrix::Identity(k, k)));
  const double trace = (params.phi * sigma_inv).trace();
  return 0.5 * params.nu * phi.log_det() - 0.5 * params.nu * k * std::log(2.0) -
         special::log_multivariate_gamma(k, 0.5 * params.nu) - 0.5 * (params.nu + k + 1.0) * s.log_det() - 0.5 * trace;
}

Matrix iw_mean(const IWParams& params) {
  const double denom = params.nu - params.dim() - 1.0;
  if (!(denom > 0.0)) throw Error(ErrorCode::InvalidArgument, "IW mean needs nu > k + 1");
  return params.phi / denom;
}

SigmaEstimate mle_sigma(std::span<const Point> samples, const WrappingVariant& variant, std::span<const double> weights) {
  if (samples.empty()) throw Error(ErrorCode::InvalidArgument, "mle_sigma needs at least one sample");
  check_weights(samples, weights);
  std::vector<Vector> us;
  us.reserve(samples.size());
  for (const auto& y : samples) us.push_back(unwrap(variant, y));
  SigmaEstimate out;
  out.matrix = weighted_outer(us, weights, out.total_weight);
  if (!(out.total_weight > 0.0)) throw Error(ErrorCode::InvalidArgument, "total sample weight must be positive");
  out.matrix /= out.total_weight;
  out.singular = is_singular(out.matrix);
  return out;
}

IWParams iw_posterior(const IWParams& prior, std::span<const Point> samples, const WrappingVariant& variant) {
  if (prior.dim() != variant.dim()) throw Error(ErrorCode::InvalidArgument, "IW dimension does not match manifold");
  Matrix scatter = prior.phi;
  for (const auto& y : samples) {
    const Vector u = unwrap(variant, y);
    scatter.noalias() += u * u.transpose();
  }
  return IWParams(prior.nu + static_cast<double>(samples.size()), std::move(scatter));
}

double wrapped_normal_nll(const WrappedNormal& dist, std::span<const Point> samples, std::span<const double> weights) {
  check_weights(samples, weights);
  double nll = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double w = weight_at(weights, i);
    if (w == 0.0) continue;
    const double lp = dist.log_pdf(samples[i]);
    if (!std::isfinite(lp)) return kInf;
    nll -= w * lp;
  }
  return nll;
}

LocationFit estimate_location(std::span<const Point> samples, WrappingKind kind, const LocationOptions& options,
                              std::span<const double> weights) {
  const ManifoldId& m = common_manifold(samples);
  check_weights(samples, weights);
  const int k = m.dim();

  std::size_t active = 0;
  std::size_t last_active = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (weight_at(weights, i) > 0.0) {
      ++active;
      last_active = i;
    }
  }
  if (active == 0) throw Error(ErrorCode::InvalidArgument, "total sample weight must be positive");

  Point p = options.start ? *options.start : extrinsic_mean(samples, weights);
  const ProfileObjective objective{samples, weights, kind, options};

  // A single sample: the likelihood is unbounded as Sigma collapses onto it.
  bool all_at_start = true;
  for (std::size_t i = 0; i < samples.size() && all_at_start; ++i) {
    if (weight_at(weights, i) > 0.0 && (samples[i].coords() - p.coords()).norm() > 1e-14 * std::max(1.0, p.coords().norm())) {
      all_at_start = false;
    }
  }
  if (active == 1 || all_at_start) {
    const Point& only = active == 1 ? samples[last_active] : p;
    Matrix zero = Matrix::Zero(k, k);
    if (options.fixed_sigma) zero = options.fixed_sigma->matrix();
    return LocationFit{only, zero, -kInf, 0, true};
  }

  Matrix sigma;
  double best = objective(p, &sigma);
  double step = options.initial_step * (m.kind() == ManifoldKind::Euclidean ? 1.0 : m.scale());
  const double max_step = m.kind() == ManifoldKind::Sphere ? 0.5 * m.scale() : 10.0 * step;
  int iterations = 0;
  bool converged = false;
  while (iterations < options.max_iterations) {
    ++iterations;
    bool improved = false;
    const std::optional<IsometryMatrix> frame =
        m.kind() == ManifoldKind::Euclidean ? std::nullopt : std::optional<IsometryMatrix>(isometry_to(p));
    for (int j = 0; j < k; ++j) {
      Vector e = Vector::Zero(k);
      e(j) = 1.0;
      TangentVector dir = frame ? apply_isometry(*frame, embed_tangent(e, m)) : project_to_tangent(p, e);
      for (double sign : {1.0, -1.0}) {
        Point candidate = exp_map(project_to_tangent(p, sign * step * dir.coords()));
        Matrix candidate_sigma;
        const double value = objective(candidate, &candidate_sigma);
        if (value < best) {
          best = value;
          p = std::move(candidate);
          sigma = std::move(candidate_sigma);
          improved = true;
          break;
        }
      }
    }
    if (improved) {
      step = std::min(step * 1.5, max_step);
    } else {
      step *= 0.5;
      if (step < options.tolerance) {
        converged = true;
        break;
      }
    }
  }
  if (!std::isfinite(best)) throw Error(ErrorCode::OutOfDomain, "no location gives every sample positive density");
  return LocationFit{p, sigma, best, iterations, converged};
}

double mixture_log_likelihood(const WrappedNormalMixture& mixture, std::span<const Point> samples) {
  double total = 0.0;
  for (const auto& y : samples) total += mixture.log_pdf(y);
  return total;
}

EmResult em_fit(std::span<const Point> samples, int q, WrappingKind kind, Rng& rng, const EmOptions& options) {
  const ManifoldId& m = common_manifold(samples);
  const int k = m.dim();
  const std::size_t n = samples.size();
  if (q < 1) throw Error(ErrorCode::InvalidArgument, "need at least one component");
  if (n < static_cast<std::size_t>(q) * (k + 1)) {
    throw Error(ErrorCode::InvalidArgument, "need at least q (k + 1) samples");
  }

  if (q == 1) {
    const LocationFit fit = estimate_location(samples, kind);
    const WrappingVariant variant(kind, fit.location);
    const SigmaEstimate est = mle_sigma(samples, variant);
    auto spec = regularised(est.matrix);
    if (!spec) throw Error(ErrorCode::DegenerateMixture, "single-component covariance is degenerate");
    WrappedNormalMixture mixture({1.0}, {WrappedNormal(variant, *spec)});
    const double ll = mixture_log_likelihood(mixture, samples);
    return EmResult{std::move(mixture), {ll}, 1, 0, true, true};
  }

  // k-means++ seeding on geodesic distances.
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<std::size_t> centres{static_cast<std::size_t>(uniform(rng) * n) % n};
  std::vector<double> nearest(n, kInf);
  while (centres.size() < static_cast<std::size_t>(q)) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = geodesic_distance(samples[i], samples[centres.back()]);
      nearest[i] = std::min(nearest[i], d * d);
      total += nearest[i];
    }
    double draw = uniform(rng) * total;
    std::size_t pick = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      draw -= nearest[i];
      if (draw < 0.0) {
        pick = i;
        break;
      }
    }
    centres.push_back(pick);
  }

  // Hard assignment to the nearest centre gives the initial responsibilities.
  std::vector<std::vector<double>> resp(q, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    double best_d = kInf;
    for (int j = 0; j < q; ++j) {
      const double d = geodesic_distance(samples[i], samples[centres[j]]);
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    resp[best][i] = 1.0;
  }

  Matrix pooled = Matrix::Zero(k, k);
  {
    const WrappingVariant v(kind, extrinsic_mean(samples, {}));
    pooled = mle_sigma(samples, v).matrix;
    if (is_singular(pooled)) pooled = 0.01 * m.scale() * m.scale() * Matrix::Identity(k, k);
  }

  std::vector<double> weights(q, 1.0 / q);
  std::vector<Point> locations;
  std::vector<CovarianceSpec> sigmas;
  for (int j = 0; j < q; ++j) {
    LocationOptions lo;
    lo.start = samples[centres[j]];
    lo.max_iterations = options.location_iterations;
    const LocationFit fit = estimate_location(samples, kind, lo, resp[j]);
    locations.push_back(fit.location);
    double mass = 0.0;
    for (double r : resp[j]) mass += r;
    weights[j] = std::max(mass, 1.0) / n;
    auto spec = regularised(mle_sigma(samples, WrappingVariant(kind, fit.location), resp[j]).matrix);
    sigmas.push_back(spec ? *spec : CovarianceSpec(pooled));
  }
  {
    double total = 0.0;
    for (double w : weights) total += w;
    for (double& w : weights) w /= total;
  }

  auto build = [&]() {
    std::vector<WrappedNormal> comps;
    for (int j = 0; j < q; ++j) comps.emplace_back(WrappingVariant(kind, locations[j]), sigmas[j]);
    return WrappedNormalMixture(weights, std::move(comps));
  };

  std::vector<double> trace;
  int reseeds = 0;
  bool reseeded_last = false;
  bool converged = false;
  bool monotone = true;
  int iterations = 0;
  std::vector<std::vector<double>> logp(q, std::vector<double>(n));
  std::vector<double> point_ll(n);
  while (iterations < options.max_iterations) {
    ++iterations;
    const WrappedNormalMixture current = build();
    // E-step.
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double hi = -kInf;
      for (int j = 0; j < q; ++j) {
        logp[j][i] = std::log(weights[j]) + current.components()[j].log_pdf(samples[i]);
        hi = std::max(hi, logp[j][i]);
      }
      double acc = 0.0;
      for (int j = 0; j < q; ++j) acc += std::exp(logp[j][i] - hi);
      point_ll[i] = hi + std::log(acc);
      ll += point_ll[i];
      for (int j = 0; j < q; ++j) resp[j][i] = std::exp(logp[j][i] - point_ll[i]);
    }
    if (!trace.empty() && !reseeded_last) {
      const double prev = trace.back();
      if (ll < prev - 1e-9 * std::max(1.0, std::abs(prev))) monotone = false;
      trace.push_back(ll);
      if (std::abs(ll - prev) <= options.tolerance * std::abs(prev)) {
        converged = true;
        break;
      }
    } else {
      trace.push_back(ll);
    }
    reseeded_last = false;

    // M-step (generalised: each component update must not decrease its Q term).
    for (int j = 0; j < q; ++j) {
      double mass = 0.0;
      for (double r : resp[j]) mass += r;
      if (mass < k + 1.0) {
        if (++reseeds > options.max_reseeds) {
          throw Error(ErrorCode::DegenerateMixture, "component emptied more than the allowed number of times");
        }
        const auto worst = std::min_element(point_ll.begin(), point_ll.end()) - point_ll.begin();
        locations[j] = samples[worst];
        sigmas[j] = CovarianceSpec(pooled);
        weights[j] = 1.0 / q;
        reseeded_last = true;
        continue;
      }
      weights[j] = mass / n;

      const WrappedNormal old_comp(WrappingVariant(kind, locations[j]), sigmas[j]);
      const double old_q = wrapped_normal_nll(old_comp, samples, resp[j]);
      LocationOptions lo;
      lo.start = locations[j];
      lo.max_iterations = options.location_iterations;
      const LocationFit fit = estimate_location(samples, kind, lo, resp[j]);
      auto spec = regularised(fit.sigma);
      if (!spec) continue;
      const WrappedNormal new_comp(WrappingVariant(kind, fit.location), *spec);
      if (wrapped_normal_nll(new_comp, samples, resp[j]) <= old_q) {
        locations[j] = fit.location;
        sigmas[j] = *spec;
      }
    }
    double total = 0.0;
    for (double w : weights) total += w;
    for (double& w : weights) w /= total;
  }

  return EmResult{build(), std::move(trace), iterations, reseeds, converged, monotone};
}

}  // namespace geowrap
