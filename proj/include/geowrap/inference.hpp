#pragma once

#include <optional>
#include <span>
#include <vector>

#include "geowrap/distributions.hpp"

namespace geowrap {

/// Inverse-Wishart IW(nu, Phi) on k x k covariances.
struct IWParams {
  double nu;
  Matrix phi;

  IWParams(double nu, Matrix phi);
  int dim() const noexcept { return static_cast<int>(phi.rows()); }
};

double iw_log_pdf(const IWParams& params, const Matrix& sigma);

// Phi / (nu - k - 1); requires nu > k + 1.
Matrix iw_mean(const IWParams& params);

struct SigmaEstimate {
  Matrix matrix;
  bool singular = false;
  double total_weight = 0.0;
};

/// Sigma-hat = (1/m) sum u_i u_i^T with u_i = unwrap(variant, y_i). Optional
/// weights turn this into the weighted estimate used by EM.
SigmaEstimate mle_sigma(std::span<const Point> samples, const WrappingVariant& variant,
                        std::span<const double> weights = {});

/// Conjugate update IW(nu + m, Phi + sum u_i u_i^T).
IWParams iw_posterior(const IWParams& prior, std::span<const Point> samples, const WrappingVariant& variant);

struct LocationOptions {
  // When set, Sigma is held fixed instead of being profiled out.
  std::optional<CovarianceSpec> fixed_sigma;
  std::optional<double> truncation_radius;
  std::optional<Point> start;
  int max_iterations = 200;
  double tolerance = 1e-8;
  double initial_step = 0.1;
};

struct LocationFit {
  Point location;
  Matrix sigma;
  double objective;  // weighted negative log-likelihood at `location`
  int iterations = 0;
  bool converged = false;
};

/// Location maximising the (profile) likelihood, by geodesic coordinate
/// descent along a parallel-transported frame. Starts from the projected
/// extrinsic mean unless options.start is given; the objective never
/// increases between iterations.
LocationFit estimate_location(std::span<const Point> samples, WrappingKind kind, const LocationOptions& options = {},
                              std::span<const double> weights = {});

/// Weighted negative log-likelihood of samples under WN(location, Sigma).
/// Returns +inf when any positively weighted sample has zero density.
double wrapped_normal_nll(const WrappedNormal& dist, std::span<const Point> samples,
                          std::span<const double> weights = {});

struct EmOptions {
  int max_iterations = 500;
  double tolerance = 1e-8;
  int max_reseeds = 10;
  // Location descent sweeps per M-step.
  int location_iterations = 20;
};

struct EmResult {
  WrappedNormalMixture mixture;
  std::vector<double> log_likelihood;  // one entry per completed E-step
  int iterations = 0;
  int reseeds = 0;
  bool converged = false;
  bool monotone = true;
};

/// EM for a q-component wrapped-normal mixture with k-means++ seeding on
/// geodesic distances.
EmResult em_fit(std::span<const Point> samples, int q, WrappingKind kind, Rng& rng, const EmOptions& options = {});

double mixture_log_likelihood(const WrappedNormalMixture& mixture, std::span<const Point> samples);

}  // namespace geowrap
