#pragma once

#include <optional>
#include <random>
#include <vector>

#include "geowrap/chart.hpp"

namespace geowrap {

// Every sampler takes the generator explicitly; there is no global RNG.
using Rng = std::mt19937_64;

/// Symmetric positive definite k x k covariance with its Cholesky factor.
class CovarianceSpec {
 public:
  explicit CovarianceSpec(Matrix entries);

  static CovarianceSpec isotropic(int dim, double variance);
  static CovarianceSpec diagonal(const Vector& variances);

  int dim() const noexcept { return static_cast<int>(entries_.rows()); }
  const Matrix& matrix() const noexcept { return entries_; }
  const Matrix& cholesky_lower() const noexcept { return lower_; }
  double log_det() const noexcept { return log_det_; }
  Vector eigenvalues() const;

  // u^T Sigma^{-1} u
  double mahalanobis_sq(const Vector& u) const;

 private:
  Matrix entries_;
  Matrix lower_;
  double log_det_;
};

double gaussian_log_pdf(const Vector& u, const CovarianceSpec& sigma);

/// P(|U| < radius) for U ~ N(0, Sigma). Diagonalises Sigma and sums Ruben's
/// chi-square mixture series until the remaining mass is below 1e-12 of the
/// partial sum. For Sigma = s^2 I in two dimensions this is
/// 1 - exp(-radius^2 / 2 s^2).
double disk_truncation_constant(const CovarianceSpec& sigma, double radius);

/// Wrapped normal: pushforward of N(0, Sigma) (optionally restricted to a
/// disk |u| < radius) through a wrapping variant.
///
/// On the sphere the Gaussian is always truncated: by default to sqrt(2) K
/// for the Lambert variant and to pi K for the exp variants. The truncation
/// constant is folded into log_pdf. Hyperboloid and Euclidean spaces take no
/// truncation.
class WrappedNormal {
 public:
  WrappedNormal(WrappingVariant variant, CovarianceSpec sigma, std::optional<double> truncation_radius = std::nullopt);

  const WrappingVariant& variant() const noexcept { return variant_; }
  const CovarianceSpec& sigma() const noexcept { return sigma_; }
  const ManifoldId& manifold() const noexcept { return variant_.manifold(); }
  const Point& location() const noexcept { return variant_.location(); }
  std::optional<double> truncation_radius() const noexcept { return truncation_radius_; }
  double log_truncation_constant() const noexcept { return log_truncation_; }

  WrappedNormal relocated(const Point& location) const {
    return {variant_.relocated(location), sigma_, truncation_radius_};
  }

  // One draw in chart coordinates from the (truncated) Gaussian.
  Vector sample_chart(Rng& rng) const;
  std::vector<Point> sample(Rng& rng, std::size_t n) const;

  // log density of the (truncated) Gaussian in chart coordinates; -inf
  // outside the truncation disk.
  double log_pdf_chart(const Vector& u) const;

  // log density with respect to the Riemannian volume; -inf outside the
  // image of the wrapping map.
  double log_pdf(const Point& z) const;

 private:
  WrappingVariant variant_;
  CovarianceSpec sigma_;
  std::optional<double> truncation_radius_;
  double log_truncation_ = 0.0;
};

/// Finite mixture of wrapped normals sharing one manifold and variant kind.
class WrappedNormalMixture {
 public:
  WrappedNormalMixture(std::vector<double> weights, std::vector<WrappedNormal> components);

  const std::vector<double>& weights() const noexcept { return weights_; }
  const std::vector<WrappedNormal>& components() const noexcept { return components_; }
  std::size_t size() const noexcept { return components_.size(); }

  double log_pdf(const Point& z) const;
  std::vector<Point> sample(Rng& rng, std::size_t n) const;

 private:
  std::vector<double> weights_;
  std::vector<WrappedNormal> components_;
};

struct VonMisesParams {
  double mean = 0.0;
  double kappa = 1.0;
};

// kappa cos(angle - mean) - log(2 pi I_0(kappa))
double von_mises_log_pdf(const VonMisesParams& params, double angle);

}  // namespace geowrap
