#include "geowrap/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "geowrap/special.hpp"

namespace geowrap {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kMinAcceptance = 1e-6;

double log_sum_exp(const std::vector<double>& terms) {
  const double hi = *std::max_element(terms.begin(), terms.end());
  if (!std::isfinite(hi)) return hi;
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - hi);
  return hi + std::log(acc);
}

}  // namespace

CovarianceSpec::CovarianceSpec(Matrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() < 1 || entries_.rows() != entries_.cols()) {
    throw Error(ErrorCode::InvalidArgument, "covariance must be a non-empty square matrix");
  }
  if (!entries_.allFinite()) throw Error(ErrorCode::InvalidArgument, "covariance has non-finite entries");
  const double scale = std::max(entries_.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  if ((entries_ - entries_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw Error(ErrorCode::InvalidArgument, "covariance is not symmetric");
  }
  entries_ = 0.5 * (entries_ + entries_.transpose());
  Eigen::LLT<Matrix> llt(entries_);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::InvalidArgument, "covariance is not positive definite");
  lower_ = llt.matrixL();
  if ((lower_.diagonal().array() <= 0.0).any()) {
    throw Error(ErrorCode::InvalidArgument, "covariance is not positive definite");
  }
  log_det_ = 2.0 * lower_.diagonal().array().log().sum();
}

CovarianceSpec CovarianceSpec::isotropic(int dim, double variance) {
  return CovarianceSpec(variance * Matrix::Identity(dim, dim));
}

CovarianceSpec CovarianceSpec::diagonal(const Vector& variances) {
  return CovarianceSpec(Matrix(variances.asDiagonal()));
}

Vector CovarianceSpec::eigenvalues() const {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(entries_, Eigen::EigenvaluesOnly);
  return eig.eigenvalues();
}

double CovarianceSpec::mahalanobis_sq(const Vector& u) const {
  const Vector w = lower_.triangularView<Eigen::Lower>().solve(u);
  return w.squaredNorm();
}

double gaussian_log_pdf(const Vector& u, const CovarianceSpec& sigma) {
  if (u.size() != sigma.dim()) throw Error(ErrorCode::InvalidArgument, "gaussian_log_pdf: dimension mismatch");
  const int k = sigma.dim();
  return -0.5 * (k * std::log(2.0 * std::numbers::pi) + sigma.log_det() + sigma.mahalanobis_sq(u));
}

namespace {

// P(l1 Z1^2 + l2 Z2^2 <= r^2) as a one-dimensional integral over Z1 = a sin(theta),
// a = r / sqrt(l1), by composite Simpson; the substitution removes the endpoint
// square-root singularity.
double planar_disk_probability(double l1, double l2, double r) {
  const double a = r / std::sqrt(l1);
  constexpr int kPanels = 4000;
  const double h = std::numbers::pi / kPanels;
  auto f = [&](double theta) {
    const double z = a * std::sin(theta);
    const double rest = std::max(r * r - l1 * z * z, 0.0);
    return std::exp(-0.5 * z * z) * std::erf(std::sqrt(rest / (2.0 * l2))) * a * std::cos(theta);
  };
  double sum = f(-0.5 * std::numbers::pi) + f(0.5 * std::numbers::pi);
  for (int i = 1; i < kPanels; ++i) sum += (i % 2 == 1 ? 4.0 : 2.0) * f(-0.5 * std::numbers::pi + i * h);
  return std::min(1.0, sum * h / 3.0 / std::sqrt(2.0 * std::numbers::pi));
}

}  // namespace

double disk_truncation_constant(const CovarianceSpec& sigma, double radius) {
  if (!(radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "truncation radius must be positive");
  if (std::isinf(radius)) return 1.0;
  const int k = sigma.dim();
  const Vector lambda = sigma.eigenvalues();
  const double beta = lambda.minCoeff();
  const double t = radius * radius / beta;

  // |U|^2 = sum lambda_i chi^2_1 = beta * (mixture of chi^2_{k+2m} with weights c_m).
  std::vector<double> gamma(k);
  double log_c0 = 0.0;
  bool isotropic = true;
  for (int i = 0; i < k; ++i) {
    gamma[i] = 1.0 - beta / lambda(i);
    if (gamma[i] > 1e-15) isotropic = false;
    log_c0 += 0.5 * std::log(beta / lambda(i));
  }

  // chi^2_{k+2m} CDF at t = P(k/2 + m, t/2); P(a+1, x) = P(a, x) - x^a e^{-x} / Gamma(a+1).
  const double x = 0.5 * t;
  double a = 0.5 * k;
  double cdf = (k == 2) ? -std::expm1(-x) : special::gamma_p(a, x);
  if (isotropic) return cdf;
  // The series needs O(condition number) terms; strongly anisotropic planar
  // covariances go through direct quadrature instead.
  if (k == 2 && lambda.maxCoeff() > 50.0 * beta) return planar_disk_probability(lambda.maxCoeff(), beta, radius);

  std::vector<double> c{std::exp(log_c0)};
  std::vector<double> g{0.0};
  double total = c[0] * cdf;
  double weight_sum = c[0];
  constexpr int kMaxTerms = 20000;
  for (int m = 1; m < kMaxTerms; ++m) {
    cdf -= std::exp(a * std::log(x) - x - std::lgamma(a + 1.0));
    cdf = std::max(cdf, 0.0);
    a += 1.0;
    double gm = 0.0;
    for (int i = 0; i < k; ++i) gm += std::pow(gamma[i], m);
    g.push_back(0.5 * gm);
    double cm = 0.0;
    for (int r = 0; r < m; ++r) cm += g[m - r] * c[r];
    cm /= m;
    c.push_back(cm);
    total += cm * cdf;
    weight_sum += cm;
    // Remaining terms are bounded by (1 - sum c) * current CDF.
    const double tail = std::max(0.0, 1.0 - weight_sum) * cdf;
    if (tail <= 1e-12 * total || cdf == 0.0) return total;
  }
  throw Error(ErrorCode::InvalidArgument, "disk_truncation_constant: series did not converge (covariance too anisotropic)");
}

WrappedNormal::WrappedNormal(WrappingVariant variant, CovarianceSpec sigma, std::optional<double> truncation_radius)
    : variant_(std::move(variant)), sigma_(std::move(sigma)), truncation_radius_(truncation_radius) {
  const ManifoldId& m = variant_.manifold();
  if (sigma_.dim() != m.dim()) throw Error(ErrorCode::InvalidArgument, "covariance dimension does not match manifold");
  if (m.kind() == ManifoldKind::Sphere) {
    const double limit = variant_.kind() == WrappingKind::IsometryLambert ? 2.0 * m.scale() : std::numbers::pi * m.scale();
    if (!truncation_radius_) {
      truncation_radius_ =
          variant_.kind() == WrappingKind::IsometryLambert ? std::numbers::sqrt2 * m.scale() : std::numbers::pi * m.scale();
    }
    if (!(*truncation_radius_ > 0.0) || *truncation_radius_ > limit) {
      throw Error(ErrorCode::InvalidArgument, "truncation radius must lie in (0, injectivity radius]");
    }
    log_truncation_ = std::log(disk_truncation_constant(sigma_, *truncation_radius_));
  } else if (truncation_radius_) {
    throw Error(ErrorCode::InvalidArgument, "truncation applies to the sphere only");
  }
}

Vector WrappedNormal::sample_chart(Rng& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  const int k = sigma_.dim();
  if (truncation_radius_ && log_truncation_ < std::log(kMinAcceptance)) {
    throw Error(ErrorCode::TruncationInfeasible, "truncation disk holds too little Gaussian mass for rejection sampling");
  }
  Vector xi(k);
  while (true) {
    for (int i = 0; i < k; ++i) xi(i) = normal(rng);
    Vector u = sigma_.cholesky_lower() * xi;
    // Also guards the open injectivity domain when the disk equals it.
    if (!truncation_radius_ || u.norm() < *truncation_radius_) return u;
  }
}

std::vector<Point> WrappedNormal::sample(Rng& rng, std::size_t n) const {
  std::vector<Point> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(wrap(variant_, sample_chart(rng)));
  return out;
}

double WrappedNormal::log_pdf_chart(const Vector& u) const {
  if (truncation_radius_ && !(u.norm() < *truncation_radius_)) return kNegInf;
  return gaussian_log_pdf(u, sigma_) - log_truncation_;
}

double WrappedNormal::log_pdf(const Point& z) const {
  if (!(z.manifold() == manifold())) throw Error(ErrorCode::InvalidArgument, "log_pdf: manifold mismatch");
  Vector u;
  try {
    u = unwrap(variant_, z);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::OutOfDomain) return kNegInf;
    throw;
  }
  if (!(u.norm() < variant_.domain_radius())) return kNegInf;
  const double base = log_pdf_chart(u);
  if (!std::isfinite(base)) return base;
  return base - log_det_jacobian(variant_, u);
}

WrappedNormalMixture::WrappedNormalMixture(std::vector<double> weights, std::vector<WrappedNormal> components)
    : weights_(std::move(weights)), components_(std::move(components)) {
  if (components_.empty() || weights_.size() != components_.size()) {
    throw Error(ErrorCode::InvalidArgument, "mixture needs one weight per component and at least one component");
  }
  double total = 0.0;
  for (double w : weights_) {
    if (!(w > 0.0)) throw Error(ErrorCode::InvalidArgument, "mixture weights must be positive");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw Error(ErrorCode::InvalidArgument, "mixture weights must sum to 1");
  for (const auto& c : components_) {
    if (!(c.manifold() == components_.front().manifold()) ||
        c.variant().kind() != components_.front().variant().kind()) {
      throw Error(ErrorCode::InvalidArgument, "mixture components must share manifold and variant");
    }
  }
}

double WrappedNormalMixture::log_pdf(const Point& z) const {
  std::vector<double> terms(components_.size());
  for (std::size_t i = 0; i < components_.size(); ++i) {
    terms[i] = std::log(weights_[i]) + components_[i].log_pdf(z);
  }
  return log_sum_exp(terms);
}

std::vector<Point> WrappedNormalMixture::sample(Rng& rng, std::size_t n) const {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<Point> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double draw = uniform(rng);
    std::size_t j = 0;
    double cumulative = weights_[0];
    while (draw >= cumulative && j + 1 < weights_.size()) cumulative += weights_[++j];
    out.push_back(wrap(components_[j].variant(), components_[j].sample_chart(rng)));
  }
  return out;
}

double von_mises_log_pdf(const VonMisesParams& params, double angle) {
  if (!(params.kappa > 0.0)) throw Error(ErrorCode::InvalidArgument, "von Mises concentration must be positive");
  return params.kappa * std::cos(angle - params.mean) - std::log(2.0 * std::numbers::pi) -
         special::log_bessel_i0(params.kappa);
}

}  // namespace geowrap
