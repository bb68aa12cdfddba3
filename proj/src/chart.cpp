#include "geowrap/chart.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace geowrap {

namespace {

// log(sinh(x)/x) and log(sin(x)/x) with their series near zero.
double log_sinhc(double x) {
  if (x < 1e-6) return x * x / 6.0;
  return std::log(std::sinh(x) / x);
}

double log_sinc(double x) {
  if (x < 1e-6) return -x * x / 6.0;
  return std::log(std::sin(x) / x);
}

void require_dim(const WrappingVariant& variant, const Vector& u, const char* what) {
  if (u.size() != variant.dim()) {
    throw Error(ErrorCode::InvalidArgument, std::string(what) + ": expected " + std::to_string(variant.dim()) +
                                                " chart coordinates, got " + std::to_string(u.size()));
  }
}

}  // namespace

std::string_view to_string(WrappingKind kind) {
  switch (kind) {
    case WrappingKind::ExpParallelTransport: return "exp_parallel_transport";
    case WrappingKind::IsometryExp: return "isometry_exp";
    case WrappingKind::IsometryLambert: return "isometry_lambert";
  }
  return "unknown";
}

WrappingKind wrapping_kind_from_string(std::string_view name) {
  if (name == "exp_parallel_transport") return WrappingKind::ExpParallelTransport;
  if (name == "isometry_exp") return WrappingKind::IsometryExp;
  if (name == "isometry_lambert") return WrappingKind::IsometryLambert;
  throw Error(ErrorCode::InvalidArgument, "unknown wrapping variant '" + std::string(name) + "'");
}

WrappingVariant::WrappingVariant(WrappingKind kind, Point location) : kind_(kind), location_(std::move(location)) {
  const ManifoldId& m = location_.manifold();
  if (kind_ == WrappingKind::IsometryLambert && m.kind() != ManifoldKind::Euclidean && m.dim() != 2) {
    throw Error(ErrorCode::InvalidArgument, "the Lambert variant is only defined for two-dimensional manifolds");
  }
  if (m.kind() != ManifoldKind::Euclidean) {
    isometry_ = isometry_to(location_);
    inverse_ = isometry_->inverse();
  }
}

double WrappingVariant::domain_radius() const noexcept {
  const ManifoldId& m = manifold();
  if (m.kind() != ManifoldKind::Sphere) return std::numeric_limits<double>::infinity();
  if (kind_ == WrappingKind::IsometryLambert) return 2.0 * m.scale();
  return std::numbers::pi * m.scale();
}

Point lambert_forward(const ManifoldId& manifold, const Vector& u) {
  if (u.size() != 2 || manifold.dim() != 2) {
    throw Error(ErrorCode::InvalidArgument, "lambert_forward is defined for two-dimensional manifolds only");
  }
  const double s = manifold.scale();
  const double r2 = u.squaredNorm();
  Vector out(manifold.ambient_dim());
  switch (manifold.kind()) {
    case ManifoldKind::Sphere: {
      if (!(r2 < 4.0 * s * s)) throw Error(ErrorCode::OutOfDomain, "Lambert map on the sphere needs |u| < 2K");
      out.head(2) = u * std::sqrt(1.0 - r2 / (4.0 * s * s));
      out(2) = r2 / (2.0 * s) - s;
      break;
    }
    case ManifoldKind::Hyperboloid: {
      out.head(2) = u * std::sqrt(1.0 + r2 / (4.0 * s * s));
      out(2) = s + r2 / (2.0 * s);
      break;
    }
    case ManifoldKind::Euclidean:
      return project_to_manifold(manifold, u);
  }
  return project_to_manifold(manifold, out);
}

Vector lambert_inverse(const Point& z) {
  const ManifoldId& m = z.manifold();
  if (m.dim() != 2) throw Error(ErrorCode::InvalidArgument, "lambert_inverse is defined for two-dimensional manifolds only");
  const double s = m.scale();
  const Vector& x = z.coords();
  switch (m.kind()) {
    case ManifoldKind::Sphere: {
      // sqrt(1 - r^2/4K^2) = sqrt((K - z)/2K)
      const double factor = std::sqrt(std::max(0.0, (s - x(2)) / (2.0 * s)));
      if (factor <= 1e-12) throw Error(ErrorCode::OutOfDomain, "the antipode of p0 has no Lambert preimage");
      return x.head(2) / factor;
    }
    case ManifoldKind::Hyperboloid: {
      // sqrt(1 + r^2/4R^2) = sqrt((z + R)/2R)
      const double factor = std::sqrt((x(2) + s) / (2.0 * s));
      return x.head(2) / factor;
    }
    case ManifoldKind::Euclidean:
      return x;
  }
  return x;
}

Point wrap(const WrappingVariant& variant, const Vector& u) {
  require_dim(variant, u, "wrap");
  const ManifoldId& m = variant.manifold();
  if (m.kind() == ManifoldKind::Euclidean) return project_to_manifold(m, variant.location().coords() + u);
  if (!(u.norm() < variant.domain_radius())) {
    throw Error(ErrorCode::OutOfDomain, "chart coordinates outside the injectivity domain");
  }
  switch (variant.kind()) {
    case WrappingKind::ExpParallelTransport: {
      const TangentVector v = apply_isometry(variant.isometry(), embed_tangent(u, m));
      return exp_map(v);
    }
    case WrappingKind::IsometryExp:
      return apply_isometry(variant.isometry(), exp_map(embed_tangent(u, m)));
    case WrappingKind::IsometryLambert:
      return apply_isometry(variant.isometry(), lambert_forward(m, u));
  }
  throw Error(ErrorCode::InvalidArgument, "unknown wrapping variant");
}

Vector unwrap(const WrappingVariant& variant, const Point& z) {
  const ManifoldId& m = variant.manifold();
  if (!(z.manifold() == m)) throw Error(ErrorCode::InvalidArgument, "unwrap: manifold mismatch");
  if (m.kind() == ManifoldKind::Euclidean) return z.coords() - variant.location().coords();
  const int k = m.dim();
  try {
    switch (variant.kind()) {
      case WrappingKind::ExpParallelTransport: {
        const TangentVector at_p = log_map(variant.location(), z);
        return apply_isometry(variant.inverse_isometry(), at_p).coords().head(k);
      }
      case WrappingKind::IsometryExp: {
        const Point back = apply_isometry(variant.inverse_isometry(), z);
        return log_map(Point::base(m), back).coords().head(k);
      }
      case WrappingKind::IsometryLambert:
        return lambert_inverse(apply_isometry(variant.inverse_isometry(), z));
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::UndefinedLog) throw Error(ErrorCode::OutOfDomain, "point outside the wrap image");
    throw;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown wrapping variant");
}

double log_det_jacobian(const WrappingVariant& variant, const Vector& u) {
  require_dim(variant, u, "log_det_jacobian");
  const ManifoldId& m = variant.manifold();
  if (variant.kind() == WrappingKind::IsometryLambert || m.kind() == ManifoldKind::Euclidean) return 0.0;
  const double r = u.norm();
  if (!(r < variant.domain_radius())) throw Error(ErrorCode::OutOfDomain, "chart coordinates outside the domain");
  const double t = r / m.scale();
  const double per_dim = m.kind() == ManifoldKind::Hyperboloid ? log_sinhc(t) : log_sinc(t);
  return (m.dim() - 1) * per_dim;
}

}  // namespace geowrap
