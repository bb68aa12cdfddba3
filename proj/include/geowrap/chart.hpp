#pragma once

#include <optional>
#include <string_view>

#include "geowrap/manifold.hpp"

namespace geowrap {

enum class WrappingKind { ExpParallelTransport, IsometryExp, IsometryLambert };

std::string_view to_string(WrappingKind kind);
WrappingKind wrapping_kind_from_string(std::string_view name);

/// A wrapping map T_{p0}M ~ R^k -> M that sends the origin to `location`.
///
///   ExpParallelTransport  exp_p o PT_{p0->p}
///   IsometryExp           phi_{p0->p} o exp_{p0}
///   IsometryLambert       phi_{p0->p} o Lambert_{p0}     (k = 2 only)
///
/// The isometry phi_{p0->p} and its inverse are computed once at construction.
class WrappingVariant {
 public:
  WrappingVariant(WrappingKind kind, Point location);

  WrappingKind kind() const noexcept { return kind_; }
  const Point& location() const noexcept { return location_; }
  const ManifoldId& manifold() const noexcept { return location_.manifold(); }
  int dim() const noexcept { return location_.manifold().dim(); }

  // Only meaningful on the embedded spaces.
  const IsometryMatrix& isometry() const { return *isometry_; }
  const IsometryMatrix& inverse_isometry() const { return *inverse_; }

  // Open ball in R^k on which wrap is injective: 2K for Lambert and pi*K for
  // the exp variants on the sphere, +inf elsewhere.
  double domain_radius() const noexcept;

  WrappingVariant relocated(const Point& location) const { return {kind_, location}; }

 private:
  WrappingKind kind_;
  Point location_;
  std::optional<IsometryMatrix> isometry_;
  std::optional<IsometryMatrix> inverse_;
};

/// Lambert equal-area map from R^2 onto S^2_K or H^2_R, centred at p0.
///
/// Sphere:      (u sqrt(1 - r^2/4K^2),  r^2/2K - K),          r < 2K
/// Hyperboloid: (u sqrt(1 + r^2/4R^2),  R + r^2/2R),          any u
///
/// The hyperboloid law is the one whose Jacobian is identically 1: geodesic
/// radius rho = 2R asinh(r / 2R).
Point lambert_forward(const ManifoldId& manifold, const Vector& u);
Vector lambert_inverse(const Point& z);

Point wrap(const WrappingVariant& variant, const Vector& u);
Vector unwrap(const WrappingVariant& variant, const Point& z);

/// log |det D wrap(u)| with respect to the Riemannian area element. Zero for
/// the Lambert variant; (k-1) log(sinh(r/R)/(r/R)) resp. (k-1) log(sin(r/K)/(r/K))
/// for the exp variants.
double log_det_jacobian(const WrappingVariant& variant, const Vector& u);

}  // namespace geowrap
