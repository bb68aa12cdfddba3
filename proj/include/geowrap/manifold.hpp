#pragma once

#include <Eigen/Dense>

#include "geowrap/errors.hpp"

namespace geowrap {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class ManifoldKind { Hyperboloid, Sphere, Euclidean };

std::string_view to_string(ManifoldKind kind);
ManifoldKind manifold_kind_from_string(std::string_view name);

/// Which constant-curvature model space we are on.
///
/// Every space is parametrised by its radius (R for the hyperboloid, K for
/// the sphere); curvature is derived as -1/R^2 resp. +1/K^2. Euclidean space
/// ignores the scale and has curvature 0.
class ManifoldId {
 public:
  ManifoldId(ManifoldKind kind, int dim, double scale = 1.0);

  static ManifoldId hyperboloid(int dim, double radius = 1.0) {
    return {ManifoldKind::Hyperboloid, dim, radius};
  }
  static ManifoldId sphere(int dim, double radius = 1.0) { return {ManifoldKind::Sphere, dim, radius}; }
  static ManifoldId euclidean(int dim) { return {ManifoldKind::Euclidean, dim, 1.0}; }

  ManifoldKind kind() const noexcept { return kind_; }
  int dim() const noexcept { return dim_; }
  double scale() const noexcept { return scale_; }
  double curvature() const noexcept;

  // k+1 for the embedded spaces, k for Euclidean.
  int ambient_dim() const noexcept { return kind_ == ManifoldKind::Euclidean ? dim_ : dim_ + 1; }

  // (0,...,0,R) on the hyperboloid, (0,...,0,-K) on the sphere, origin otherwise.
  Vector base_coords() const;

  bool operator==(const ManifoldId& other) const noexcept {
    return kind_ == other.kind_ && dim_ == other.dim_ && scale_ == other.scale_;
  }

 private:
  ManifoldKind kind_;
  int dim_;
  double scale_;
};

/// A validated point in ambient coordinates.
class Point {
 public:
  const ManifoldId& manifold() const noexcept { return manifold_; }
  const Vector& coords() const noexcept { return coords_; }

  static Point base(const ManifoldId& manifold) { return Point(manifold, manifold.base_coords()); }

 private:
  Point(ManifoldId manifold, Vector coords) : manifold_(manifold), coords_(std::move(coords)) {}

  friend Point make_point(const ManifoldId&, const Vector&);
  friend Point project_to_manifold(const ManifoldId&, const Vector&);

  ManifoldId manifold_;
  Vector coords_;
};

/// Ambient vector attached to a base point and tangent to the manifold there.
class TangentVector {
 public:
  const Point& base() const noexcept { return base_; }
  const Vector& coords() const noexcept { return coords_; }

 private:
  TangentVector(Point base, Vector coords) : base_(std::move(base)), coords_(std::move(coords)) {}

  friend TangentVector make_tangent(const Point&, const Vector&);
  friend TangentVector project_to_tangent(const Point&, const Vector&);

  Point base_;
  Vector coords_;
};

/// Linear isometry of the ambient space restricted to the manifold: a Lorentz
/// transformation in O+(1,k) for the hyperboloid, an orthogonal matrix for the
/// sphere.
class IsometryMatrix {
 public:
  IsometryMatrix(const ManifoldId& manifold, Matrix entries);

  static IsometryMatrix identity(const ManifoldId& manifold);

  const ManifoldId& manifold() const noexcept { return manifold_; }
  const Matrix& entries() const noexcept { return entries_; }

  IsometryMatrix inverse() const;
  IsometryMatrix operator*(const IsometryMatrix& rhs) const;

 private:
  struct Unchecked {};
  IsometryMatrix(const ManifoldId& manifold, Matrix entries, Unchecked)
      : manifold_(manifold), entries_(std::move(entries)) {}

  friend IsometryMatrix isometry_to(const Point&);

  ManifoldId manifold_;
  Matrix entries_;
};

double minkowski_inner(const Vector& x, const Vector& y);

// The bilinear form that defines the manifold: Minkowski on the hyperboloid,
// Euclidean dot product otherwise.
double ambient_inner(const ManifoldId& manifold, const Vector& x, const Vector& y);

// Norm of a tangent vector under the induced Riemannian metric.
double tangent_norm(const TangentVector& v);

// Residual of the defining equation, relative to the point's magnitude.
double constraint_residual(const ManifoldId& manifold, const Vector& coords);

/// Validates coords as a point of `manifold`. Residuals up to 1e-8 are
/// renormalised away; larger residuals throw InvalidPoint, and the lower
/// sheet of the hyperboloid throws WrongSheet.
Point make_point(const ManifoldId& manifold, const Vector& coords);

/// Radially rescales coords onto the manifold without a tolerance check.
Point project_to_manifold(const ManifoldId& manifold, const Vector& coords);

TangentVector make_tangent(const Point& base, const Vector& coords);
TangentVector project_to_tangent(const Point& base, const Vector& coords);

double geodesic_distance(const Point& a, const Point& b);

Point exp_map(const TangentVector& v);
TangentVector log_map(const Point& p, const Point& q);

TangentVector parallel_transport(const Point& to, const TangentVector& v);

// (u_1, ..., u_k, 0) at the base point.
TangentVector embed_tangent(const Vector& u, const ManifoldId& manifold);

/// The isometry mapping the base point to p that agrees with parallel
/// transport along the minimising geodesic: a boost on the hyperboloid, the
/// rotation in span{p0, p} on the sphere. Undefined at the antipode of p0.
IsometryMatrix isometry_to(const Point& p);

Point apply_isometry(const IsometryMatrix& a, const Point& x);
TangentVector apply_isometry(const IsometryMatrix& a, const TangentVector& v);

}  // namespace geowrap
