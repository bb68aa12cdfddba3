#include "geowrap/manifold.hpp"

#include <cmath>
#include <string>

namespace geowrap {

namespace {

constexpr double kRenormalizeTolerance = 1e-8;
constexpr double kDriftTolerance = 1e-12;
constexpr double kIsometryTolerance = 1e-9;

bool is_embedded(const ManifoldId& m) { return m.kind() != ManifoldKind::Euclidean; }

void require_same_manifold(const ManifoldId& a, const ManifoldId& b, const char* what) {
  if (!(a == b)) throw Error(ErrorCode::InvalidArgument, std::string(what) + ": manifold mismatch");
}

void require_length(const ManifoldId& m, const Vector& coords, const char* what) {
  if (coords.size() != m.ambient_dim()) {
    throw Error(ErrorCode::InvalidArgument, std::string(what) + ": expected " + std::to_string(m.ambient_dim()) +
                                                " coordinates, got " + std::to_string(coords.size()));
  }
}

// Signature matrix diag(1,...,1,-1).
Matrix minkowski_signature(int n) {
  Matrix j = Matrix::Identity(n, n);
  j(n - 1, n - 1) = -1.0;
  return j;
}

}  // namespace

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::InvalidPoint: return "invalid-point";
    case ErrorCode::WrongSheet: return "wrong-sheet";
    case ErrorCode::UndefinedLog: return "undefined-log";
    case ErrorCode::UndefinedTransport: return "undefined-transport";
    case ErrorCode::UndefinedIsometry: return "undefined-isometry";
    case ErrorCode::OutOfDomain: return "out-of-domain";
    case ErrorCode::TruncationInfeasible: return "truncation-infeasible";
    case ErrorCode::DegenerateMixture: return "degenerate-mixture";
    case ErrorCode::GridTooLarge: return "grid-too-large";
    case ErrorCode::DataError: return "data-error";
  }
  return "unknown";
}

std::string_view to_string(ManifoldKind kind) {
  switch (kind) {
    case ManifoldKind::Hyperboloid: return "hyperboloid";
    case ManifoldKind::Sphere: return "sphere";
    case ManifoldKind::Euclidean: return "euclidean";
  }
  return "unknown";
}

ManifoldKind manifold_kind_from_string(std::string_view name) {
  if (name == "hyperboloid") return ManifoldKind::Hyperboloid;
  if (name == "sphere") return ManifoldKind::Sphere;
  if (name == "euclidean") return ManifoldKind::Euclidean;
  throw Error(ErrorCode::InvalidArgument, "unknown manifold kind '" + std::string(name) + "'");
}

ManifoldId::ManifoldId(ManifoldKind kind, int dim, double scale) : kind_(kind), dim_(dim), scale_(scale) {
  if (dim < 1) throw Error(ErrorCode::InvalidArgument, "manifold dimension must be >= 1");
  if (!(scale > 0.0) || !std::isfinite(scale)) throw Error(ErrorCode::InvalidArgument, "manifold scale must be > 0");
}

double ManifoldId::curvature() const noexcept {
  switch (kind_) {
    case ManifoldKind::Hyperboloid: return -1.0 / (scale_ * scale_);
    case ManifoldKind::Sphere: return 1.0 / (scale_ * scale_);
    case ManifoldKind::Euclidean: return 0.0;
  }
  return 0.0;
}

Vector ManifoldId::base_coords() const {
  Vector c = Vector::Zero(ambient_dim());
  if (kind_ == ManifoldKind::Hyperboloid) c(dim_) = scale_;
  if (kind_ == ManifoldKind::Sphere) c(dim_) = -scale_;
  return c;
}

double minkowski_inner(const Vector& x, const Vector& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "minkowski_inner: vectors must have equal length >= 2");
  }
  const Eigen::Index n = x.size() - 1;
  return x.head(n).dot(y.head(n)) - x(n) * y(n);
}

double ambient_inner(const ManifoldId& manifold, const Vector& x, const Vector& y) {
  if (manifold.kind() == ManifoldKind::Hyperboloid) return minkowski_inner(x, y);
  return x.dot(y);
}

double tangent_norm(const TangentVector& v) {
  return std::sqrt(std::max(0.0, ambient_inner(v.base().manifold(), v.coords(), v.coords())));
}

double constraint_residual(const ManifoldId& manifold, const Vector& coords) {
  const double r2 = manifold.scale() * manifold.scale();
  switch (manifold.kind()) {
    case ManifoldKind::Hyperboloid:
      return std::abs(minkowski_inner(coords, coords) + r2) / std::max(r2, coords.squaredNorm());
    case ManifoldKind::Sphere:
      return std::abs(coords.squaredNorm() - r2) / r2;
    case ManifoldKind::Euclidean:
      return 0.0;
  }
  return 0.0;
}

Point project_to_manifold(const ManifoldId& manifold, const Vector& coords) {
  require_length(manifold, coords, "project_to_manifold");
  if (!coords.allFinite()) throw Error(ErrorCode::InvalidPoint, "non-finite coordinates");
  const int k = manifold.dim();
  const double s = manifold.scale();
  switch (manifold.kind()) {
    case ManifoldKind::Hyperboloid: {
      if (!(coords(k) > 0.0)) throw Error(ErrorCode::WrongSheet, "last coordinate must be positive");
      if (constraint_residual(manifold, coords) <= kDriftTolerance) return Point(manifold, coords);
      // Recompute the time coordinate from the spatial part; better conditioned
      // than a radial rescale for points far from the vertex.
      Vector fixed = coords;
      fixed(k) = std::sqrt(s * s + coords.head(k).squaredNorm());
      return Point(manifold, std::move(fixed));
    }
    case ManifoldKind::Sphere: {
      if (constraint_residual(manifold, coords) <= kDriftTolerance) return Point(manifold, coords);
      const double n = coords.norm();
      if (n == 0.0) throw Error(ErrorCode::InvalidPoint, "cannot project the origin onto the sphere");
      return Point(manifold, coords * (s / n));
    }
    case ManifoldKind::Euclidean:
      return Point(manifold, coords);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown manifold kind");
}

Point make_point(const ManifoldId& manifold, const Vector& coords) {
  require_length(manifold, coords, "make_point");
  if (!coords.allFinite()) throw Error(ErrorCode::InvalidPoint, "non-finite coordinates");
  if (manifold.kind() == ManifoldKind::Hyperboloid && !(coords(manifold.dim()) > 0.0)) {
    throw Error(ErrorCode::WrongSheet, "point lies on the lower sheet of the hyperboloid");
  }
  if (constraint_residual(manifold, coords) > kRenormalizeTolerance) {
    throw Error(ErrorCode::InvalidPoint, "coordinates violate the manifold constraint");
  }
  return project_to_manifold(manifold, coords);
}

TangentVector project_to_tangent(const Point& base, const Vector& coords) {
  const ManifoldId& m = base.manifold();
  require_length(m, coords, "project_to_tangent");
  if (!is_embedded(m)) return TangentVector(base, coords);
  const Vector& p = base.coords();
  const double pp = ambient_inner(m, p, p);
  const double pv = ambient_inner(m, p, coords);
  return TangentVector(base, coords - (pv / pp) * p);
}

TangentVector make_tangent(const Point& base, const Vector& coords) {
  const ManifoldId& m = base.manifold();
  require_length(m, coords, "make_tangent");
  if (!coords.allFinite()) throw Error(ErrorCode::InvalidArgument, "non-finite tangent coordinates");
  if (is_embedded(m)) {
    const double pv = ambient_inner(m, base.coords(), coords);
    const double scale = std::max(1.0, base.coords().norm() * coords.norm());
    if (std::abs(pv) > kRenormalizeTolerance * scale) {
      throw Error(ErrorCode::InvalidArgument, "vector is not tangent at the base point");
    }
  }
  return project_to_tangent(base, coords);
}

double geodesic_distance(const Point& a, const Point& b) {
  require_same_manifold(a.manifold(), b.manifold(), "geodesic_distance");
  const ManifoldId& m = a.manifold();
  const double s = m.scale();
  const Vector diff = a.coords() - b.coords();
  switch (m.kind()) {
    case ManifoldKind::Hyperboloid: {
      const double c = -minkowski_inner(a.coords(), b.coords()) / (s * s);
      if (c > 2.0) return s * std::acosh(c);
      // Chord form: <a-b, a-b> = 4 R^2 sinh^2(d / 2R); accurate for nearby points.
      const double chord = std::sqrt(std::max(0.0, minkowski_inner(diff, diff)));
      return 2.0 * s * std::asinh(chord / (2.0 * s));
    }
    case ManifoldKind::Sphere: {
      const Vector sum = a.coords() + b.coords();
      return 2.0 * s * std::atan2(diff.norm(), sum.norm());
    }
    case ManifoldKind::Euclidean:
      return diff.norm();
  }
  return 0.0;
}

Point exp_map(const TangentVector& v) {
  const Point& p = v.base();
  const ManifoldId& m = p.manifold();
  const double s = m.scale();
  if (m.kind() == ManifoldKind::Euclidean) return project_to_manifold(m, p.coords() + v.coords());
  const double n = tangent_norm(v);
  if (n == 0.0) return p;
  const double t = n / s;
  Vector out;
  if (m.kind() == ManifoldKind::Hyperboloid) {
    out = std::cosh(t) * p.coords() + (s * std::sinh(t) / n) * v.coords();
  } else {
    out = std::cos(t) * p.coords() + (s * std::sin(t) / n) * v.coords();
  }
  return project_to_manifold(m, out);
}

TangentVector log_map(const Point& p, const Point& q) {
  require_same_manifold(p.manifold(), q.manifold(), "log_map");
  const ManifoldId& m = p.manifold();
  const double s = m.scale();
  const Vector diff = q.coords() - p.coords();
  if (m.kind() == ManifoldKind::Euclidean) return project_to_tangent(p, diff);
  if (m.kind() == ManifoldKind::Sphere && (p.coords() + q.coords()).norm() <= 1e-12 * s) {
    throw Error(ErrorCode::UndefinedLog, "log map undefined at the antipode");
  }
  // Component of q - p orthogonal to p: R sinh(d/R) (resp. K sin(d/K)) times
  // the unit initial direction.
  const double pp = ambient_inner(m, p.coords(), p.coords());
  Vector w = diff - (ambient_inner(m, p.coords(), diff) / pp) * p.coords();
  const double wn = std::sqrt(std::max(0.0, ambient_inner(m, w, w)));
  if (wn == 0.0) return project_to_tangent(p, Vector::Zero(m.ambient_dim()));
  const double d = geodesic_distance(p, q);
  return project_to_tangent(p, w * (d / wn));
}

TangentVector parallel_transport(const Point& to, const TangentVector& v) {
  const Point& from = v.base();
  require_same_manifold(from.manifold(), to.manifold(), "parallel_transport");
  const ManifoldId& m = to.manifold();
  if (m.kind() == ManifoldKind::Euclidean) return project_to_tangent(to, v.coords());
  const double s2 = m.scale() * m.scale();
  const Vector& x = from.coords();
  const Vector& y = to.coords();
  const double yv = ambient_inner(m, y, v.coords());
  Vector out;
  if (m.kind() == ManifoldKind::Hyperboloid) {
    out = v.coords() + (yv / (s2 - minkowski_inner(x, y))) * (x + y);
  } else {
    const double denom = s2 + x.dot(y);
    if (denom <= 1e-12 * s2) throw Error(ErrorCode::UndefinedTransport, "transport to the antipode is undefined");
    out = v.coords() - (yv / denom) * (x + y);
  }
  return project_to_tangent(to, out);
}

TangentVector embed_tangent(const Vector& u, const ManifoldId& manifold) {
  if (u.size() != manifold.dim()) throw Error(ErrorCode::InvalidArgument, "embed_tangent: expected k coordinates");
  Vector coords = Vector::Zero(manifold.ambient_dim());
  coords.head(manifold.dim()) = u;
  return project_to_tangent(Point::base(manifold), coords);
}

IsometryMatrix::IsometryMatrix(const ManifoldId& manifold, Matrix entries)
    : manifold_(manifold), entries_(std::move(entries)) {
  const int n = manifold.ambient_dim();
  if (!is_embedded(manifold)) throw Error(ErrorCode::InvalidArgument, "isometry matrices need an embedded manifold");
  if (entries_.rows() != n || entries_.cols() != n) throw Error(ErrorCode::InvalidArgument, "isometry: wrong shape");
  const double scale = std::max(1.0, entries_.squaredNorm());
  double defect = 0.0;
  if (manifold.kind() == ManifoldKind::Hyperboloid) {
    const Matrix j = minkowski_signature(n);
    defect = (entries_.transpose() * j * entries_ - j).cwiseAbs().maxCoeff();
    if (!(entries_(n - 1, n - 1) > 0.0)) throw Error(ErrorCode::InvalidArgument, "isometry swaps hyperboloid sheets");
  } else {
    defect = (entries_.transpose() * entries_ - Matrix::Identity(n, n)).cwiseAbs().maxCoeff();
  }
  if (defect > kIsometryTolerance * scale) {
    throw Error(ErrorCode::InvalidArgument, "matrix does not preserve the defining bilinear form");
  }
  if (std::abs(std::abs(entries_.determinant()) - 1.0) > kIsometryTolerance * scale) {
    throw Error(ErrorCode::InvalidArgument, "isometry determinant is not +-1");
  }
}

IsometryMatrix IsometryMatrix::identity(const ManifoldId& manifold) {
  return IsometryMatrix(manifold, Matrix::Identity(manifold.ambient_dim(), manifold.ambient_dim()));
}

IsometryMatrix IsometryMatrix::inverse() const {
  if (manifold_.kind() == ManifoldKind::Hyperboloid) {
    const Matrix j = minkowski_signature(manifold_.ambient_dim());
    return IsometryMatrix(manifold_, j * entries_.transpose() * j, Unchecked{});
  }
  return IsometryMatrix(manifold_, entries_.transpose(), Unchecked{});
}

IsometryMatrix IsometryMatrix::operator*(const IsometryMatrix& rhs) const {
  require_same_manifold(manifold_, rhs.manifold_, "isometry composition");
  return IsometryMatrix(manifold_, entries_ * rhs.entries_, Unchecked{});
}

IsometryMatrix isometry_to(const Point& p) {
  const ManifoldId& m = p.manifold();
  if (!is_embedded(m)) throw Error(ErrorCode::InvalidArgument, "isometry_to needs a hyperboloid or sphere");
  const int k = m.dim();
  const double s = m.scale();
  const Vector spatial = p.coords().head(k);
  const double last = p.coords()(k);
  Matrix a(k + 1, k + 1);
  if (m.kind() == ManifoldKind::Hyperboloid) {
    // Boost along the p0 -> p geodesic.
    a.topLeftCorner(k, k) = Matrix::Identity(k, k) + spatial * spatial.transpose() / (s * (s + last));
    a.topRightCorner(k, 1) = spatial / s;
    a.bottomLeftCorner(1, k) = spatial.transpose() / s;
    a(k, k) = last / s;
  } else {
    // Rotation in span{p0, p}, identity on the orthogonal complement.
    const double denom = s * (s - last);
    if (denom <= 1e-12 * s * s) throw Error(ErrorCode::UndefinedIsometry, "no canonical isometry to the antipode");
    a.topLeftCorner(k, k) = Matrix::Identity(k, k) - spatial * spatial.transpose() / denom;
    a.topRightCorner(k, 1) = -spatial / s;
    a.bottomLeftCorner(1, k) = spatial.transpose() / s;
    a(k, k) = -last / s;
  }
  return IsometryMatrix(m, std::move(a), IsometryMatrix::Unchecked{});
}

Point apply_isometry(const IsometryMatrix& a, const Point& x) {
  require_same_manifold(a.manifold(), x.manifold(), "apply_isometry");
  return project_to_manifold(x.manifold(), a.entries() * x.coords());
}

TangentVector apply_isometry(const IsometryMatrix& a, const TangentVector& v) {
  const Point base = apply_isometry(a, v.base());
  return project_to_tangent(base, a.entries() * v.coords());
}

}  // namespace geowrap
