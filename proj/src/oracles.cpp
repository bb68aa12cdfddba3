#include "geowrap/oracles.hpp"

#include <cmath>
#include <numbers>

namespace geowrap::oracles {

namespace {

constexpr std::size_t kMaxGridPoints = 10'000'000;

double axis_point(const Axis& a, int i) { return a.min + (a.max - a.min) * i / (a.count - 1); }

// Trapezoid weights for node i of an axis.
double trapezoid_weight(const Axis& a, int i) {
  const double h = (a.max - a.min) / (a.count - 1);
  return (i == 0 || i == a.count - 1) ? 0.5 * h : h;
}

// Second-order ODE right-hand side x'' = c <x', x'> x, with the sign and
// form set by the manifold.
Vector geodesic_accel(const ManifoldId& m, const Vector& x, const Vector& v) {
  const double s2 = m.scale() * m.scale();
  if (m.kind() == ManifoldKind::Hyperboloid) return (minkowski_inner(v, v) / s2) * x;
  if (m.kind() == ManifoldKind::Sphere) return -(v.squaredNorm() / s2) * x;
  return Vector::Zero(x.size());
}

Vector transport_rate(const ManifoldId& m, const Vector& x, const Vector& v, const Vector& w) {
  const double s2 = m.scale() * m.scale();
  if (m.kind() == ManifoldKind::Hyperboloid) return (minkowski_inner(v, w) / s2) * x;
  if (m.kind() == ManifoldKind::Sphere) return -(v.dot(w) / s2) * x;
  return Vector::Zero(x.size());
}

}  // namespace

GridSpec::GridSpec(std::vector<Axis> axes) : axes_(std::move(axes)) {
  if (axes_.empty()) throw Error(ErrorCode::InvalidArgument, "grid needs at least one axis");
  std::size_t total = 1;
  for (const auto& a : axes_) {
    if (a.count < 2 || !(a.min < a.max)) throw Error(ErrorCode::InvalidArgument, "grid axes need count >= 2 and min < max");
    total *= static_cast<std::size_t>(a.count);
    if (total > kMaxGridPoints) throw Error(ErrorCode::GridTooLarge, "grid exceeds 1e7 points");
  }
}

std::size_t GridSpec::total_points() const noexcept {
  std::size_t total = 1;
  for (const auto& a : axes_) total *= static_cast<std::size_t>(a.count);
  return total;
}

double fd_jacobian_det(const ChartMap& map, const Vector& u, double h, std::optional<double> domain_radius) {
  if (!(h > 0.0)) throw Error(ErrorCode::InvalidArgument, "finite-difference step must be positive");
  if (domain_radius && !(u.norm() + 2.0 * h < *domain_radius)) {
    throw Error(ErrorCode::InvalidArgument, "finite-difference stencil leaves the map's domain");
  }
  const Eigen::Index k = u.size();
  const Point centre = map(u);
  const ManifoldId& m = centre.manifold();
  Matrix jac(m.ambient_dim(), k);
  for (Eigen::Index j = 0; j < k; ++j) {
    Vector plus = u;
    Vector minus = u;
    plus(j) += h;
    minus(j) -= h;
    jac.col(j) = (map(plus).coords() - map(minus).coords()) / (2.0 * h);
  }
  Matrix gram(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = 0; b < k; ++b) gram(a, b) = ambient_inner(m, jac.col(a), jac.col(b));
  }
  return std::sqrt(std::abs(gram.determinant()));
}

double grid_normalization(const LogDensity& log_density, const ManifoldId& manifold, const GridSpec& polar_grid) {
  if (manifold.dim() != 2 || polar_grid.axes().size() != 2) {
    throw Error(ErrorCode::InvalidArgument, "grid_normalization works on two-dimensional manifolds with a (rho, theta) grid");
  }
  const Axis& rho_axis = polar_grid.axes()[0];
  const Axis& theta_axis = polar_grid.axes()[1];
  if (rho_axis.min < 0.0) throw Error(ErrorCode::InvalidArgument, "radial axis must start at >= 0");
  const double s = manifold.scale();
  double total = 0.0;
  for (int i = 0; i < rho_axis.count; ++i) {
    const double rho = axis_point(rho_axis, i);
    double radial = rho;  // circumference / 2 pi at geodesic radius rho
    double height = 0.0;
    switch (manifold.kind()) {
      case ManifoldKind::Hyperboloid:
        radial = s * std::sinh(rho / s);
        height = s * std::cosh(rho / s);
        break;
      case ManifoldKind::Sphere:
        radial = s * std::sin(rho / s);
        height = -s * std::cos(rho / s);
        break;
      case ManifoldKind::Euclidean:
        break;
    }
    if (radial <= 0.0) continue;
    double ring = 0.0;
    for (int j = 0; j < theta_axis.count; ++j) {
      const double theta = axis_point(theta_axis, j);
      Vector x(manifold.ambient_dim());
      x(0) = radial * std::cos(theta);
      x(1) = radial * std::sin(theta);
      if (manifold.kind() != ManifoldKind::Euclidean) x(2) = height;
      const double lp = log_density(project_to_manifold(manifold, x));
      if (std::isfinite(lp)) ring += trapezoid_weight(theta_axis, j) * std::exp(lp);
    }
    total += trapezoid_weight(rho_axis, i) * radial * ring;
  }
  return total;
}

double grid_normalization(const WrappedNormal& dist, const GridSpec& polar_grid) {
  return grid_normalization([&](const Point& z) { return dist.log_pdf(z); }, dist.manifold(), polar_grid);
}

Histogram empirical_histogram(const std::vector<Vector>& chart_points, const GridSpec& bins) {
  if (bins.axes().size() != 2) throw Error(ErrorCode::InvalidArgument, "histograms are two-dimensional");
  const Axis& ax = bins.axes()[0];
  const Axis& ay = bins.axes()[1];
  Histogram h;
  h.probabilities.assign(static_cast<std::size_t>(ax.count) * ay.count + 1, 0.0);
  if (chart_points.empty()) return h;
  const double inc = 1.0 / static_cast<double>(chart_points.size());
  for (const auto& u : chart_points) {
    const double fx = (u(0) - ax.min) / (ax.max - ax.min) * ax.count;
    const double fy = (u(1) - ay.min) / (ay.max - ay.min) * ay.count;
    if (fx >= 0.0 && fx < ax.count && fy >= 0.0 && fy < ay.count) {
      h.probabilities[static_cast<std::size_t>(fx) * ay.count + static_cast<std::size_t>(fy)] += inc;
    } else {
      h.probabilities.back() += inc;
    }
  }
  return h;
}

Histogram analytic_histogram(const std::function<double(const Vector&)>& chart_density, const GridSpec& bins,
                             int subcells) {
  if (bins.axes().size() != 2) throw Error(ErrorCode::InvalidArgument, "histograms are two-dimensional");
  const Axis& ax = bins.axes()[0];
  const Axis& ay = bins.axes()[1];
  const double wx = (ax.max - ax.min) / ax.count;
  const double wy = (ay.max - ay.min) / ay.count;
  const double cell = wx * wy / (subcells * subcells);
  Histogram h;
  h.probabilities.assign(static_cast<std::size_t>(ax.count) * ay.count + 1, 0.0);
  double inside = 0.0;
  Vector u(2);
  for (int i = 0; i < ax.count; ++i) {
    for (int j = 0; j < ay.count; ++j) {
      double mass = 0.0;
      for (int a = 0; a < subcells; ++a) {
        for (int b = 0; b < subcells; ++b) {
          u(0) = ax.min + wx * (i + (a + 0.5) / subcells);
          u(1) = ay.min + wy * (j + (b + 0.5) / subcells);
          mass += chart_density(u) * cell;
        }
      }
      h.probabilities[static_cast<std::size_t>(i) * ay.count + j] = mass;
      inside += mass;
    }
  }
  h.probabilities.back() = std::max(0.0, 1.0 - inside);
  return h;
}

double histogram_tv(const Histogram& a, const Histogram& b) {
  if (a.probabilities.size() != b.probabilities.size()) {
    throw Error(ErrorCode::InvalidArgument, "histograms have different binning");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < a.probabilities.size(); ++i) total += std::abs(a.probabilities[i] - b.probabilities[i]);
  return 0.5 * total;
}

double pushforward_tv_distance(const WrappedNormal& sampler, const WrappedNormal& density, std::size_t n,
                               const GridSpec& bins, Rng& rng) {
  if (n < 10'000) throw Error(ErrorCode::InvalidArgument, "pushforward_tv_distance needs n >= 1e4");
  const WrappingVariant& variant = density.variant();
  std::vector<Vector> chart;
  chart.reserve(n);
  for (const auto& z : sampler.sample(rng, n)) chart.push_back(unwrap(variant, z));
  const Histogram empirical = empirical_histogram(chart, bins);

  const double domain = variant.domain_radius();
  const ChartMap map = [&](const Vector& u) { return wrap(variant, u); };
  const Histogram analytic = analytic_histogram(
      [&](const Vector& u) {
        constexpr double h = 1e-5;
        if (!(u.norm() + 2.0 * h < domain)) return 0.0;
        const double lp = density.log_pdf(wrap(variant, u));
        if (!std::isfinite(lp)) return 0.0;
        return std::exp(lp) * fd_jacobian_det(map, u, h);
      },
      bins);
  return histogram_tv(empirical, analytic);
}

double sup_norm_gap(const std::function<double(double)>& f, const std::function<double(double)>& g, const Axis& grid) {
  if (grid.count < 2 || !(grid.min < grid.max)) throw Error(ErrorCode::InvalidArgument, "bad grid axis");
  double gap = 0.0;
  for (int i = 0; i < grid.count; ++i) {
    const double x = grid.min + (grid.max - grid.min) * i / grid.count;
    gap = std::max(gap, std::abs(f(x) - g(x)));
  }
  return gap;
}

Matrix column_isometry_candidate(const Point& p) {
  const int n = p.manifold().ambient_dim();
  Matrix a = Matrix::Identity(n, n);
  a.col(n - 1) = p.coords();
  return a;
}

Point integrate_geodesic(const TangentVector& v, int steps) {
  const ManifoldId& m = v.base().manifold();
  Vector x = v.base().coords();
  Vector dx = v.coords();
  const double h = 1.0 / steps;
  for (int s = 0; s < steps; ++s) {
    const Vector k1x = dx, k1v = geodesic_accel(m, x, dx);
    const Vector k2x = dx + 0.5 * h * k1v, k2v = geodesic_accel(m, x + 0.5 * h * k1x, dx + 0.5 * h * k1v);
    const Vector k3x = dx + 0.5 * h * k2v, k3v = geodesic_accel(m, x + 0.5 * h * k2x, dx + 0.5 * h * k2v);
    const Vector k4x = dx + h * k3v, k4v = geodesic_accel(m, x + h * k3x, dx + h * k3v);
    x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    dx += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
  }
  return project_to_manifold(m, x);
}

Vector integrate_transport(const TangentVector& v, const Vector& w0, int steps) {
  const ManifoldId& m = v.base().manifold();
  // State: position x, velocity dx, transported vector w.
  Vector x = v.base().coords();
  Vector dx = v.coords();
  Vector w = w0;
  const double h = 1.0 / steps;
  for (int s = 0; s < steps; ++s) {
    const Vector k1x = dx, k1v = geodesic_accel(m, x, dx), k1w = transport_rate(m, x, dx, w);
    const Vector x2 = x + 0.5 * h * k1x, v2 = dx + 0.5 * h * k1v, w2 = w + 0.5 * h * k1w;
    const Vector k2x = v2, k2v = geodesic_accel(m, x2, v2), k2w = transport_rate(m, x2, v2, w2);
    const Vector x3 = x + 0.5 * h * k2x, v3 = dx + 0.5 * h * k2v, w3 = w + 0.5 * h * k2w;
    const Vector k3x = v3, k3v = geodesic_accel(m, x3, v3), k3w = transport_rate(m, x3, v3, w3);
    const Vector x4 = x + h * k3x, v4 = dx + h * k3v, w4 = w + h * k3w;
    const Vector k4x = v4, k4v = geodesic_accel(m, x4, v4), k4w = transport_rate(m, x4, v4, w4);
    x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    dx += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    w += h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
  }
  return w;
}

}  // namespace geowrap::oracles
