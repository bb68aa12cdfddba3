#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "geowrap/distributions.hpp"

// Numerical oracles used to check the library against independent
// computations. None of these call log_det_jacobian or the samplers they are
// used to check, except where a sampler is the object under test.
namespace geowrap::oracles {

struct Axis {
  double min;
  double max;
  int count;
};

/// Tensor grid, at most 1e7 points.
class GridSpec {
 public:
  explicit GridSpec(std::vector<Axis> axes);

  const std::vector<Axis>& axes() const noexcept { return axes_; }
  std::size_t total_points() const noexcept;

 private:
  std::vector<Axis> axes_;
};

using ChartMap = std::function<Point(const Vector&)>;
using LogDensity = std::function<double(const Point&)>;

/// |det| of the central-difference Jacobian of `map` at u, measured in an
/// orthonormal frame of the image tangent space: sqrt(det(J^T G J)) with G
/// the ambient bilinear form. When domain_radius is given, u must satisfy
/// |u| + 2h < domain_radius.
double fd_jacobian_det(const ChartMap& map, const Vector& u, double h = 1e-5,
                       std::optional<double> domain_radius = std::nullopt);

/// Trapezoid integral of exp(log_density) over a two-dimensional manifold in
/// geodesic polar coordinates (rho, theta) about p0, using the textbook area
/// element R sinh(rho/R) / K sin(rho/K) / rho.
double grid_normalization(const LogDensity& log_density, const ManifoldId& manifold, const GridSpec& polar_grid);
double grid_normalization(const WrappedNormal& dist, const GridSpec& polar_grid);

/// Binned probabilities on a 2-D chart grid; the final entry holds the mass
/// that falls outside the grid.
struct Histogram {
  std::vector<double> probabilities;
};

Histogram empirical_histogram(const std::vector<Vector>& chart_points, const GridSpec& bins);

/// Bin masses of a density given in chart coordinates, by midpoint
/// quadrature on subcells x subcells points per bin.
Histogram analytic_histogram(const std::function<double(const Vector&)>& chart_density, const GridSpec& bins,
                             int subcells = 4);

double histogram_tv(const Histogram& a, const Histogram& b);

/// TV distance between n draws of `sampler` (unwrapped with the density's
/// variant) and the binned density of `density`. The analytic bin masses use
/// exp(log_pdf(wrap(u))) times a finite-difference area factor.
double pushforward_tv_distance(const WrappedNormal& sampler, const WrappedNormal& density, std::size_t n,
                               const GridSpec& bins, Rng& rng);
inline double pushforward_tv_distance(const WrappedNormal& dist, std::size_t n, const GridSpec& bins, Rng& rng) {
  return pushforward_tv_distance(dist, dist, n, bins, rng);
}

/// max |f - g| over the grid points min + i (max - min) / count, i in [0, count).
double sup_norm_gap(const std::function<double(double)>& f, const std::function<double(double)>& g, const Axis& grid);

/// The column matrix [e_1 | ... | e_k | p]. Maps p0 to p on the unit
/// hyperboloid but is not a Lorentz transformation in general.
Matrix column_isometry_candidate(const Point& p);

/// RK4 integration of the geodesic equation in ambient coordinates from the
/// base of v for unit time.
Point integrate_geodesic(const TangentVector& v, int steps = 20000);

/// RK4 integration of the parallel-transport equation for w along the
/// geodesic t -> exp(t v), t in [0, 1]. Returns the transported ambient vector.
Vector integrate_transport(const TangentVector& v, const Vector& w, int steps = 20000);

}  // namespace geowrap::oracles
