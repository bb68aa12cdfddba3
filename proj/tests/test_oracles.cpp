#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "geowrap/oracles.hpp"

using namespace geowrap;
using namespace geowrap::oracles;

namespace {

Vector v2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

Point at(const ManifoldId& m, double a, double b) { return exp_map(embed_tangent(v2(a, b), m)); }

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no geowrap::Error thrown";
  return ErrorCode::InvalidArgument;
}

const double kPi = std::numbers::pi;

}  // namespace

TEST(GridSpec, Validation) {
  EXPECT_EQ(code_of([] { GridSpec({{0.0, 1.0, 1}}); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { GridSpec({{1.0, 1.0, 5}}); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { GridSpec({{0.0, 1.0, 4000}, {0.0, 1.0, 4000}}); }), ErrorCode::GridTooLarge);
  EXPECT_EQ(GridSpec({{0.0, 1.0, 10}, {0.0, 1.0, 20}}).total_points(), 200u);
}

TEST(FdJacobian, Examples) {
  const auto e = ManifoldId::euclidean(2);
  const ChartMap identity = [&](const Vector& u) { return make_point(e, u); };
  EXPECT_NEAR(fd_jacobian_det(identity, v2(0.3, -1.2)), 1.0, 1e-10);

  const auto s = ManifoldId::sphere(2);
  const ChartMap lambert = [&](const Vector& u) { return lambert_forward(s, u); };
  EXPECT_NEAR(fd_jacobian_det(lambert, v2(0.5, 0.3)), 1.0, 1e-6);

  const auto h = ManifoldId::hyperboloid(2);
  const WrappingVariant expv(WrappingKind::ExpParallelTransport, Point::base(h));
  const ChartMap expwrap = [&](const Vector& u) { return wrap(expv, u); };
  EXPECT_NEAR(fd_jacobian_det(expwrap, v2(0.6, 0.8)), std::sinh(1.0), 1e-5);
  EXPECT_NEAR(fd_jacobian_det(expwrap, v2(0.6, 0.8)), std::exp(log_det_jacobian(expv, v2(0.6, 0.8))), 1e-5);
}

TEST(FdJacobian, DomainMargin) {
  const auto s = ManifoldId::sphere(2);
  const ChartMap lambert = [&](const Vector& u) { return lambert_forward(s, u); };
  EXPECT_EQ(code_of([&] { fd_jacobian_det(lambert, v2(1.99999, 0.0), 1e-5, 2.0); }), ErrorCode::InvalidArgument);
  EXPECT_NO_THROW(fd_jacobian_det(lambert, v2(1.9, 0.0), 1e-5, 2.0));
}

TEST(FdJacobian, ScaledManifolds) {
  for (double r : {0.5, 3.0}) {
    const auto s = ManifoldId::sphere(2, r);
    const auto h = ManifoldId::hyperboloid(2, r);
    const ChartMap ls = [&](const Vector& u) { return lambert_forward(s, u); };
    const ChartMap lh = [&](const Vector& u) { return lambert_forward(h, u); };
    EXPECT_NEAR(fd_jacobian_det(ls, v2(0.2 * r, 0.3 * r)), 1.0, 1e-6);
    EXPECT_NEAR(fd_jacobian_det(lh, v2(0.8 * r, -0.4 * r)), 1.0, 1e-6);
  }
}

TEST(GridNormalization, Examples) {
  const auto h = ManifoldId::hyperboloid(2);
  const GridSpec fine({{0.0, 5.0, 801}, {0.0, 2.0 * kPi, 401}});
  const WrappedNormal lam(WrappingVariant(WrappingKind::IsometryLambert, at(h, 0.2, -0.1)),
                          CovarianceSpec::isotropic(2, 0.25));
  EXPECT_NEAR(grid_normalization(lam, fine), 1.0, 1e-3);

  const GridSpec wide({{0.0, 8.5, 1201}, {0.0, 2.0 * kPi, 401}});
  const WrappedNormal expd(WrappingVariant(WrappingKind::ExpParallelTransport, Point::base(h)),
                           CovarianceSpec::isotropic(2, 1.0));
  EXPECT_NEAR(grid_normalization(expd, wide), 1.0, 1e-3);

  const auto s = ManifoldId::sphere(2);
  const GridSpec sphere_grid({{0.0, kPi, 801}, {0.0, 2.0 * kPi, 401}});
  const WrappedNormal trunc(WrappingVariant(WrappingKind::IsometryLambert, at(s, 0.3, 0.3)),
                           CovarianceSpec::isotropic(2, 1.0));
  EXPECT_NEAR(grid_normalization(trunc, sphere_grid), 1.0, 1e-3);
}

TEST(GridNormalization, AreaOfUniformDensity) {
  const auto s = ManifoldId::sphere(2, 2.0);
  const GridSpec g({{0.0, 2.0 * kPi, 401}, {0.0, 2.0 * kPi, 201}});
  EXPECT_NEAR(grid_normalization([](const Point&) { return 0.0; }, s, g), 16.0 * kPi, 1e-3);
  const auto h = ManifoldId::hyperboloid(2);
  const GridSpec disk({{0.0, 1.0, 401}, {0.0, 2.0 * kPi, 201}});
  EXPECT_NEAR(grid_normalization([](const Point&) { return 0.0; }, h, disk), 2.0 * kPi * (std::cosh(1.0) - 1.0),
              1e-4);
  EXPECT_EQ(code_of([&] { grid_normalization([](const Point&) { return 0.0; }, ManifoldId::sphere(3), g); }),
            ErrorCode::InvalidArgument);
}

TEST(PushforwardTv, PassesAndHasPower) {
  Rng rng(1);
  const auto h = ManifoldId::hyperboloid(2);
  const GridSpec bins({{-0.8, 0.8, 16}, {-1.2, 1.2, 16}});
  const WrappingVariant variant(WrappingKind::IsometryLambert, at(h, 0.3, -0.2));
  const WrappedNormal truth(variant, CovarianceSpec::diagonal(v2(0.04, 0.09)));
  EXPECT_LT(pushforward_tv_distance(truth, 100000, bins, rng), 0.02);
  const WrappedNormal doubled(variant, CovarianceSpec::diagonal(v2(0.08, 0.18)));
  EXPECT_GT(pushforward_tv_distance(doubled, truth, 100000, bins, rng), 0.1);
  EXPECT_EQ(code_of([&] { pushforward_tv_distance(truth, 9999, bins, rng); }), ErrorCode::InvalidArgument);
}

TEST(Histogram, SelfDistanceIsZero) {
  Rng rng(2);
  std::normal_distribution<double> g(0.0, 0.5);
  std::vector<Vector> pts;
  for (int i = 0; i < 1000; ++i) pts.push_back(v2(g(rng), g(rng)));
  const GridSpec bins({{-1.0, 1.0, 8}, {-1.0, 1.0, 8}});
  const Histogram a = empirical_histogram(pts, bins);
  EXPECT_EQ(histogram_tv(a, a), 0.0);
  double total = 0.0;
  for (double p : a.probabilities) total += p;
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_EQ(a.probabilities.size(), 65u);
}

TEST(Histogram, AnalyticUniformMass) {
  const GridSpec bins({{0.0, 1.0, 4}, {0.0, 2.0, 4}});
  const Histogram h = analytic_histogram([](const Vector&) { return 0.25; }, bins);
  for (int i = 0; i < 16; ++i) EXPECT_NEAR(h.probabilities[i], 0.5 / 16.0, 1e-14);
  EXPECT_NEAR(h.probabilities.back(), 0.5, 1e-14);
}

TEST(SupNorm, Examples) {
  const Axis circle{-kPi, kPi, 10000};
  auto f = [](double x) { return std::sin(x); };
  EXPECT_EQ(sup_norm_gap(f, f, circle), 0.0);
  auto gap = [&](double kappa) {
    return sup_norm_gap([&](double x) { return std::exp(von_mises_log_pdf({0.0, kappa}, x)); },
                        [&](double x) { return std::exp(-0.5 * kappa * x * x) * std::sqrt(kappa / (2.0 * kPi)); },
                        circle);
  };
  const double g1 = gap(1.0), g10 = gap(10.0), g100 = gap(100.0);
  EXPECT_LT(g100, 0.01);
  EXPECT_GT(g1, g10);
  EXPECT_GT(g10, g100);
}

TEST(LiteralMatrix, IsNotLorentz) {
  const auto h = ManifoldId::hyperboloid(2);
  Vector x(3);
  x << std::sinh(1.0), 0.0, std::cosh(1.0);
  const Point p = make_point(h, x);
  const Matrix a = column_isometry_candidate(p);
  EXPECT_LT((a * Point::base(h).coords() - p.coords()).norm(), 1e-14);
  Matrix j = Matrix::Identity(3, 3);
  j(2, 2) = -1.0;
  EXPECT_GT((a.transpose() * j * a - j).norm(), 0.1);
  const Matrix boost = isometry_to(p).entries();
  EXPECT_LT((boost.transpose() * j * boost - j).norm(), 1e-12);
}

TEST(GeodesicIntegrator, MatchesClosedForms) {
  for (const auto& m : {ManifoldId::hyperboloid(2), ManifoldId::sphere(2), ManifoldId::hyperboloid(2, 2.0),
                        ManifoldId::sphere(3, 0.7)}) {
    const Point p = exp_map(embed_tangent(Vector::Constant(m.dim(), 0.2), m));
    Vector raw = Vector::LinSpaced(m.ambient_dim(), 0.3, -0.5);
    const TangentVector v = project_to_tangent(p, raw);
    EXPECT_LT((integrate_geodesic(v).coords() - exp_map(v).coords()).norm(), 1e-9) << m.dim();
    const TangentVector w = project_to_tangent(p, Vector::LinSpaced(m.ambient_dim(), -0.4, 0.6));
    const Vector moved = integrate_transport(v, w.coords());
    EXPECT_LT((moved - parallel_transport(exp_map(v), w).coords()).norm(), 1e-8) << m.dim();
  }
}
