#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "geowrap/chart.hpp"
#include "geowrap/oracles.hpp"

using namespace geowrap;

namespace {

constexpr double kPi = std::numbers::pi;

Vector v3(double a, double b, double c) {
  Vector v(3);
  v << a, b, c;
  return v;
}

Vector v2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

Vector disk_point(std::mt19937_64& rng, double radius) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double r = radius * std::sqrt(unif(rng));
  const double t = 2.0 * kPi * unif(rng);
  return v2(r * std::cos(t), r * std::sin(t));
}

Point random_location(const ManifoldId& m, std::mt19937_64& rng) {
  return exp_map(embed_tangent(disk_point(rng, 1.2 * std::min(1.0, m.scale())), m));
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no geowrap::Error thrown";
  return ErrorCode::InvalidArgument;
}

const WrappingKind kKinds[] = {WrappingKind::ExpParallelTransport, WrappingKind::IsometryExp,
                               WrappingKind::IsometryLambert};

}  // namespace

TEST(Lambert, ForwardExamples) {
  const auto s = ManifoldId::sphere(2);
  const auto h = ManifoldId::hyperboloid(2);
  EXPECT_TRUE(lambert_forward(s, v2(0, 0)).coords().isApprox(v3(0, 0, -1)));
  EXPECT_LT((lambert_forward(s, v2(std::sqrt(2.0), 0)).coords() - v3(1, 0, 0)).norm(), 1e-15);
  const double r = 2.0 * std::sinh(0.5);
  EXPECT_LT((lambert_forward(h, v2(r, 0)).coords() - v3(std::sinh(1.0), 0, std::cosh(1.0))).norm(), 1e-14);
  EXPECT_EQ(code_of([&] { lambert_forward(s, v2(2.0, 0)); }), ErrorCode::OutOfDomain);
  EXPECT_EQ(code_of([&] { lambert_forward(ManifoldId::sphere(3), Vector::Zero(3)); }), ErrorCode::InvalidArgument);
}

TEST(Lambert, InverseExamples) {
  const auto s = ManifoldId::sphere(2);
  EXPECT_EQ(lambert_inverse(Point::base(s)).norm(), 0.0);
  EXPECT_LT((lambert_inverse(make_point(s, v3(1, 0, 0))) - v2(std::sqrt(2.0), 0)).norm(), 1e-15);
  EXPECT_EQ(code_of([&] { lambert_inverse(make_point(s, v3(0, 0, 1))); }), ErrorCode::OutOfDomain);
}

TEST(Lambert, RoundTrip) {
  std::mt19937_64 rng(1);
  for (const auto& m : {ManifoldId::sphere(2, 1.0), ManifoldId::sphere(2, 2.5), ManifoldId::hyperboloid(2, 1.0),
                        ManifoldId::hyperboloid(2, 0.5)}) {
    const double radius = m.kind() == ManifoldKind::Sphere ? 1.99 * m.scale() : 4.0;
    for (int i = 0; i < 200; ++i) {
      const Vector u = disk_point(rng, radius);
      const Point z = lambert_forward(m, u);
      EXPECT_LT((lambert_inverse(z) - u).norm(), 1e-9);
      EXPECT_LT((lambert_forward(m, lambert_inverse(z)).coords() - z.coords()).norm(), 1e-9);
    }
  }
}

TEST(Lambert, UnitJacobian) {
  std::mt19937_64 rng(2);
  for (const auto& m : {ManifoldId::sphere(2, 1.0), ManifoldId::hyperboloid(2, 1.0), ManifoldId::sphere(2, 3.0),
                        ManifoldId::hyperboloid(2, 0.7)}) {
    const bool sphere = m.kind() == ManifoldKind::Sphere;
    const double domain = sphere ? 2.0 * m.scale() : 1e300;
    for (int i = 0; i < 100; ++i) {
      const Vector u = disk_point(rng, sphere ? domain - 1e-3 : 3.0);
      const double det =
          oracles::fd_jacobian_det([&](const Vector& x) { return lambert_forward(m, x); }, u, 1e-5, domain);
      EXPECT_NEAR(det, 1.0, 1e-6);
    }
  }
}

// Fraction of uniform chart draws that land in a geodesic ball, against the
// ball's closed-form area.
TEST(Lambert, MonteCarloAreaOfGeodesicBall) {
  std::mt19937_64 rng(3);
  for (const auto& m : {ManifoldId::sphere(2, 1.0), ManifoldId::hyperboloid(2, 1.0)}) {
    const double a = 1.5;
    const double disk_area = kPi * a * a;
    const Point centre = lambert_forward(m, v2(0.3, -0.2));
    const double s = 0.9;
    const double ball_area = m.kind() == ManifoldKind::Sphere ? 2.0 * kPi * (1.0 - std::cos(s))
                                                              : 2.0 * kPi * (std::cosh(s) - 1.0);
    const int n = 1000000;
    int inside = 0;
    for (int i = 0; i < n; ++i) {
      if (geodesic_distance(lambert_forward(m, disk_point(rng, a)), centre) < s) ++inside;
    }
    const double estimate = disk_area * inside / n;
    EXPECT_NEAR(estimate / ball_area, 1.0, 0.005) << to_string(m.kind());
  }
}

// The literal sinh(2 sinh(.)) radial law is not area preserving.
TEST(Lambert, LiteralHyperboloidLawFailsJacobian) {
  const auto h = ManifoldId::hyperboloid(2);
  const auto literal = [&](const Vector& u) {
    const double r = u.norm();
    const double bad = std::sinh(2.0 * std::sinh(r / 2.0));
    Vector x(3);
    x << bad * u(0) / r, bad * u(1) / r, std::sqrt(1.0 + bad * bad);
    return make_point(h, x);
  };
  EXPECT_GT(std::abs(oracles::fd_jacobian_det(literal, v2(0.8, 0.5)) - 1.0), 0.1);
}

TEST(Wrap, Examples) {
  const auto h = ManifoldId::hyperboloid(2);
  std::mt19937_64 rng(4);
  for (WrappingKind kind : kKinds) {
    const Point p = random_location(h, rng);
    const WrappingVariant variant(kind, p);
    EXPECT_LT((wrap(variant, v2(0, 0)).coords() - p.coords()).norm(), 1e-12);
    EXPECT_LT(unwrap(variant, p).norm(), 1e-14);
  }
  const WrappingVariant at_base(WrappingKind::ExpParallelTransport, Point::base(h));
  EXPECT_LT((wrap(at_base, v2(1, 0)).coords() - v3(std::sinh(1.0), 0, std::cosh(1.0))).norm(), 1e-14);
}

TEST(Wrap, ExpVariantsCoincideOnHyperboloid) {
  std::mt19937_64 rng(5);
  const auto h = ManifoldId::hyperboloid(2, 1.0);
  for (int i = 0; i < 100; ++i) {
    const Point p = random_location(h, rng);
    const Vector u = disk_point(rng, 3.0);
    const Point a = wrap(WrappingVariant(WrappingKind::ExpParallelTransport, p), u);
    const Point b = wrap(WrappingVariant(WrappingKind::IsometryExp, p), u);
    EXPECT_LT((a.coords() - b.coords()).norm(), 1e-9 * std::max(1.0, a.coords().norm()));
  }
}

TEST(Wrap, RoundTripAllVariants) {
  std::mt19937_64 rng(6);
  for (const auto& m : {ManifoldId::hyperboloid(2, 1.0), ManifoldId::sphere(2, 1.0), ManifoldId::sphere(2, 2.0),
                        ManifoldId::hyperboloid(2, 3.0)}) {
    for (WrappingKind kind : kKinds) {
      for (int i = 0; i < 200; ++i) {
        const WrappingVariant variant(kind, random_location(m, rng));
        const double radius = std::min(0.95 * variant.domain_radius(), 3.0);
        const Vector u = disk_point(rng, radius);
        const Point z = wrap(variant, u);
        EXPECT_LT((unwrap(variant, z) - u).norm(), 1e-8 * std::max(1.0, u.norm()));
        EXPECT_LT((wrap(variant, unwrap(variant, z)).coords() - z.coords()).norm(), 1e-9);
      }
    }
  }
}

TEST(Wrap, HigherDimensionalExpVariants) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0.0, 0.6);
  for (const auto& m : {ManifoldId::hyperboloid(4, 1.0), ManifoldId::sphere(3, 1.0)}) {
    for (WrappingKind kind : {WrappingKind::ExpParallelTransport, WrappingKind::IsometryExp}) {
      Vector loc(m.dim()), u(m.dim());
      for (int i = 0; i < m.dim(); ++i) {
        loc(i) = g(rng);
        u(i) = g(rng);
      }
      const WrappingVariant variant(kind, exp_map(embed_tangent(loc, m)));
      EXPECT_LT((unwrap(variant, wrap(variant, u)) - u).norm(), 1e-9);
    }
  }
  EXPECT_EQ(code_of([] { WrappingVariant(WrappingKind::IsometryLambert, Point::base(ManifoldId::hyperboloid(3))); }),
            ErrorCode::InvalidArgument);
}

TEST(Wrap, DomainErrors) {
  const auto s = ManifoldId::sphere(2, 1.0);
  const WrappingVariant lam(WrappingKind::IsometryLambert, Point::base(s));
  const WrappingVariant ex(WrappingKind::IsometryExp, Point::base(s));
  EXPECT_DOUBLE_EQ(lam.domain_radius(), 2.0);
  EXPECT_DOUBLE_EQ(ex.domain_radius(), kPi);
  EXPECT_EQ(code_of([&] { wrap(lam, v2(2.0, 0)); }), ErrorCode::OutOfDomain);
  EXPECT_EQ(code_of([&] { wrap(ex, v2(0, 3.2)); }), ErrorCode::OutOfDomain);
  EXPECT_EQ(code_of([&] { unwrap(ex, make_point(s, v3(0, 0, 1))); }), ErrorCode::OutOfDomain);
  EXPECT_EQ(code_of([&] { WrappingVariant(WrappingKind::IsometryExp, make_point(s, v3(0, 0, 1))); }),
            ErrorCode::UndefinedIsometry);
  EXPECT_TRUE(std::isinf(WrappingVariant(WrappingKind::IsometryExp, Point::base(ManifoldId::hyperboloid(2)))
                             .domain_radius()));
}

TEST(Wrap, Injective) {
  std::mt19937_64 rng(8);
  for (const auto& m : {ManifoldId::sphere(2), ManifoldId::hyperboloid(2)}) {
    for (WrappingKind kind : kKinds) {
      const WrappingVariant variant(kind, random_location(m, rng));
      const double radius = std::min(0.999 * variant.domain_radius(), 4.0);
      double min_dist = 1e300;
      for (int i = 0; i < 10000; ++i) {
        const Vector a = disk_point(rng, radius);
        Vector b = disk_point(rng, radius);
        if ((a - b).norm() == 0.0) continue;
        min_dist = std::min(min_dist, geodesic_distance(wrap(variant, a), wrap(variant, b)));
      }
      EXPECT_GT(min_dist, 0.0);
    }
  }
}

TEST(LogDetJacobian, Examples) {
  const auto h = ManifoldId::hyperboloid(2);
  const auto s = ManifoldId::sphere(2);
  for (WrappingKind kind : kKinds) {
    EXPECT_EQ(log_det_jacobian(WrappingVariant(kind, Point::base(h)), v2(0, 0)), 0.0);
  }
  EXPECT_NEAR(log_det_jacobian(WrappingVariant(WrappingKind::ExpParallelTransport, Point::base(h)), v2(0.6, 0.8)),
              0.161439, 1e-6);
  EXPECT_EQ(log_det_jacobian(WrappingVariant(WrappingKind::IsometryLambert, Point::base(s)), v2(1.2, 0.3)), 0.0);
  EXPECT_NEAR(log_det_jacobian(WrappingVariant(WrappingKind::IsometryExp, Point::base(s)), v2(1.0, 0.0)),
              std::log(std::sin(1.0)), 1e-14);
  // Series branch near the origin stays continuous.
  const WrappingVariant ex(WrappingKind::IsometryExp, Point::base(h));
  EXPECT_NEAR(log_det_jacobian(ex, v2(1e-7, 0)), 1e-14 / 6.0, 1e-20);
  const auto h4 = ManifoldId::hyperboloid(4, 2.0);
  Vector u(4);
  u << 1, 1, 1, 1;
  EXPECT_NEAR(log_det_jacobian(WrappingVariant(WrappingKind::IsometryExp, Point::base(h4)), u),
              3.0 * std::log(std::sinh(1.0)), 1e-13);
}

TEST(LogDetJacobian, MatchesFiniteDifferences) {
  std::mt19937_64 rng(9);
  for (const auto& m : {ManifoldId::hyperboloid(2, 1.0), ManifoldId::sphere(2, 1.0), ManifoldId::hyperboloid(2, 2.0)}) {
    for (WrappingKind kind : {WrappingKind::ExpParallelTransport, WrappingKind::IsometryExp}) {
      for (int i = 0; i < 100; ++i) {
        const WrappingVariant variant(kind, random_location(m, rng));
        const Vector u = disk_point(rng, std::min(0.9 * variant.domain_radius(), 3.0));
        const double det = oracles::fd_jacobian_det([&](const Vector& x) { return wrap(variant, x); }, u);
        const double expected = std::exp(log_det_jacobian(variant, u));
        EXPECT_NEAR(det / expected, 1.0, 1e-6);
      }
    }
  }
}

TEST(CurvatureLimit, DeviationShrinksFourfold) {
  std::mt19937_64 rng(10);
  for (ManifoldKind mk : {ManifoldKind::Hyperboloid, ManifoldKind::Sphere}) {
    for (WrappingKind kind : kKinds) {
      for (int i = 0; i < 20; ++i) {
        Vector u = disk_point(rng, 1.0);
        if (u.norm() < 0.05) u = v2(0.05, 0.0);
        double prev = 1e300;
        for (double radius : {1.0, 2.0, 4.0, 8.0}) {
          const ManifoldId m(mk, 2, radius);
          const double dev = (wrap(WrappingVariant(kind, Point::base(m)), u).coords().head(2) - u).norm();
          EXPECT_GE(prev / dev, 3.0);
          prev = dev;
        }
      }
    }
  }
}

TEST(Euclidean, WrapIsTranslation) {
  const auto e = ManifoldId::euclidean(2);
  const WrappingVariant v(WrappingKind::IsometryLambert, make_point(e, v2(1, 2)));
  EXPECT_TRUE(wrap(v, v2(3, 4)).coords().isApprox(v2(4, 6)));
  EXPECT_TRUE(unwrap(v, make_point(e, v2(4, 6))).isApprox(v2(3, 4)));
  EXPECT_EQ(log_det_jacobian(v, v2(3, 4)), 0.0);
}
