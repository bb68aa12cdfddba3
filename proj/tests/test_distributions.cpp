#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "geowrap/distributions.hpp"
#include "geowrap/oracles.hpp"
#include "geowrap/special.hpp"

using namespace geowrap;

namespace {

constexpr double kPi = std::numbers::pi;

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

const WrappingKind kKinds[] = {WrappingKind::ExpParallelTransport, WrappingKind::IsometryExp,
                               WrappingKind::IsometryLambert};

// P(|U| < r) for U ~ N(0, diag(a, b)) by polar quadrature.
double disk_mass_quadrature(double a, double b, double r) {
  const int nr = 2000, nt = 2000;
  double total = 0.0;
  for (int i = 0; i < nr; ++i) {
    const double rho = r * (i + 0.5) / nr;
    for (int j = 0; j < nt; ++j) {
      const double t = 2.0 * kPi * (j + 0.5) / nt;
      const double x = rho * std::cos(t), y = rho * std::sin(t);
      total += std::exp(-0.5 * (x * x / a + y * y / b)) * rho;
    }
  }
  return total * (r / nr) * (2.0 * kPi / nt) / (2.0 * kPi * std::sqrt(a * b));
}

}  // namespace

TEST(Covariance, Validation) {
  Matrix asym(2, 2);
  asym << 1, 0.5, 0.4, 1;
  EXPECT_EQ(code_of([&] { CovarianceSpec c(asym); }), ErrorCode::InvalidArgument);
  Matrix indef(2, 2);
  indef << 1, 2, 2, 1;
  EXPECT_EQ(code_of([&] { CovarianceSpec c(indef); }), ErrorCode::InvalidArgument);
  const CovarianceSpec d = CovarianceSpec::diagonal(v2(0.04, 0.09));
  EXPECT_NEAR(d.log_det(), std::log(0.0036), 1e-14);
  EXPECT_NEAR(d.mahalanobis_sq(v2(0.2, 0.3)), 2.0, 1e-14);
}

TEST(TruncationConstant, ClosedFormIsotropic) {
  for (double s : {0.1, 0.4, 1.0}) {
    const double c = disk_truncation_constant(CovarianceSpec::isotropic(2, s * s), std::sqrt(2.0));
    EXPECT_NEAR(c, 1.0 - std::exp(-1.0 / (s * s)), 1e-12);
  }
  EXPECT_NEAR(disk_truncation_constant(CovarianceSpec::isotropic(2, 0.16), std::sqrt(2.0)), 0.998069, 1e-6);
  EXPECT_NEAR(disk_truncation_constant(CovarianceSpec::isotropic(2, 1e4), std::sqrt(2.0)), 9.9995e-5, 1e-9);
  EXPECT_EQ(disk_truncation_constant(CovarianceSpec::isotropic(2, 1.0), std::numeric_limits<double>::infinity()), 1.0);
  EXPECT_EQ(code_of([] { disk_truncation_constant(CovarianceSpec::isotropic(2, 1.0), 0.0); }),
            ErrorCode::InvalidArgument);
}

TEST(TruncationConstant, AnisotropicSeriesMatchesQuadrature) {
  for (auto [a, b, r] : {std::tuple{0.04, 0.09, 0.25}, std::tuple{0.3, 1.7, 1.4}, std::tuple{0.05, 1.9, 1.2},
                            std::tuple{0.01, 2.0, 1.0}}) {
    const double series = disk_truncation_constant(CovarianceSpec::diagonal(v2(a, b)), r);
    EXPECT_NEAR(series, disk_mass_quadrature(a, b, r), 2e-6) << a << ' ' << b;
  }
  // Nearly degenerate: the mass of a one-dimensional N(0, 0.5) within +-1.
  EXPECT_NEAR(disk_truncation_constant(CovarianceSpec::diagonal(v2(1e-14, 0.5)), 1.0), std::erf(1.0), 1e-9);
  // A rotated covariance reduces to its eigenvalues.
  Matrix rot(2, 2);
  rot << std::cos(0.7), -std::sin(0.7), std::sin(0.7), std::cos(0.7);
  const Matrix full = rot * v2(0.3, 1.7).asDiagonal() * rot.transpose();
  EXPECT_NEAR(disk_truncation_constant(CovarianceSpec(0.5 * (full + full.transpose())), 1.4),
              disk_truncation_constant(CovarianceSpec::diagonal(v2(0.3, 1.7)), 1.4), 1e-12);
}

TEST(TruncationConstant, ThreeDimensionalChiSquare) {
  const double s = 0.7, r = 1.1;
  const double x = r / s;
  const double expected = std::erf(x / std::sqrt(2.0)) - std::sqrt(2.0 / kPi) * x * std::exp(-0.5 * x * x);
  Vector var(3);
  var << s * s, s * s, s * s;
  EXPECT_NEAR(disk_truncation_constant(CovarianceSpec::diagonal(var), r), expected, 1e-12);
}

TEST(WrappedNormal, TruncationDefaultsAndValidation) {
  const auto s = ManifoldId::sphere(2);
  const auto h = ManifoldId::hyperboloid(2);
  const auto sig = CovarianceSpec::isotropic(2, 0.1);
  const WrappedNormal lam(WrappingVariant(WrappingKind::IsometryLambert, Point::base(s)), sig);
  ASSERT_TRUE(lam.truncation_radius());
  EXPECT_DOUBLE_EQ(*lam.truncation_radius(), std::sqrt(2.0));
  const WrappedNormal ex(WrappingVariant(WrappingKind::IsometryExp, Point::base(s)), sig);
  EXPECT_DOUBLE_EQ(*ex.truncation_radius(), kPi);
  EXPECT_FALSE(WrappedNormal(WrappingVariant(WrappingKind::IsometryExp, Point::base(h)), sig).truncation_radius());
  EXPECT_EQ(code_of([&] { WrappedNormal(WrappingVariant(WrappingKind::IsometryExp, Point::base(h)), sig, 1.0); }),
            ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([&] { WrappedNormal(WrappingVariant(WrappingKind::IsometryLambert, Point::base(s)), sig, 2.5); }),
            ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([&] {
              WrappedNormal(WrappingVariant(WrappingKind::IsometryLambert, Point::base(s)),
                            CovarianceSpec::isotropic(3, 0.1));
            }),
            ErrorCode::InvalidArgument);
}

TEST(WrappedNormal, SampleExamples) {
  Rng rng(1);
  const auto h = ManifoldId::hyperboloid(2);
  const WrappedNormal tight(WrappingVariant(WrappingKind::IsometryLambert, at(h, 0.3, 0.1)),
                            CovarianceSpec::isotropic(2, 1e-12));
  EXPECT_TRUE(tight.sample(rng, 0).empty());
  for (const auto& z : tight.sample(rng, 100)) EXPECT_LT(geodesic_distance(z, tight.location()), 1e-4);

  const WrappedNormal wn(WrappingVariant(WrappingKind::ExpParallelTransport, Point::base(h)),
                         CovarianceSpec::isotropic(2, 0.25));
  const int n = 100000;
  Vector mean = Vector::Zero(2);
  for (const auto& z : wn.sample(rng, n)) mean += unwrap(wn.variant(), z);
  mean /= n;
  EXPECT_LT(mean.cwiseAbs().maxCoeff(), 3.0 * 0.5 / std::sqrt(static_cast<double>(n)));
}

TEST(WrappedNormal, SamplingIsDeterministic) {
  const auto s = ManifoldId::sphere(2);
  const WrappedNormal wn(WrappingVariant(WrappingKind::IsometryLambert, at(s, 0.2, 0.2)),
                         CovarianceSpec::diagonal(v2(0.1, 0.3)));
  Rng a(99), b(99);
  const auto x = wn.sample(a, 50);
  const auto y = wn.sample(b, 50);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(x[i].coords(), y[i].coords());
}

TEST(WrappedNormal, TruncatedSamplesStayInDisk) {
  Rng rng(2);
  const auto s = ManifoldId::sphere(2);
  const WrappedNormal wn(WrappingVariant(WrappingKind::IsometryLambert, at(s, 0.4, 0.0)),
                         CovarianceSpec::isotropic(2, 1.0));
  for (const auto& z : wn.sample(rng, 2000)) EXPECT_LT(unwrap(wn.variant(), z).norm(), std::sqrt(2.0));
  const WrappedNormal hopeless(WrappingVariant(WrappingKind::IsometryLambert, Point::base(s)),
                               CovarianceSpec::isotropic(2, 1e8), 1e-3);
  EXPECT_EQ(code_of([&] { hopeless.sample(rng, 1); }), ErrorCode::TruncationInfeasible);
}

TEST(WrappedNormal, LogPdfExamples) {
  const auto h = ManifoldId::hyperboloid(2);
  const double s2 = 0.3;
  const WrappedNormal lam(WrappingVariant(WrappingKind::IsometryLambert, at(h, 0.5, -0.5)),
                          CovarianceSpec::isotropic(2, s2));
  EXPECT_NEAR(lam.log_pdf(lam.location()), -std::log(2.0 * kPi * s2), 1e-12);

  const WrappedNormal ept(WrappingVariant(WrappingKind::ExpParallelTransport, at(h, 0.2, 0.7)),
                          CovarianceSpec::isotropic(2, 1.0));
  const Point z = wrap(ept.variant(), v2(0.6, 0.8));
  EXPECT_NEAR(ept.log_pdf(z), -std::log(2.0 * kPi) - 0.5 - std::log(std::sinh(1.0)), 1e-12);
}

TEST(WrappedNormal, OutOfImageIsMinusInfinity) {
  const auto s = ManifoldId::sphere(2);
  const WrappedNormal lam(WrappingVariant(WrappingKind::IsometryLambert, Point::base(s)),
                          CovarianceSpec::isotropic(2, 0.2));
  const Point far = lambert_forward(s, v2(1.6, 0.0));
  EXPECT_TRUE(std::isinf(lam.log_pdf(far)) && lam.log_pdf(far) < 0);
  Vector north(3);
  north << 0, 0, 1;
  EXPECT_TRUE(std::isinf(lam.log_pdf(make_point(s, north))));
  EXPECT_EQ(code_of([&] { lam.log_pdf(Point::base(ManifoldId::hyperboloid(2))); }), ErrorCode::InvalidArgument);
}

TEST(WrappedNormal, TruncatedDensityIncludesConstant) {
  const auto s = ManifoldId::sphere(2);
  const double s2 = 0.5;
  const WrappedNormal lam(WrappingVariant(WrappingKind::IsometryLambert, Point::base(s)),
                          CovarianceSpec::isotropic(2, s2));
  const double c = 1.0 - std::exp(-1.0 / s2);
  EXPECT_NEAR(lam.log_pdf(Point::base(s)), -std::log(2.0 * kPi * s2) - std::log(c), 1e-12);
}

TEST(WrappedNormal, GridNormalization) {
  const auto h = ManifoldId::hyperboloid(2);
  const auto s = ManifoldId::sphere(2);
  const oracles::GridSpec wide({oracles::Axis{0.0, 8.0, 1601}, oracles::Axis{0.0, 2.0 * kPi, 721}});
  const oracles::GridSpec narrow({oracles::Axis{0.0, 4.0, 801}, oracles::Axis{0.0, 2.0 * kPi, 721}});
  const oracles::GridSpec sphere_grid({oracles::Axis{0.0, kPi, 1501}, oracles::Axis{0.0, 2.0 * kPi, 1201}});
  EXPECT_NEAR(oracles::grid_normalization(WrappedNormal(WrappingVariant(WrappingKind::IsometryLambert, at(h, 0.3, 0.4)),
                                                        CovarianceSpec::isotropic(2, 0.25)),
                                          narrow),
              1.0, 1e-3);
  EXPECT_NEAR(oracles::grid_normalization(WrappedNormal(WrappingVariant(WrappingKind::IsometryExp, at(h, 0.3, 0.4)),
                                                        CovarianceSpec::isotropic(2, 1.0)),
                                          wide),
              1.0, 1e-3);
  for (WrappingKind kind : kKinds) {
    EXPECT_NEAR(oracles::grid_normalization(
                    WrappedNormal(WrappingVariant(kind, at(s, -0.3, 0.2)), CovarianceSpec::diagonal(v2(0.2, 0.35))),
                    sphere_grid),
                1.0, 1e-3)
        << to_string(kind);
  }
}

TEST(WrappedNormal, IsometryEquivariance) {
  Rng rng(3);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (const auto& m : {ManifoldId::hyperboloid(2), ManifoldId::sphere(2)}) {
    for (WrappingKind kind : {WrappingKind::IsometryExp, WrappingKind::IsometryLambert}) {
      for (int i = 0; i < 25; ++i) {
        const Point p = at(m, unif(rng) - 0.5, unif(rng) - 0.5);
        const WrappedNormal wn(WrappingVariant(kind, p), CovarianceSpec::isotropic(2, 0.1 + 0.2 * unif(rng)));
        const IsometryMatrix a = isometry_to(at(m, unif(rng) - 0.5, unif(rng) - 0.5));
        const Point z = wn.sample(rng, 1).front();
        EXPECT_NEAR(wn.relocated(apply_isometry(a, p)).log_pdf(apply_isometry(a, z)), wn.log_pdf(z), 1e-9);
      }
    }
  }
}

// Along each unwrapped coordinate axis the density rises to 0 and falls after.
TEST(WrappedNormal, PartialMonotonicity) {
  for (const auto& m : {ManifoldId::hyperboloid(2), ManifoldId::sphere(2)}) {
    for (WrappingKind kind : kKinds) {
      const WrappedNormal wn(WrappingVariant(kind, at(m, 0.3, 0.1)), CovarianceSpec::diagonal(v2(0.09, 0.25)));
      for (int axis = 0; axis < 2; ++axis) {
        const double half = std::min(3.0 * std::sqrt(wn.sigma().matrix()(axis, axis)),
                                     0.99 * wn.truncation_radius().value_or(1e9));
        double prev = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < 200; ++i) {
          Vector u = Vector::Zero(2);
          u(axis) = -half + 2.0 * half * (i + 0.5) / 200.0;
          const double lp = wn.log_pdf(wrap(wn.variant(), u));
          if (u(axis) < 0) EXPECT_GT(lp, prev);
          else if (i > 0 && u(axis) - 2.0 * half / 200.0 > 0) EXPECT_LT(lp, prev);
          prev = lp;
        }
      }
    }
  }
}

TEST(WrappedNormal, RotationPreMapLeavesPushforwardUnchanged) {
  Rng rng(4);
  const auto h = ManifoldId::hyperboloid(2);
  const WrappedNormal wn(WrappingVariant(WrappingKind::IsometryLambert, at(h, 0.5, 0.2)),
                         CovarianceSpec::isotropic(2, 0.09));
  const double t = 2.0 * kPi * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  Matrix rot(2, 2);
  rot << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
  const oracles::GridSpec bins({oracles::Axis{-1.2, 1.2, 10}, oracles::Axis{-1.2, 1.2, 10}});
  std::vector<Vector> plain, rotated;
  for (int i = 0; i < 100000; ++i) {
    plain.push_back(unwrap(wn.variant(), wrap(wn.variant(), wn.sample_chart(rng))));
    rotated.push_back(unwrap(wn.variant(), wrap(wn.variant(), rot * wn.sample_chart(rng))));
  }
  EXPECT_LT(oracles::histogram_tv(oracles::empirical_histogram(plain, bins),
                                  oracles::empirical_histogram(rotated, bins)),
            0.02);
}

TEST(Mixture, Examples) {
  Rng rng(5);
  const auto h = ManifoldId::hyperboloid(2);
  const WrappedNormal a(WrappingVariant(WrappingKind::IsometryLambert, at(h, -2.0, 0.0)),
                        CovarianceSpec::isotropic(2, 0.1));
  const WrappedNormal b(WrappingVariant(WrappingKind::IsometryLambert, at(h, 2.0, 0.0)),
                        CovarianceSpec::isotropic(2, 0.1));
  const Point z = a.sample(rng, 1).front();
  EXPECT_DOUBLE_EQ(WrappedNormalMixture({1.0}, {a}).log_pdf(z), a.log_pdf(z));
  EXPECT_NEAR(WrappedNormalMixture({0.5, 0.5}, {a, a}).log_pdf(z), a.log_pdf(z), 1e-14);

  const WrappedNormalMixture mix({0.3, 0.7}, {a, b});
  const double mode = 1.0 / (2.0 * kPi * 0.1);
  EXPECT_NEAR(std::exp(mix.log_pdf(a.location())) / (0.3 * mode), 1.0, 0.01);
  EXPECT_NEAR(std::exp(mix.log_pdf(b.location())) / (0.7 * mode), 1.0, 0.01);

  EXPECT_EQ(code_of([&] { WrappedNormalMixture({0.3, 0.6}, {a, b}); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([&] {
              WrappedNormalMixture({0.5, 0.5}, {a, WrappedNormal(WrappingVariant(WrappingKind::IsometryExp,
                                                                                 b.location()),
                                                                 b.sigma())});
            }),
            ErrorCode::InvalidArgument);

  int near_a = 0;
  for (const auto& p : mix.sample(rng, 10000)) near_a += geodesic_distance(p, a.location()) < 2.0;
  EXPECT_NEAR(near_a / 10000.0, 0.3, 0.02);
}

TEST(Special, LogBesselI0AgainstStd) {
  for (double x : {1e-8, 0.1, 1.0, 2.0, 10.0, 14.9, 15.1, 30.0, 100.0, 500.0}) {
    const double expected = std::log(std::cyl_bessel_i(0.0, x));
    EXPECT_NEAR(special::log_bessel_i0(x), expected, 1e-10 * std::max(1.0, std::abs(expected))) << x;
  }
}

TEST(Special, GammaP) {
  EXPECT_NEAR(special::gamma_p(1.0, 2.0), 1.0 - std::exp(-2.0), 1e-14);
  EXPECT_NEAR(special::gamma_p(0.5, 0.8), std::erf(std::sqrt(0.8)), 1e-14);
  EXPECT_NEAR(special::gamma_p(3.0, 10.0), 1.0 - std::exp(-10.0) * (1.0 + 10.0 + 50.0), 1e-14);
}

TEST(VonMises, Examples) {
  EXPECT_NEAR(std::exp(von_mises_log_pdf({0.0, 2.0}, 0.0)), std::exp(2.0) / (2.0 * kPi * 2.2795853023360673), 1e-12);
  EXPECT_NEAR(std::exp(von_mises_log_pdf({0.0, 1e-9}, 1.3)), 1.0 / (2.0 * kPi), 1e-9);
  for (double t : {0.1, 1.0, 2.5}) {
    EXPECT_DOUBLE_EQ(von_mises_log_pdf({0.0, 5.0}, t), von_mises_log_pdf({0.0, 5.0}, -t));
  }
  EXPECT_EQ(code_of([] { von_mises_log_pdf({0.0, 0.0}, 0.0); }), ErrorCode::InvalidArgument);
}

TEST(VonMises, HighConcentrationLimit) {
  double prev = 1e300;
  for (double kappa : {1.0, 10.0, 100.0}) {
    const double gap = oracles::sup_norm_gap(
        [&](double x) { return std::exp(-kappa * (1.0 - std::cos(x))) / (2.0 * kPi * std::cyl_bessel_i(0.0, kappa) *
                                                                          std::exp(-kappa)); },
        [&](double x) { return std::sqrt(kappa / (2.0 * kPi)) * std::exp(-0.5 * kappa * x * x); },
        oracles::Axis{-kPi, kPi, 10000});
    const double lib_gap = oracles::sup_norm_gap(
        [&](double x) { return std::exp(von_mises_log_pdf({0.0, kappa}, x)); },
        [&](double x) { return std::sqrt(kappa / (2.0 * kPi)) * std::exp(-0.5 * kappa * x * x); },
        oracles::Axis{-kPi, kPi, 10000});
    EXPECT_NEAR(lib_gap, gap, 1e-9);
    EXPECT_LT(lib_gap, prev);
    prev = lib_gap;
  }
  EXPECT_LT(prev, 0.01);
}
