#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "geowrap/io.hpp"

using namespace geowrap;

namespace {

Vector v2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
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

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "geowrap_test_io";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(Json, ManifoldRoundTrip) {
  for (const auto& m : {ManifoldId::hyperboloid(3, 2.5), ManifoldId::sphere(2, 0.5), ManifoldId::euclidean(4)}) {
    EXPECT_EQ(io::manifold_from_json(io::manifold_to_json(m)), m);
  }
  EXPECT_EQ(code_of([] { io::manifold_from_json(io::json{{"kind", "torus"}, {"dim", 2}}); }), ErrorCode::DataError);
  EXPECT_EQ(code_of([] { io::manifold_from_json(io::json{{"kind", "sphere"}}); }), ErrorCode::DataError);
}

TEST(Json, DistributionRoundTrip) {
  const auto s = ManifoldId::sphere(2, 1.5);
  Matrix sigma(2, 2);
  sigma << 0.3, 0.05, 0.05, 0.2;
  const WrappedNormal dist(WrappingVariant(WrappingKind::IsometryExp, exp_map(embed_tangent(v2(0.1, 0.7), s))),
                           CovarianceSpec(sigma), 2.0);
  const WrappedNormal back = io::distribution_from_json(io::distribution_to_json(dist));
  EXPECT_EQ(back.manifold(), s);
  EXPECT_EQ(back.variant().kind(), WrappingKind::IsometryExp);
  EXPECT_EQ(back.location().coords(), dist.location().coords());
  EXPECT_EQ(back.sigma().matrix(), sigma);
  EXPECT_EQ(back.truncation_radius(), dist.truncation_radius());
}

TEST(Json, DistributionDefaults) {
  const io::json j = io::json::parse(R"({"manifold": {"kind": "hyperboloid", "dim": 2}, "variant": "isometry_lambert",
                                          "sigma": [[0.5, 0], [0, 0.5]]})");
  const WrappedNormal d = io::distribution_from_json(j);
  EXPECT_EQ(d.variant().kind(), WrappingKind::IsometryLambert);
  EXPECT_LT((d.location().coords() - Point::base(d.manifold()).coords()).norm(), 1e-15);
  EXPECT_EQ(code_of([] { io::distribution_from_json(io::json::parse(R"({"variant": "isometry_lambert"})")); }),
            ErrorCode::DataError);
}

TEST(Json, ReadArgumentInlineAndFile) {
  EXPECT_EQ(io::read_json_argument(R"({"a": 1})")["a"], 1);
  const auto path = scratch("doc.json");
  std::ofstream(path) << R"({"b": [1, 2]})";
  EXPECT_EQ(io::read_json_argument(path.string())["b"].size(), 2u);
  EXPECT_EQ(code_of([] { io::read_json_argument("{not json"); }), ErrorCode::DataError);
  EXPECT_EQ(code_of([] { io::read_json_file("/nonexistent/geowrap.json"); }), ErrorCode::DataError);
}

TEST(Csv, PointsRoundTripExactly) {
  const auto h = ManifoldId::hyperboloid(2, 1.7);
  Rng rng(1);
  const WrappedNormal d(WrappingVariant(WrappingKind::IsometryLambert, Point::base(h)), CovarianceSpec::isotropic(2, 0.4));
  const auto pts = d.sample(rng, 25);
  std::stringstream buf;
  io::write_points_csv(buf, h, pts);
  const io::PointSet back = io::read_points_csv(buf);
  EXPECT_EQ(back.manifold, h);
  ASSERT_EQ(back.points.size(), pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_EQ(back.points[i].coords(), pts[i].coords());
}

TEST(Csv, PointsErrors) {
  std::stringstream bad_header("x1,x2,x3\n0,0,1\n");
  EXPECT_EQ(code_of([&] { io::read_points_csv(bad_header); }), ErrorCode::DataError);
  std::stringstream off_manifold("# kind=hyperboloid,dim=2,scale=1\nx1,x2,x3\n0.5,0,1\n");
  EXPECT_EQ(code_of([&] { io::read_points_csv(off_manifold); }), ErrorCode::DataError);
  std::stringstream short_row("# kind=sphere,dim=2,scale=1\nx1,x2,x3\n0,1\n");
  EXPECT_EQ(code_of([&] { io::read_points_csv(short_row); }), ErrorCode::DataError);
}

TEST(Csv, EdgeList) {
  std::stringstream in("# comment\n0,1\n\n2, 3\n1,2\n");
  const Graph g = io::read_edge_list(in);
  EXPECT_EQ(g.size(), 4);
  EXPECT_EQ(g.edges().size(), 3u);
  EXPECT_TRUE(g.has_edge(3, 2));
  std::stringstream bad("0,x\n");
  EXPECT_EQ(code_of([&] { io::read_edge_list(bad); }), ErrorCode::DataError);
  std::stringstream loop("1,1\n");
  EXPECT_EQ(code_of([&] { io::read_edge_list(loop); }), ErrorCode::DataError);
}

TEST(Csv, TraceHeader) {
  Trace t;
  t.records.push_back({10, -12.5, -0.6, 0.3, 0.4});
  std::stringstream out;
  io::write_trace_csv(out, t);
  std::string header, row;
  std::getline(out, header);
  std::getline(out, row);
  EXPECT_EQ(header, "iteration,log_posterior,alpha,accept_rate_pos,accept_rate_alpha");
  EXPECT_EQ(row.substr(0, 3), "10,");
}

TEST(AtomicWrite, ReplacesWholeFile) {
  const auto path = scratch("atomic.txt");
  io::atomic_write(path, "first version with more bytes\n");
  io::atomic_write(path, "second\n");
  std::ifstream in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  EXPECT_EQ(buf.str(), "second\n");
  EXPECT_FALSE(std::filesystem::exists(path.string() + ".tmp"));
  EXPECT_EQ(code_of([] { io::atomic_write("/nonexistent/dir/file.txt", "x"); }), ErrorCode::DataError);
}

TEST(Format, DoubleRoundTrip) {
  for (double x : {0.1, -1.0 / 3.0, 1e-300, 6.02214076e23}) EXPECT_EQ(std::stod(io::format_double(x)), x);
}
