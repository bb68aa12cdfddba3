#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "geowrap/inference.hpp"
#include "geowrap/network.hpp"

namespace geowrap::io {

using nlohmann::json;

// Round-trippable double formatting (17 significant digits).
std::string format_double(double x);

json manifold_to_json(const ManifoldId& m);
ManifoldId manifold_from_json(const json& j);

/// {manifold: {kind, dim, scale}, variant, location: [...], sigma: [[...]],
///  truncation_radius?}
json distribution_to_json(const WrappedNormal& dist);
WrappedNormal distribution_from_json(const json& j);

/// {manifold, variant, components: [{weight, location, sigma, truncation_radius?}]}
json mixture_to_json(const WrappedNormalMixture& mixture);

json read_json_file(const std::filesystem::path& path);

// Accepts either a path to a JSON file or an inline JSON document.
json read_json_argument(const std::string& arg);

struct PointSet {
  ManifoldId manifold;
  std::vector<Point> points;
};

/// "# kind=hyperboloid,dim=2,scale=1" then a header x1,...,xn, one row per point.
void write_points_csv(std::ostream& out, const ManifoldId& manifold, std::span<const Point> points);
PointSet read_points_csv(std::istream& in);
PointSet read_points_csv(const std::filesystem::path& path);

/// Lines "i,j" with 0-indexed nodes; '#' starts a comment line. The node
/// count is one more than the largest index.
Graph read_edge_list(std::istream& in);
Graph read_edge_list(const std::filesystem::path& path);

void write_trace_csv(std::ostream& out, const Trace& trace);

/// Writes to a sibling temporary file and renames it over `path`, so the
/// target is never left half written.
void atomic_write(const std::filesystem::path& path, const std::string& contents);

}  // namespace geowrap::io
