#include "geowrap/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace geowrap::io {

namespace {

[[noreturn]] void data_error(const std::string& what) { throw Error(ErrorCode::DataError, what); }

Vector vector_from_json(const json& j, const char* field) {
  if (!j.is_array()) data_error(std::string(field) + " must be an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) data_error(std::string(field) + " must be an array of numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

Matrix matrix_from_json(const json& j, const char* field) {
  if (!j.is_array() || j.empty()) data_error(std::string(field) + " must be a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  Matrix m(rows, rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Vector row = vector_from_json(j[static_cast<std::size_t>(r)], field);
    if (row.size() != rows) data_error(std::string(field) + " must be square");
    m.row(r) = row.transpose();
  }
  return m;
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json matrix_to_json(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(vector_to_json(m.row(r).transpose()));
  return out;
}

const json& require(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) data_error(std::string("missing field '") + key + "'");
  return j.at(key);
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, sep)) fields.push_back(trim(field));
  return fields;
}

double parse_double(const std::string& s, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double x = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return x;
  } catch (const std::exception&) {
    data_error("line " + std::to_string(line_no) + ": not a number: '" + s + "'");
  }
}

int parse_index(const std::string& s, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const long v = std::stol(s, &used);
    if (used != s.size() || v < 0 || v > 10'000'000) throw std::invalid_argument(s);
    return static_cast<int>(v);
  } catch (const std::exception&) {
    data_error("line " + std::to_string(line_no) + ": not a node index: '" + s + "'");
  }
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) data_error("cannot open " + path.string());
  return in;
}

}  // namespace

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

json manifold_to_json(const ManifoldId& m) {
  return {{"kind", std::string(to_string(m.kind()))}, {"dim", m.dim()}, {"scale", m.scale()}};
}

ManifoldId manifold_from_json(const json& j) {
  try {
    const auto kind = manifold_kind_from_string(require(j, "kind").get<std::string>());
    const int dim = require(j, "dim").get<int>();
    const double scale = j.value("scale", 1.0);
    return {kind, dim, scale};
  } catch (const json::exception& e) {
    data_error(std::string("bad manifold description: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidArgument) data_error(e.what());
    throw;
  }
}

json distribution_to_json(const WrappedNormal& dist) {
  json out = {{"manifold", manifold_to_json(dist.manifold())},
              {"variant", std::string(to_string(dist.variant().kind()))},
              {"location", vector_to_json(dist.location().coords())},
              {"sigma", matrix_to_json(dist.sigma().matrix())}};
  if (dist.truncation_radius()) out["truncation_radius"] = *dist.truncation_radius();
  return out;
}

WrappedNormal distribution_from_json(const json& j) {
  try {
    const ManifoldId m = manifold_from_json(require(j, "manifold"));
    const WrappingKind kind = wrapping_kind_from_string(require(j, "variant").get<std::string>());
    const Point location = j.contains("location") ? make_point(m, vector_from_json(j.at("location"), "location"))
                                                  : Point::base(m);
    CovarianceSpec sigma(matrix_from_json(require(j, "sigma"), "sigma"));
    std::optional<double> truncation;
    if (j.contains("truncation_radius") && !j.at("truncation_radius").is_null()) {
      truncation = j.at("truncation_radius").get<double>();
    }
    return WrappedNormal(WrappingVariant(kind, location), std::move(sigma), truncation);
  } catch (const json::exception& e) {
    data_error(std::string("bad distribution spec: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidArgument) data_error(e.what());
    throw;
  }
}

json mixture_to_json(const WrappedNormalMixture& mixture) {
  const auto& first = mixture.components().front();
  json out = {{"manifold", manifold_to_json(first.manifold())},
              {"variant", std::string(to_string(first.variant().kind()))}};
  json comps = json::array();
  for (std::size_t c = 0; c < mixture.size(); ++c) {
    json comp = distribution_to_json(mixture.components()[c]);
    comp.erase("manifold");
    comp.erase("variant");
    comp["weight"] = mixture.weights()[c];
    comps.push_back(std::move(comp));
  }
  out["components"] = std::move(comps);
  return out;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    data_error(path.string() + ": " + e.what());
  }
}

json read_json_argument(const std::string& arg) {
  const std::string t = trim(arg);
  if (!t.empty() && t.front() == '{') {
    try {
      return json::parse(t);
    } catch (const json::exception& e) {
      data_error(std::string("inline JSON: ") + e.what());
    }
  }
  return read_json_file(arg);
}

void write_points_csv(std::ostream& out, const ManifoldId& manifold, std::span<const Point> points) {
  out << "# kind=" << to_string(manifold.kind()) << ",dim=" << manifold.dim()
      << ",scale=" << format_double(manifold.scale()) << '\n';
  const int n = manifold.ambient_dim();
  for (int i = 0; i < n; ++i) out << (i ? "," : "") << 'x' << (i + 1);
  out << '\n';
  for (const auto& p : points) {
    for (int i = 0; i < n; ++i) out << (i ? "," : "") << format_double(p.coords()(i));
    out << '\n';
  }
}

PointSet read_points_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::optional<ManifoldId> manifold;
  bool header_seen = false;
  std::vector<Point> points;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (manifold) continue;
      std::string kind;
      int dim = 0;
      double scale = 1.0;
      for (const auto& kv : split(line.substr(1), ',')) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = trim(kv.substr(0, eq));
        const std::string val = trim(kv.substr(eq + 1));
        if (key == "kind") kind = val;
        else if (key == "dim") dim = parse_index(val, line_no);
        else if (key == "scale") scale = parse_double(val, line_no);
      }
      if (kind.empty()) continue;
      try {
        manifold = ManifoldId(manifold_kind_from_string(kind), dim, scale);
      } catch (const Error& e) {
        data_error("line " + std::to_string(line_no) + ": " + e.what());
      }
      continue;
    }
    if (!manifold) data_error("points CSV lacks a '# kind=...,dim=...,scale=...' line before the data");
    const auto fields = split(line, ',');
    if (!header_seen && !fields.empty() && !fields[0].empty() && fields[0][0] == 'x') {
      header_seen = true;
      continue;
    }
    if (static_cast<int>(fields.size()) != manifold->ambient_dim()) {
      data_error("line " + std::to_string(line_no) + ": expected " + std::to_string(manifold->ambient_dim()) +
                 " columns");
    }
    Vector x(manifold->ambient_dim());
    for (std::size_t i = 0; i < fields.size(); ++i) x(static_cast<Eigen::Index>(i)) = parse_double(fields[i], line_no);
    try {
      points.push_back(make_point(*manifold, x));
    } catch (const Error& e) {
      data_error("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!manifold) data_error("points CSV lacks a manifold comment line");
  return {*manifold, std::move(points)};
}

PointSet read_points_csv(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  return read_points_csv(in);
}

Graph read_edge_list(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::pair<int, int>> edges;
  int n = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto fields = split(line, ',');
    if (fields.size() != 2) data_error("line " + std::to_string(line_no) + ": expected 'i,j'");
    const int i = parse_index(fields[0], line_no);
    const int j = parse_index(fields[1], line_no);
    edges.emplace_back(i, j);
    n = std::max({n, i + 1, j + 1});
  }
  try {
    return Graph(n, std::move(edges));
  } catch (const Error& e) {
    data_error(std::string("edge list: ") + e.what());
  }
}

Graph read_edge_list(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  return read_edge_list(in);
}

void write_trace_csv(std::ostream& out, const Trace& trace) {
  out << "iteration,log_posterior,alpha,accept_rate_pos,accept_rate_alpha\n";
  for (const auto& r : trace.records) {
    out << r.iteration << ',' << format_double(r.log_posterior) << ',' << format_double(r.alpha) << ','
        << format_double(r.accept_rate_position) << ',' << format_double(r.accept_rate_alpha) << '\n';
  }
}

void atomic_write(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) data_error("cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      data_error("write failed for " + path.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    data_error("cannot rename onto " + path.string());
  }
}

}  // namespace geowrap::io
