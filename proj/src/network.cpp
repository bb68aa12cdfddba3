#include "geowrap/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <thread>

#include "geowrap/special.hpp"

namespace geowrap {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

WrappingKind position_kind(const ManifoldId& m) {
  return m.dim() == 2 || m.kind() == ManifoldKind::Euclidean ? WrappingKind::IsometryLambert : WrappingKind::IsometryExp;
}

WrappingKind proposal_kind(const ManifoldId& m) {
  return m.dim() == 2 || m.kind() == ManifoldKind::Euclidean ? WrappingKind::IsometryLambert
                                                             : WrappingKind::ExpParallelTransport;
}

double pair_term(bool edge, double alpha, double distance) {
  const double eta = alpha - distance;
  return (edge ? eta : 0.0) - special::log1p_exp(eta);
}

double normal_log_pdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
}

}  // namespace

Graph::Graph(int n, std::vector<std::pair<int, int>> edges) : n_(n), adjacency_(static_cast<std::size_t>(n) * n, 0) {
  if (n < 0) throw Error(ErrorCode::InvalidArgument, "graph size must be non-negative");
  for (auto [i, j] : edges) {
    if (i == j) throw Error(ErrorCode::InvalidArgument, "self-loops are not allowed");
    if (i < 0 || j < 0 || i >= n || j >= n) throw Error(ErrorCode::InvalidArgument, "edge endpoint out of range");
    if (i > j) std::swap(i, j);
    if (has_edge(i, j)) throw Error(ErrorCode::InvalidArgument, "duplicate edge");
    adjacency_[static_cast<std::size_t>(i) * n + j] = 1;
    adjacency_[static_cast<std::size_t>(j) * n + i] = 1;
    edges_.emplace_back(i, j);
  }
  std::sort(edges_.begin(), edges_.end());
}

int Graph::degree(int i) const {
  int d = 0;
  for (int j = 0; j < n_; ++j) d += has_edge(i, j) ? 1 : 0;
  return d;
}

const std::vector<std::string>& florentine_families() {
  static const std::vector<std::string> names = {
      "Acciaiuoli", "Albizzi", "Barbadori", "Bischeri", "Castellani", "Ginori",   "Guadagni", "Lamberteschi",
      "Medici",     "Pazzi",   "Peruzzi",   "Ridolfi",  "Salviati",   "Strozzi", "Tornabuoni"};
  return names;
}

Graph florentine_graph() {
  return Graph(15, {{0, 8},  {1, 5},   {1, 6},   {1, 8},   {2, 4},   {2, 8},  {3, 6},
                    {3, 10}, {3, 13},  {4, 10},  {4, 13},  {6, 7},   {6, 14}, {8, 11},
                    {8, 12}, {8, 14},  {9, 12},  {10, 13}, {11, 13}, {11, 14}});
}

NetworkPriors NetworkPriors::defaults_for(const ManifoldId& manifold) {
  NetworkPriors p;
  p.position_sigma = manifold.kind() == ManifoldKind::Sphere ? 0.3 : 1.0;
  return p;
}

WrappedNormal NetworkPriors::position_prior(const ManifoldId& manifold) const {
  return WrappedNormal(WrappingVariant(position_kind(manifold), Point::base(manifold)),
                       CovarianceSpec::isotropic(manifold.dim(), position_sigma * position_sigma));
}

double network_log_likelihood(std::span<const Point> positions, double alpha, const Graph& graph) {
  if (static_cast<int>(positions.size()) != graph.size()) {
    throw Error(ErrorCode::InvalidArgument, "one latent position per node expected");
  }
  double total = 0.0;
  for (int i = 0; i < graph.size(); ++i) {
    for (int j = i + 1; j < graph.size(); ++j) {
      total += pair_term(graph.has_edge(i, j), alpha, geodesic_distance(positions[i], positions[j]));
    }
  }
  return total;
}

double network_log_posterior(const NetworkState& state, const Graph& graph, const NetworkPriors& priors) {
  double total = network_log_likelihood(state.positions, state.alpha, graph);
  total += normal_log_pdf(state.alpha, priors.alpha_mean, priors.alpha_sd);
  if (state.positions.empty()) return total;
  const WrappedNormal prior = priors.position_prior(state.positions.front().manifold());
  for (const auto& z : state.positions) total += prior.log_pdf(z);
  return total;
}

double position_proposal_log_density(const Point& from, const Point& to, double step) {
  const WrappingVariant variant(proposal_kind(from.manifold()), from);
  Vector u;
  try {
    u = unwrap(variant, to);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::OutOfDomain) return kNegInf;
    throw;
  }
  const int k = from.manifold().dim();
  return gaussian_log_pdf(u, CovarianceSpec::isotropic(k, step * step)) - log_det_jacobian(variant, u);
}

MhResult mh_run(const Graph& graph, const ManifoldId& manifold, const MhConfig& config, const NetworkPriors& priors,
                Rng& rng, bool keep_alpha_draws) {
  NetworkState state;
  state.alpha = config.initial_alpha;
  state.step_position = config.step_position;
  state.step_alpha = config.step_alpha;
  if (config.init == InitMode::Mds) {
    // Start inside the bulk of the position prior.
    const double rms = std::min(1.0, priors.position_sigma * std::sqrt(static_cast<double>(manifold.dim())));
    std::optional<double> cap;
    if (manifold.kind() == ManifoldKind::Sphere) cap = 0.9 * *priors.position_prior(manifold).truncation_radius();
    state.positions = mds_init(graph, manifold, rms, cap);
  } else {
    state.positions.assign(graph.size(), Point::base(manifold));
  }
  return mh_run_from(graph, std::move(state), config, priors, rng, keep_alpha_draws);
}

MhResult mh_run_from(const Graph& graph, NetworkState state, const MhConfig& config, const NetworkPriors& priors,
                     Rng& rng, bool keep_alpha_draws) {
  const int n = graph.size();
  if (static_cast<int>(state.positions.size()) != n) {
    throw Error(ErrorCode::InvalidArgument, "one latent position per node expected");
  }
  if (!(state.step_position > 0.0) || !(state.step_alpha > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "step sizes must be positive");
  }
  if (config.iterations < 0 || config.burn_in < 0 || config.thin < 1) {
    throw Error(ErrorCode::InvalidArgument, "iterations and burn-in must be >= 0 and thin >= 1");
  }
  MhResult result{state, Trace{config.thin, {}, {}}, {}, {}};
  if (config.iterations == 0 || n == 0) return result;

  const ManifoldId manifold = state.positions.front().manifold();
  const int k = manifold.dim();
  const WrappedNormal prior = priors.position_prior(manifold);
  const WrappingKind kind = proposal_kind(manifold);

  std::vector<double> prior_lp(n);
  for (int i = 0; i < n; ++i) prior_lp[i] = prior.log_pdf(state.positions[i]);
  std::vector<double> dist(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      dist[i * n + j] = dist[j * n + i] = geodesic_distance(state.positions[i], state.positions[j]);
    }
  }
  auto likelihood = [&](double alpha) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) total += pair_term(graph.has_edge(i, j), alpha, dist[i * n + j]);
    }
    return total;
  };
  auto log_posterior = [&]() {
    double total = likelihood(state.alpha) + normal_log_pdf(state.alpha, priors.alpha_mean, priors.alpha_sd);
    for (double lp : prior_lp) total += lp;
    return total;
  };

  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  long pos_proposed = 0, pos_accepted = 0, alpha_proposed = 0, alpha_accepted = 0;
  long post_pos_proposed = 0, post_pos_accepted = 0, post_alpha_proposed = 0, post_alpha_accepted = 0;
  double alpha_sum = 0.0, alpha_sq = 0.0;
  std::vector<double> new_dist(n);
  std::vector<double> recorded_lp;
  double current_lp = log_posterior();

  for (long it = 1; it <= config.iterations; ++it) {
    const bool post = it > config.burn_in;
    if (config.update_positions) {
      for (int i = 0; i < n; ++i) {
        Vector eps(k);
        for (int c = 0; c < k; ++c) eps(c) = state.step_position * normal(rng);
        ++pos_proposed;
        if (post) ++post_pos_proposed;
        const double u_accept = uniform(rng);
        const WrappingVariant at_current(kind, state.positions[i]);
        if (!(eps.norm() < at_current.domain_radius())) continue;
        Point candidate = wrap(at_current, eps);
        double new_prior;
        try {
          new_prior = prior.log_pdf(candidate);
        } catch (const Error&) {
          continue;
        }
        if (!std::isfinite(new_prior)) continue;
        double delta = new_prior - prior_lp[i];
        for (int j = 0; j < n; ++j) {
          if (j == i) continue;
          new_dist[j] = geodesic_distance(candidate, state.positions[j]);
          const bool edge = graph.has_edge(i, j);
          delta += pair_term(edge, state.alpha, new_dist[j]) - pair_term(edge, state.alpha, dist[i * n + j]);
        }
        if (std::log(u_accept) < delta) {
          state.positions[i] = std::move(candidate);
          prior_lp[i] = new_prior;
          for (int j = 0; j < n; ++j) {
            if (j != i) dist[i * n + j] = dist[j * n + i] = new_dist[j];
          }
          current_lp += delta;
          ++pos_accepted;
          if (post) ++post_pos_accepted;
        }
      }
    }

    const double proposal = state.alpha + state.step_alpha * normal(rng);
    const double u_accept = uniform(rng);
    ++alpha_proposed;
    if (post) ++post_alpha_proposed;
    const double delta = likelihood(proposal) - likelihood(state.alpha) +
                         normal_log_pdf(proposal, priors.alpha_mean, priors.alpha_sd) -
                         normal_log_pdf(state.alpha, priors.alpha_mean, priors.alpha_sd);
    if (std::log(u_accept) < delta) {
      state.alpha = proposal;
      current_lp += delta;
      ++alpha_accepted;
      if (post) ++post_alpha_accepted;
    }

    if (post) {
      alpha_sum += state.alpha;
      alpha_sq += state.alpha * state.alpha;
      if (keep_alpha_draws) result.alpha_draws.push_back(state.alpha);
    }
    if (it % config.thin == 0) {
      // Recompute from scratch at record time so rounding in the running sum never accumulates.
      current_lp = log_posterior();
      result.trace.records.push_back(TraceRecord{
          it, current_lp, state.alpha,
          pos_proposed ? static_cast<double>(pos_accepted) / pos_proposed : 0.0,
          static_cast<double>(alpha_accepted) / alpha_proposed});
      if (post) recorded_lp.push_back(current_lp);
    }
  }

  PosteriorSummary& s = result.summary;
  s.samples = std::max(0L, config.iterations - config.burn_in);
  if (s.samples > 0) {
    s.alpha_mean = alpha_sum / s.samples;
    s.alpha_sd = std::sqrt(std::max(0.0, alpha_sq / s.samples - s.alpha_mean * s.alpha_mean));
    s.accept_rate_position = post_pos_proposed ? static_cast<double>(post_pos_accepted) / post_pos_proposed : 0.0;
    s.accept_rate_alpha = post_alpha_proposed ? static_cast<double>(post_alpha_accepted) / post_alpha_proposed : 0.0;
  }
  if (!recorded_lp.empty()) {
    double sum = 0.0;
    for (double v : recorded_lp) sum += v;
    s.log_posterior_mean = sum / recorded_lp.size();
  }
  s.geweke_z = recorded_lp.size() >= 40 ? geweke_z(recorded_lp) : std::numeric_limits<double>::quiet_NaN();
  if (s.samples > 0) {
    auto check = [&](const char* what, double rate, bool active) {
      if (active && (rate < 0.05 || rate > 0.8)) {
        result.trace.warnings.push_back(std::string(what) + " acceptance rate " + std::to_string(rate) +
                                        " outside [0.05, 0.8]");
      }
    };
    check("position", s.accept_rate_position, config.update_positions);
    check("alpha", s.accept_rate_alpha, true);
  }
  result.state = std::move(state);
  return result;
}

std::vector<MhResult> mh_run_chains(const Graph& graph, const ManifoldId& manifold, const MhConfig& config,
                                    const NetworkPriors& priors, std::uint64_t seed, int chains, int threads) {
  if (chains < 1) throw Error(ErrorCode::InvalidArgument, "need at least one chain");
  threads = std::clamp(threads, 1, chains);
  std::vector<std::optional<MhResult>> slots(chains);
  std::vector<std::exception_ptr> errors(chains);
  auto worker = [&](int first) {
    for (int c = first; c < chains; c += threads) {
      try {
        Rng rng(seed + static_cast<std::uint64_t>(c));
        slots[c] = mh_run(graph, manifold, config, priors, rng);
      } catch (...) {
        errors[c] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker, t);
  worker(0);
  for (auto& th : pool) th.join();
  std::vector<MhResult> out;
  for (int c = 0; c < chains; ++c) {
    if (errors[c]) std::rethrow_exception(errors[c]);
    out.push_back(std::move(*slots[c]));
  }
  return out;
}

std::vector<Point> mds_init(const Graph& graph, const ManifoldId& manifold, double rms,
                            std::optional<double> max_radius) {
  const int n = graph.size();
  const int k = manifold.dim();
  std::vector<Point> out(n, Point::base(manifold));
  if (n < 2) return out;

  // Connected components by BFS; keep the largest.
  std::vector<int> component(n, -1);
  int best_comp = -1;
  int best_size = 0;
  for (int s = 0, c = 0; s < n; ++s) {
    if (component[s] >= 0) continue;
    int size = 0;
    std::queue<int> queue;
    queue.push(s);
    component[s] = c;
    while (!queue.empty()) {
      const int v = queue.front();
      queue.pop();
      ++size;
      for (int w = 0; w < n; ++w) {
        if (component[w] < 0 && graph.has_edge(v, w)) {
          component[w] = c;
          queue.push(w);
        }
      }
    }
    if (size > best_size) {
      best_size = size;
      best_comp = c;
    }
    ++c;
  }
  if (best_size < 2) return out;

  std::vector<int> nodes;
  for (int v = 0; v < n; ++v) {
    if (component[v] == best_comp) nodes.push_back(v);
  }
  const int m = static_cast<int>(nodes.size());
  Matrix d2(m, m);
  for (int a = 0; a < m; ++a) {
    std::vector<int> hops(n, -1);
    std::queue<int> queue;
    queue.push(nodes[a]);
    hops[nodes[a]] = 0;
    while (!queue.empty()) {
      const int v = queue.front();
      queue.pop();
      for (int w = 0; w < n; ++w) {
        if (hops[w] < 0 && graph.has_edge(v, w)) {
          hops[w] = hops[v] + 1;
          queue.push(w);
        }
      }
    }
    for (int b = 0; b < m; ++b) d2(a, b) = static_cast<double>(hops[nodes[b]]) * hops[nodes[b]];
  }
  const Matrix centring = Matrix::Identity(m, m) - Matrix::Constant(m, m, 1.0 / m);
  const Matrix b = -0.5 * centring * d2 * centring;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(b);
  Matrix coords = Matrix::Zero(m, k);
  for (int c = 0; c < std::min(k, m); ++c) {
    const int idx = m - 1 - c;  // eigenvalues ascend
    const double lambda = std::max(eig.eigenvalues()(idx), 0.0);
    Vector v = eig.eigenvectors().col(idx);
    // Deterministic sign: largest-magnitude entry positive.
    Eigen::Index arg;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    coords.col(c) = v * std::sqrt(lambda);
  }
  const double current_rms = std::sqrt(coords.squaredNorm() / m);
  if (current_rms > 0.0) coords *= rms / current_rms;

  std::optional<double> cap = max_radius;
  if (manifold.kind() == ManifoldKind::Sphere) {
    const double domain = (k == 2 ? 2.0 : std::numbers::pi) * manifold.scale();
    cap = std::min(cap.value_or(domain), 0.999 * domain);
  }
  const WrappingVariant at_base(k == 2 ? WrappingKind::IsometryLambert : WrappingKind::IsometryExp,
                                Point::base(manifold));
  for (int a = 0; a < m; ++a) {
    Vector u = coords.row(a).transpose();
    if (cap && u.norm() > *cap) u *= *cap / u.norm();
    out[nodes[a]] = wrap(at_base, u);
  }
  return out;
}

Graph simulate_graph(std::span<const Point> positions, double alpha, Rng& rng) {
  const int n = static_cast<int>(positions.size());
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double eta = alpha - geodesic_distance(positions[i], positions[j]);
      const double prob = 1.0 / (1.0 + std::exp(-eta));
      if (uniform(rng) < prob) edges.emplace_back(i, j);
    }
  }
  return Graph(n, std::move(edges));
}

double geweke_z(std::span<const double> series, double first, double last) {
  const std::size_t n = series.size();
  const std::size_t na = static_cast<std::size_t>(first * n);
  const std::size_t nb = static_cast<std::size_t>(last * n);
  if (na < 4 || nb < 4) throw Error(ErrorCode::InvalidArgument, "series too short for a Geweke diagnostic");
  // Mean and batch-means variance of the mean.
  auto stats = [](std::span<const double> seg) {
    const std::size_t len = seg.size();
    double mean = 0.0;
    for (double v : seg) mean += v;
    mean /= len;
    const std::size_t batch = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(len))));
    const std::size_t batches = len / batch;
    double var = 0.0;
    if (batches >= 2) {
      for (std::size_t b = 0; b < batches; ++b) {
        double bm = 0.0;
        for (std::size_t i = 0; i < batch; ++i) bm += seg[b * batch + i];
        bm /= batch;
        var += (bm - mean) * (bm - mean);
      }
      var /= (batches - 1);
      var /= batches;
    }
    return std::pair{mean, var};
  };
  const auto [ma, va] = stats(series.subspan(0, na));
  const auto [mb, vb] = stats(series.subspan(n - nb, nb));
  const double denom = std::sqrt(va + vb);
  if (denom == 0.0) return ma == mb ? 0.0 : std::numeric_limits<double>::infinity();
  return (ma - mb) / denom;
}

}  // namespace geowrap
