#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "geowrap/distributions.hpp"

namespace geowrap {

/// Undirected simple graph on nodes 0..n-1.
class Graph {
 public:
  Graph(int n, std::vector<std::pair<int, int>> edges);

  int size() const noexcept { return n_; }
  const std::vector<std::pair<int, int>>& edges() const noexcept { return edges_; }
  bool has_edge(int i, int j) const { return adjacency_[static_cast<std::size_t>(i) * n_ + j] != 0; }
  int degree(int i) const;

 private:
  int n_;
  std::vector<std::pair<int, int>> edges_;
  std::vector<std::uint8_t> adjacency_;
};

// Padgett's Florentine marriage network without the isolated Pucci family:
// 15 nodes, 20 edges, families indexed in alphabetical order.
Graph florentine_graph();
const std::vector<std::string>& florentine_families();

/// Priors of the latent distance model:
///   alpha ~ N(alpha_mean, alpha_sd^2),
///   z_i   ~ WN(p0, position_sigma^2 I) (Lambert variant on 2-manifolds).
struct NetworkPriors {
  double alpha_mean = 0.0;
  double alpha_sd = 10.0;
  double position_sigma = 1.0;

  // position_sigma = 1 on the hyperboloid, 0.3 on the sphere.
  static NetworkPriors defaults_for(const ManifoldId& manifold);
  WrappedNormal position_prior(const ManifoldId& manifold) const;
};

struct NetworkState {
  std::vector<Point> positions;
  double alpha = 0.0;
  double step_position = 0.1;
  double step_alpha = 0.2;
};

// sum_{i<j} y_ij eta_ij - log(1 + e^eta_ij),  eta_ij = alpha - d(z_i, z_j)
double network_log_likelihood(std::span<const Point> positions, double alpha, const Graph& graph);
double network_log_posterior(const NetworkState& state, const Graph& graph, const NetworkPriors& priors);

/// log density of the random-walk proposal z -> z' used by mh_run. Equal in
/// both directions, so the MH ratio omits it.
double position_proposal_log_density(const Point& from, const Point& to, double step);

enum class InitMode { Mds, Base };

struct MhConfig {
  long iterations = 100000;
  long burn_in = 10000;
  long thin = 100;
  double step_position = 0.1;
  double step_alpha = 0.2;
  InitMode init = InitMode::Mds;
  double initial_alpha = 0.0;
  bool update_positions = true;
};

struct TraceRecord {
  long iteration;
  double log_posterior;
  double alpha;
  double accept_rate_position;  // cumulative
  double accept_rate_alpha;     // cumulative
};

struct Trace {
  long thin = 1;
  std::vector<TraceRecord> records;
  std::vector<std::string> warnings;
};

struct PosteriorSummary {
  long samples = 0;  // post-burn-in iterations
  double alpha_mean = 0.0;
  double alpha_sd = 0.0;
  double log_posterior_mean = 0.0;
  double accept_rate_position = 0.0;  // post-burn-in
  double accept_rate_alpha = 0.0;     // post-burn-in
  double geweke_z = 0.0;              // on the recorded post-burn-in log posterior; NaN if < 40 records
};

struct MhResult {
  NetworkState state;
  Trace trace;
  PosteriorSummary summary;
  // Every post-burn-in alpha draw; empty unless requested.
  std::vector<double> alpha_draws;
};

/// Random-walk Metropolis-Hastings: each sweep proposes every z_i from a
/// N(0, step_position^2 I) tangent draw wrapped at the current z_i, then
/// alpha from a Gaussian random walk.
MhResult mh_run(const Graph& graph, const ManifoldId& manifold, const MhConfig& config, const NetworkPriors& priors,
                Rng& rng, bool keep_alpha_draws = false);

/// Same as mh_run from an explicit starting state.
MhResult mh_run_from(const Graph& graph, NetworkState state, const MhConfig& config, const NetworkPriors& priors,
                     Rng& rng, bool keep_alpha_draws = false);

/// Independent chains with seeds seed + c, run on up to `threads` threads.
std::vector<MhResult> mh_run_chains(const Graph& graph, const ManifoldId& manifold, const MhConfig& config,
                                    const NetworkPriors& priors, std::uint64_t seed, int chains, int threads);

/// Classical MDS of shortest-path distances, rescaled to RMS norm `rms` and
/// wrapped at p0 (Lambert for k = 2, exp otherwise). Only the largest
/// connected component is embedded; other nodes sit at p0. On the sphere
/// chart radii are capped at `max_radius` when given.
std::vector<Point> mds_init(const Graph& graph, const ManifoldId& manifold, double rms = 1.0,
                            std::optional<double> max_radius = std::nullopt);

Graph simulate_graph(std::span<const Point> positions, double alpha, Rng& rng);

/// Geweke z-score comparing the first `first` and last `last` fractions of a
/// series, with batch-means variance estimates.
double geweke_z(std::span<const double> series, double first = 0.1, double last = 0.5);

}  // namespace geowrap
