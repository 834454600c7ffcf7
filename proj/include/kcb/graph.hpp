#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace kcb {

class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Edge = std::pair<int, int>;

/// Undirected simple graph on vertices 0..V-1.
///
/// The public constructor rejects self-loops, duplicate edges and
/// disconnected inputs. `Graph::unchecked` skips the connectivity check and
/// silently drops self-loops/duplicates; partition routines run on
/// induced subgraphs that may be disconnected.
class Graph {
 public:
  Graph(int vertex_count, const std::vector<Edge>& edges);

  static Graph unchecked(int vertex_count, const std::vector<Edge>& edges);
  static Graph complete(int vertex_count);
  static Graph path(int vertex_count);
  static Graph star(int vertex_count);  // center is vertex 0

  int vertex_count() const { return static_cast<int>(adjacency_.size()); }
  std::size_t edge_count() const;
  const std::vector<int>& neighbors(int v) const { return adjacency_.at(v); }
  int degree(int v) const { return static_cast<int>(adjacency_.at(v).size()); }
  bool adjacent(int a, int b) const;
  /// Sorted (lo, hi) pairs.
  std::vector<Edge> edges() const;
  bool is_connected() const;

  friend bool operator==(const Graph& a, const Graph& b) { return a.adjacency_ == b.adjacency_; }

 private:
  Graph() = default;
  void build(int vertex_count, const std::vector<Edge>& edges, bool strict);

  std::vector<std::vector<int>> adjacency_;  // sorted
};

/// Shortest-path hop counts; unreachable pairs hold -1.
class DistanceMatrix {
 public:
  explicit DistanceMatrix(int vertex_count)
      : n_(vertex_count), d_(static_cast<std::size_t>(vertex_count) * vertex_count, -1) {}

  int operator()(int a, int b) const { return d_[static_cast<std::size_t>(a) * n_ + b]; }
  int& at(int a, int b) { return d_[static_cast<std::size_t>(a) * n_ + b]; }
  int size() const { return n_; }
  int diameter() const;

 private:
  int n_;
  std::vector<int> d_;
};

DistanceMatrix all_pairs_distances(const Graph& g);

/// Edge (i, j) iff 1 <= d(i, j) <= gamma.
Graph graph_power(const Graph& g, int gamma);
Graph graph_power(const Graph& g, const DistanceMatrix& dist, int gamma);

struct CliqueCover {
  std::vector<std::vector<int>> cliques;  // each sorted ascending
  std::vector<int> clique_of;             // vertex -> index into cliques

  std::size_t size() const { return cliques.size(); }
  const std::vector<int>& clique_containing(int v) const { return cliques.at(clique_of.at(v)); }
};

/// Grows cliques from the lowest-id uncovered vertex, adding the candidate
/// with the most uncovered neighbours (ties: lowest id).
CliqueCover greedy_clique_cover(const Graph& g);

/// Greedy by descending weight, ties by lowest id. Always maximal.
std::vector<int> greedy_max_weight_independent_set(const Graph& g, const std::vector<double>& weights);

struct CentralAssignment {
  std::vector<int> centrals;          // sorted
  std::vector<bool> is_central;       // per vertex
  std::vector<int> central_of;        // peripheral -> central; central -> itself
  std::vector<int> delay;             // peripheral -> d(p, cent(p)); central -> 0
};

CentralAssignment assign_peripherals(const Graph& gpow, const std::vector<int>& centrals,
                                     const std::vector<int>& degrees, const DistanceMatrix& dist);

/// |N_gamma(v)| counted as the G_gamma degree (v itself excluded).
std::vector<double> neighborhood_weights(const Graph& gpow);

/// Resamples with derived seeds until connected; throws after max_attempts.
Graph gen_erdos_renyi(int vertex_count, double p, std::uint64_t seed, int max_attempts = 1000);

struct EdgeListOptions {
  int subsample_vertices = 0;  // 0 keeps the whole largest component
};

/// SNAP-style edge list: '#' comments, whitespace separated integer pairs.
Graph load_edge_list(std::string_view text, const EdgeListOptions& options = {});
Graph load_edge_list_file(const std::string& path, const EdgeListOptions& options = {});

}  // namespace kcb
