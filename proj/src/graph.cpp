#include "kcb/graph.hpp"

#include "kcb/random.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>
#include <unordered_map>

namespace kcb {

namespace {

std::vector<int> bfs_distances(const Graph& g, int source) {
  std::vector<int> dist(g.vertex_count(), -1);
  std::queue<int> q;
  dist[source] = 0;
  q.push(source);
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (int w : g.neighbors(u)) {
      if (dist[w] < 0) {
        dist[w] = dist[u] + 1;
        q.push(w);
      }
    }
  }
  return dist;
}

}  // namespace

Graph::Graph(int vertex_count, const std::vector<Edge>& edges) {
  build(vertex_count, edges, true);
  if (!is_connected()) throw GraphError("graph is not connected");
}

Graph Graph::unchecked(int vertex_count, const std::vector<Edge>& edges) {
  Graph g;
  g.build(vertex_count, edges, false);
  return g;
}

void Graph::build(int vertex_count, const std::vector<Edge>& edges, bool strict) {
  if (vertex_count < 1) throw GraphError("graph needs at least one vertex");
  adjacency_.assign(vertex_count, {});
  std::set<Edge> seen;
  for (auto [a, b] : edges) {
    if (a < 0 || b < 0 || a >= vertex_count || b >= vertex_count)
      throw GraphError("edge (" + std::to_string(a) + "," + std::to_string(b) + ") out of range");
    if (a == b) {
      if (strict) throw GraphError("self-loop at vertex " + std::to_string(a));
      continue;
    }
    const Edge key{std::min(a, b), std::max(a, b)};
    if (!seen.insert(key).second) {
      if (strict) throw GraphError("duplicate edge (" + std::to_string(a) + "," + std::to_string(b) + ")");
      continue;
    }
    adjacency_[a].push_back(b);
    adjacency_[b].push_back(a);
  }
  for (auto& nb : adjacency_) std::sort(nb.begin(), nb.end());
}

Graph Graph::complete(int vertex_count) {
  std::vector<Edge> e;
  for (int i = 0; i < vertex_count; ++i)
    for (int j = i + 1; j < vertex_count; ++j) e.emplace_back(i, j);
  return Graph(vertex_count, e);
}

Graph Graph::path(int vertex_count) {
  std::vector<Edge> e;
  for (int i = 0; i + 1 < vertex_count; ++i) e.emplace_back(i, i + 1);
  return Graph(vertex_count, e);
}

Graph Graph::star(int vertex_count) {
  std::vector<Edge> e;
  for (int i = 1; i < vertex_count; ++i) e.emplace_back(0, i);
  return Graph(vertex_count, e);
}

std::size_t Graph::edge_count() const {
  std::size_t total = 0;
  for (const auto& nb : adjacency_) total += nb.size();
  return total / 2;
}

bool Graph::adjacent(int a, int b) const {
  const auto& nb = adjacency_.at(a);
  return std::binary_search(nb.begin(), nb.end(), b);
}

std::vector<Edge> Graph::edges() const {
  std::vector<Edge> out;
  for (int a = 0; a < vertex_count(); ++a)
    for (int b : adjacency_[a])
      if (a < b) out.emplace_back(a, b);
  return out;
}

bool Graph::is_connected() const {
  const auto d = bfs_distances(*this, 0);
  return std::none_of(d.begin(), d.end(), [](int x) { return x < 0; });
}

int DistanceMatrix::diameter() const {
  int best = 0;
  for (int v : d_) {
    if (v < 0) return std::numeric_limits<int>::max();
    best = std::max(best, v);
  }
  return best;
}

DistanceMatrix all_pairs_distances(const Graph& g) {
  const int n = g.vertex_count();
  DistanceMatrix dm(n);
  for (int s = 0; s < n; ++s) {
    const auto d = bfs_distances(g, s);
    for (int t = 0; t < n; ++t) dm.at(s, t) = d[t];
  }
  return dm;
}

Graph graph_power(const Graph& g, int gamma) { return graph_power(g, all_pairs_distances(g), gamma); }

Graph graph_power(const Graph& g, const DistanceMatrix& dist, int gamma) {
  if (gamma < 1) throw GraphError("graph power requires gamma >= 1");
  std::vector<Edge> e;
  const int n = g.vertex_count();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const int d = dist(i, j);
      if (d >= 1 && d <= gamma) e.emplace_back(i, j);
    }
  return Graph::unchecked(n, e);
}

CliqueCover greedy_clique_cover(const Graph& g) {
  const int n = g.vertex_count();
  CliqueCover cover;
  cover.clique_of.assign(n, -1);
  std::vector<bool> covered(n, false);

  for (int seed = 0; seed < n; ++seed) {
    if (covered[seed]) continue;
    // Degree within the still-uncovered vertices, fixed for this clique.
    std::vector<int> open_degree(n, 0);
    for (int v = 0; v < n; ++v) {
      if (covered[v]) continue;
      for (int w : g.neighbors(v))
        if (!covered[w]) ++open_degree[v];
    }

    std::vector<int> members{seed};
    std::vector<int> candidates;
    for (int w : g.neighbors(seed))
      if (!covered[w]) candidates.push_back(w);

    while (!candidates.empty()) {
      int best = candidates.front();
      for (int c : candidates)
        if (open_degree[c] > open_degree[best] || (open_degree[c] == open_degree[best] && c < best))
          best = c;
      members.push_back(best);
      std::erase_if(candidates, [&](int c) { return c == best || !g.adjacent(c, best); });
    }

    std::sort(members.begin(), members.end());
    const int id = static_cast<int>(cover.cliques.size());
    for (int m : members) {
      covered[m] = true;
      cover.clique_of[m] = id;
    }
    cover.cliques.push_back(std::move(members));
  }
  return cover;
}

std::vector<int> greedy_max_weight_independent_set(const Graph& g, const std::vector<double>& weights) {
  const int n = g.vertex_count();
  if (static_cast<int>(weights.size()) != n) throw GraphError("weights must cover every vertex");
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return weights[a] > weights[b]; });

  std::vector<bool> blocked(n, false);
  std::vector<int> chosen;
  for (int v : order) {
    if (blocked[v]) continue;
    chosen.push_back(v);
    blocked[v] = true;
    for (int w : g.neighbors(v)) blocked[w] = true;
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

CentralAssignment assign_peripherals(const Graph& gpow, const std::vector<int>& centrals,
                                     const std::vector<int>& degrees, const DistanceMatrix& dist) {
  const int n = gpow.vertex_count();
  CentralAssignment out;
  out.centrals = centrals;
  std::sort(out.centrals.begin(), out.centrals.end());
  out.is_central.assign(n, false);
  out.central_of.assign(n, -1);
  out.delay.assign(n, 0);
  for (int c : out.centrals) {
    out.is_central.at(c) = true;
    out.central_of[c] = c;
  }
  for (int p = 0; p < n; ++p) {
    if (out.is_central[p]) continue;
    int best = -1;
    for (int c : out.centrals) {
      if (!gpow.adjacent(p, c)) continue;
      if (best < 0 || degrees.at(c) > degrees.at(best)) best = c;
    }
    if (best < 0)
      throw GraphError("peripheral vertex " + std::to_string(p) +
                       " has no adjacent central; the central set is not maximal");
    out.central_of[p] = best;
    out.delay[p] = dist(p, best);
  }
  return out;
}

std::vector<double> neighborhood_weights(const Graph& gpow) {
  std::vector<double> w(gpow.vertex_count());
  for (int v = 0; v < gpow.vertex_count(); ++v) w[v] = gpow.degree(v);
  return w;
}

Graph gen_erdos_renyi(int vertex_count, double p, std::uint64_t seed, int max_attempts) {
  if (vertex_count < 2) throw GraphError("Erdos-Renyi graph needs V >= 2");
  if (!(p > 0.0 && p <= 1.0)) throw GraphError("Erdos-Renyi probability must lie in (0, 1]");
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(Purpose::graph), static_cast<std::uint64_t>(attempt)}));
    std::bernoulli_distribution coin(p);
    std::vector<Edge> e;
    for (int i = 0; i < vertex_count; ++i)
      for (int j = i + 1; j < vertex_count; ++j)
        if (coin(rng)) e.emplace_back(i, j);
    auto g = Graph::unchecked(vertex_count, e);
    if (g.is_connected()) return g;
  }
  throw GraphError("no connected Erdos-Renyi sample after " + std::to_string(max_attempts) +
                   " attempts (V=" + std::to_string(vertex_count) + ", p=" + std::to_string(p) + ")");
}

Graph load_edge_list(std::string_view text, const EdgeListOptions& options) {
  std::unordered_map<long long, int> ids;
  std::vector<Edge> raw;
  auto id_of = [&](long long label) {
    auto [it, inserted] = ids.emplace(label, static_cast<int>(ids.size()));
    return it->second;
  };

  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    long long a = 0, b = 0;
    std::string extra;
    if (!(fields >> a >> b) || (fields >> extra))
      throw GraphError("edge list line " + std::to_string(line_no) + ": expected two integers, got '" + line + "'");
    const int ia = id_of(a);
    const int ib = id_of(b);
    raw.emplace_back(ia, ib);
  }
  if (ids.empty()) throw GraphError("edge list contains no edges");

  const auto full = Graph::unchecked(static_cast<int>(ids.size()), raw);
  const int n = full.vertex_count();

  // Largest connected component; the first one found wins ties.
  std::vector<int> component(n, -1);
  std::vector<int> best_members;
  for (int s = 0, label = 0; s < n; ++s) {
    if (component[s] >= 0) continue;
    std::vector<int> members;
    std::queue<int> q;
    component[s] = label;
    q.push(s);
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      members.push_back(u);
      for (int w : full.neighbors(u))
        if (component[w] < 0) {
          component[w] = label;
          q.push(w);
        }
    }
    if (members.size() > best_members.size()) best_members = std::move(members);
    ++label;
  }
  std::sort(best_members.begin(), best_members.end());

  std::vector<int> keep = best_members;
  const int target = options.subsample_vertices;
  if (target > 0 && target < static_cast<int>(keep.size())) {
    // BFS ball from the lowest-id vertex of the component.
    std::vector<bool> seen(n, false);
    std::vector<int> ball;
    std::queue<int> q;
    seen[keep.front()] = true;
    q.push(keep.front());
    while (!q.empty() && static_cast<int>(ball.size()) < target) {
      const int u = q.front();
      q.pop();
      ball.push_back(u);
      for (int w : full.neighbors(u))
        if (!seen[w]) {
          seen[w] = true;
          q.push(w);
        }
    }
    std::sort(ball.begin(), ball.end());
    keep = std::move(ball);
  }

  std::vector<int> relabel(n, -1);
  for (std::size_t i = 0; i < keep.size(); ++i) relabel[keep[i]] = static_cast<int>(i);
  std::vector<Edge> e;
  for (auto [a, b] : full.edges())
    if (relabel[a] >= 0 && relabel[b] >= 0) e.emplace_back(relabel[a], relabel[b]);
  return Graph(static_cast<int>(keep.size()), e);
}

Graph load_edge_list_file(const std::string& path, const EdgeListOptions& options) {
  std::ifstream in(path);
  if (!in) throw GraphError("cannot open edge list '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return load_edge_list(buf.str(), options);
  } catch (const GraphError& e) {
    throw GraphError(path + ": " + e.what());
  }
}

}  // namespace kcb
