#include "msb/community.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

#include "msb/rng.hpp"

namespace msb {

Partition Partition::from_labels(const std::vector<std::uint32_t>& labels) {
  Partition p;
  p.assignment.resize(labels.size());
  std::unordered_map<std::uint32_t, std::uint32_t> dense;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, inserted] = dense.emplace(labels[i], p.num_communities);
    if (inserted) ++p.num_communities;
    p.assignment[i] = it->second;
  }
  return p;
}

double modularity(const UndirectedGraph& g, const Partition& p, double resolution) {
  const double m2 = 2.0 * g.total_weight();
  if (m2 <= 0.0) return 0.0;
  std::vector<double> internal(p.num_communities, 0.0), total(p.num_communities, 0.0);
  for (const WeightedEdge& e : g.edges()) {
    if (p[e.a] == p[e.b]) internal[p[e.a]] += 2.0 * e.weight;
  }
  for (NodeId u = 0; u < g.num_nodes(); ++u) total[p[u]] += g.degree(u);
  double q = 0.0;
  for (std::uint32_t c = 0; c < p.num_communities; ++c) {
    q += internal[c] / m2 - resolution * (total[c] / m2) * (total[c] / m2);
  }
  return q;
}

namespace {

// Weighted graph for one Louvain level. Self-loop weight A_ii is stored
// separately; degree includes it.
struct LevelGraph {
  std::vector<std::vector<Neighbor>> adj;
  std::vector<double> self_loop;
  std::vector<double> degree;

  std::size_t size() const { return adj.size(); }
};

LevelGraph level_from(const UndirectedGraph& g) {
  LevelGraph lg;
  lg.adj.resize(g.num_nodes());
  lg.self_loop.assign(g.num_nodes(), 0.0);
  lg.degree.assign(g.num_nodes(), 0.0);
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    const auto nb = g.neighbors(u);
    lg.adj[u].assign(nb.begin(), nb.end());
    lg.degree[u] = g.degree(u);
  }
  return lg;
}

constexpr double kGainTolerance = 1e-10;

// Local moving phase. Returns true if any node changed community.
bool local_moves(const LevelGraph& lg, double m2, double resolution, Rng& rng, std::vector<std::uint32_t>& comm) {
  const std::size_t n = lg.size();
  std::vector<double> tot(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) tot[comm[i]] += lg.degree[i];

  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(std::span(order));

  std::vector<double> link(n, 0.0);
  std::vector<char> seen(n, 0);
  std::vector<std::uint32_t> touched;
  bool any_move = false;
  bool moved = true;
  while (moved) {
    moved = false;
    for (NodeId i : order) {
      const std::uint32_t own = comm[i];
      const double ki = lg.degree[i];
      touched.clear();
      for (const Neighbor& nb : lg.adj[i]) {
        const std::uint32_t c = comm[nb.node];
        if (!seen[c]) {
          seen[c] = 1;
          touched.push_back(c);
        }
        link[c] += nb.weight;
      }
      tot[own] -= ki;
      const auto gain = [&](std::uint32_t c) { return link[c] - resolution * ki * tot[c] / m2; };

      std::uint32_t best = own;
      double best_gain = gain(own);
      std::sort(touched.begin(), touched.end());
      for (std::uint32_t c : touched) {
        if (c == own) continue;
        const double g = gain(c);
        if (g > best_gain + kGainTolerance) {
          best = c;
          best_gain = g;
        }
      }
      tot[best] += ki;
      for (std::uint32_t c : touched) {
        link[c] = 0.0;
        seen[c] = 0;
      }
      if (best != own) {
        comm[i] = best;
        moved = true;
        any_move = true;
      }
    }
  }
  return any_move;
}

// Relabels so every community is a connected piece of the level graph, with
// dense ids in order of first appearance. Returns the community count.
std::uint32_t split_disconnected(const LevelGraph& lg, std::vector<std::uint32_t>& comm) {
  const std::size_t n = lg.size();
  constexpr auto kUnset = static_cast<std::uint32_t>(-1);
  std::vector<std::uint32_t> piece(n, kUnset);
  std::uint32_t next = 0;
  std::vector<NodeId> stack;
  for (NodeId s = 0; s < n; ++s) {
    if (piece[s] != kUnset) continue;
    piece[s] = next;
    stack.assign(1, s);
    while (!stack.empty()) {
      const NodeId u = stack.back();
      stack.pop_back();
      for (const Neighbor& nb : lg.adj[u]) {
        if (piece[nb.node] == kUnset && comm[nb.node] == comm[u]) {
          piece[nb.node] = next;
          stack.push_back(nb.node);
        }
      }
    }
    ++next;
  }
  comm = std::move(piece);
  return next;
}

LevelGraph aggregate(const LevelGraph& lg, const std::vector<std::uint32_t>& comm, std::uint32_t k) {
  LevelGraph out;
  out.adj.resize(k);
  out.self_loop.assign(k, 0.0);
  out.degree.assign(k, 0.0);
  std::vector<std::unordered_map<std::uint32_t, double>> acc(k);
  for (std::size_t i = 0; i < lg.size(); ++i) {
    const std::uint32_t ci = comm[i];
    out.self_loop[ci] += lg.self_loop[i];
    out.degree[ci] += lg.degree[i];
    for (const Neighbor& nb : lg.adj[i]) {
      const std::uint32_t cj = comm[nb.node];
      if (ci == cj) {
        out.self_loop[ci] += nb.weight;
      } else {
        acc[ci][cj] += nb.weight;
      }
    }
  }
  for (std::uint32_t c = 0; c < k; ++c) {
    for (const auto& [d, w] : acc[c]) out.adj[c].push_back({d, w});
    std::sort(out.adj[c].begin(), out.adj[c].end(),
              [](const Neighbor& a, const Neighbor& b) { return a.node < b.node; });
  }
  return out;
}

}  // namespace

Partition louvain(const UndirectedGraph& g, std::uint64_t seed, double resolution,
                  std::vector<double>* level_modularity) {
  const std::size_t n = g.num_nodes();
  std::vector<std::uint32_t> node_comm(n);
  std::iota(node_comm.begin(), node_comm.end(), 0);
  if (level_modularity) level_modularity->clear();

  const double m2 = 2.0 * g.total_weight();
  if (m2 <= 0.0) return Partition::from_labels(node_comm);

  Rng rng(seed);
  LevelGraph lg = level_from(g);
  while (true) {
    std::vector<std::uint32_t> comm(lg.size());
    std::iota(comm.begin(), comm.end(), 0);
    if (!local_moves(lg, m2, resolution, rng, comm)) break;
    const std::uint32_t k = split_disconnected(lg, comm);
    for (auto& c : node_comm) c = comm[c];
    if (level_modularity) {
      level_modularity->push_back(modularity(g, Partition::from_labels(node_comm), resolution));
    }
    if (k == lg.size()) break;
    lg = aggregate(lg, comm, k);
  }
  return Partition::from_labels(node_comm);
}

}  // namespace msb
