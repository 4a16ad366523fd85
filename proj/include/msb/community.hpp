#pragma once

#include <cstdint>
#include <vector>

#include "msb/graph.hpp"

namespace msb {

/// Total node -> community assignment with dense ids 0..k-1.
struct Partition {
  std::vector<std::uint32_t> assignment;
  std::uint32_t num_communities = 0;

  std::uint32_t operator[](NodeId u) const { return assignment[u]; }
  bool same(NodeId u, NodeId v) const { return assignment[u] == assignment[v]; }

  /// Renumbers ids densely in order of first appearance over nodes 0..n-1.
  static Partition from_labels(const std::vector<std::uint32_t>& labels);
};

/// Newman modularity with resolution gamma; 0 for a graph without edges.
double modularity(const UndirectedGraph& g, const Partition& p, double resolution = 1.0);

/// Two-phase Louvain (local moving, then aggregation) repeated until a level
/// makes no move. Node visit order is shuffled per level from `seed`; gain
/// ties go to the lowest community id. After each local-moving phase,
/// communities that fell apart are split into their connected pieces, so
/// every community is connected in the level graph.
///
/// When `level_modularity` is given it receives the modularity after each
/// level, measured on the input graph.
Partition louvain(const UndirectedGraph& g, std::uint64_t seed, double resolution = 1.0,
                  std::vector<double>* level_modularity = nullptr);

}  // namespace msb
