#pragma once

#include <cstdint>
#include <vector>

#include "msb/graph.hpp"

namespace msb {

/// Planted-partition signed digraph: every ordered pair is an edge with
/// probability p_intra inside a block and p_inter across blocks. Edges are
/// positive inside blocks and negative across, then exactly
/// round(violation_fraction * |E|) uniformly chosen edges have their sign
/// negated.
struct PlantedConfig {
  std::size_t num_nodes = 400;
  std::size_t num_blocks = 2;
  double p_intra = 0.05;
  double p_inter = 0.01;
  double violation_fraction = 0.1;
  std::uint64_t seed = 0;
};

struct PlantedGraph {
  SignedDigraph graph;
  /// Block of each node; node u belongs to block u * num_blocks / num_nodes.
  std::vector<std::uint32_t> block;
  std::size_t violations = 0;
};

PlantedGraph planted_signed_graph(const PlantedConfig& config);

}  // namespace msb
