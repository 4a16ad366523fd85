#include "msb/synthetic.hpp"

#include <cmath>
#include <stdexcept>

#include "msb/rng.hpp"

namespace msb {

PlantedGraph planted_signed_graph(const PlantedConfig& c) {
  if (c.num_blocks == 0 || c.num_blocks > c.num_nodes) throw std::invalid_argument("bad block count");
  if (!(c.p_intra >= 0.0 && c.p_intra <= 1.0 && c.p_inter >= 0.0 && c.p_inter <= 1.0)) {
    throw std::invalid_argument("edge probabilities must lie in [0, 1]");
  }
  if (!(c.violation_fraction >= 0.0 && c.violation_fraction <= 1.0)) {
    throw std::invalid_argument("violation fraction must lie in [0, 1]");
  }
  PlantedGraph out;
  out.block.resize(c.num_nodes);
  for (std::size_t u = 0; u < c.num_nodes; ++u) out.block[u] = static_cast<std::uint32_t>(u * c.num_blocks / c.num_nodes);

  Rng rng(c.seed);
  std::vector<SignedEdge> edges;
  for (NodeId u = 0; u < c.num_nodes; ++u) {
    for (NodeId v = 0; v < c.num_nodes; ++v) {
      if (u == v) continue;
      const bool same = out.block[u] == out.block[v];
      if (rng.uniform() < (same ? c.p_intra : c.p_inter)) edges.push_back({{u, v}, same ? 1 : -1});
    }
  }
  out.violations = static_cast<std::size_t>(std::llround(c.violation_fraction * static_cast<double>(edges.size())));
  for (std::size_t i = 0; i < out.violations; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.index(edges.size() - i));
    std::swap(edges[i], edges[j]);
    edges[i].sign = -edges[i].sign;
  }
  out.graph = SignedDigraph::from_signed(c.num_nodes, edges);
  return out;
}

}  // namespace msb
