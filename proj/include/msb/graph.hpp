#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace msb {

using NodeId = std::uint32_t;

enum class EdgeSign : std::int8_t { Negative = -1, Unlabeled = 0, Positive = 1 };

struct Edge {
  NodeId src = 0;
  NodeId dst = 0;
  auto operator<=>(const Edge&) const = default;
};

/// An edge together with a polarity in {+1, -1}.
struct SignedEdge {
  Edge edge;
  int sign = 1;
  auto operator<=>(const SignedEdge&) const = default;
};

inline std::uint64_t edge_key(Edge e) {
  return (static_cast<std::uint64_t>(e.src) << 32) | e.dst;
}

/// Thrown for malformed input records; carries the 1-based line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Immutable directed graph with disjoint positive, negative and unlabeled
/// edge sets. Edge lists are kept sorted, so two graphs with the same edges
/// compare equal regardless of construction order.
class SignedDigraph {
 public:
  SignedDigraph() = default;

  /// Throws std::invalid_argument if an endpoint is out of range, an edge is
  /// a self-loop, or an ordered pair appears more than once across the sets.
  SignedDigraph(std::size_t num_nodes, std::vector<Edge> positive, std::vector<Edge> negative,
                std::vector<Edge> unlabeled = {});

  static SignedDigraph from_signed(std::size_t num_nodes, std::span<const SignedEdge> labeled,
                                   std::span<const Edge> unlabeled = {});

  std::size_t num_nodes() const { return num_nodes_; }
  std::size_t num_edges() const { return pos_.size() + neg_.size() + unl_.size(); }
  std::size_t num_labeled() const { return pos_.size() + neg_.size(); }

  std::span<const Edge> positive_edges() const { return pos_; }
  std::span<const Edge> negative_edges() const { return neg_; }
  std::span<const Edge> unlabeled_edges() const { return unl_; }

  /// All labeled edges with their signs, sorted by edge.
  std::vector<SignedEdge> labeled_edges() const;

  /// Label of (u, v), or nullopt when the ordered pair is not an edge.
  std::optional<EdgeSign> label(NodeId u, NodeId v) const;
  bool has_edge(NodeId u, NodeId v) const { return labels_.contains(edge_key({u, v})); }

  std::span<const NodeId> out_neighbors(NodeId u) const {
    return {out_targets_.data() + out_offsets_[u], out_targets_.data() + out_offsets_[u + 1]};
  }
  std::span<const NodeId> in_neighbors(NodeId v) const {
    return {in_sources_.data() + in_offsets_[v], in_sources_.data() + in_offsets_[v + 1]};
  }

  friend bool operator==(const SignedDigraph& a, const SignedDigraph& b) {
    return a.num_nodes_ == b.num_nodes_ && a.pos_ == b.pos_ && a.neg_ == b.neg_ && a.unl_ == b.unl_;
  }

 private:
  std::size_t num_nodes_ = 0;
  std::vector<Edge> pos_;
  std::vector<Edge> neg_;
  std::vector<Edge> unl_;
  std::unordered_map<std::uint64_t, EdgeSign> labels_;
  std::vector<std::size_t> out_offsets_{0};
  std::vector<NodeId> out_targets_;
  std::vector<std::size_t> in_offsets_{0};
  std::vector<NodeId> in_sources_;
};

// ---------------------------------------------------------------------------
// Ingestion

enum class ValueKind {
  Rating,  ///< integer rating, binarized by sign; zero ratings are dropped
  Sign,    ///< one of -1, 0 (unlabeled), +1
};

struct ParseStats {
  std::size_t records = 0;
  std::size_t self_loops_dropped = 0;
  std::size_t zero_ratings_dropped = 0;
  std::size_t duplicates_replaced = 0;
};

struct ParsedGraph {
  SignedDigraph graph;
  /// Original token for each compacted node id.
  std::vector<std::string> node_names;
  ParseStats stats;
};

/// Maps a nonzero rating to +1 / -1. Throws std::invalid_argument on zero.
int binarize_rating(int rating);

/// Reads `src dst value [extra...]` records separated by commas or
/// whitespace. Blank lines and `#` comments are skipped. Node tokens are
/// compacted to 0..n-1, in numeric order when every token is an integer and in
/// order of first appearance otherwise. Repeated ordered pairs keep the last
/// record.
ParsedGraph parse_edge_list(std::istream& in, ValueKind kind);
ParsedGraph read_edge_list(const std::filesystem::path& path, ValueKind kind);

/// Canonical `u v s` text form, one edge per line sorted by (u, v).
void write_canonical(std::ostream& out, const SignedDigraph& g);

nlohmann::json graph_sidecar(const ParsedGraph& parsed);

// ---------------------------------------------------------------------------
// Splits and label noise

struct SplitFractions {
  double val = 0.05;
  double test = 0.05;
  double unlabeled = 0.75;
};

struct SplitDataset {
  std::size_t num_nodes = 0;
  std::uint64_t seed = 0;
  SplitFractions fractions;

  std::vector<SignedEdge> train_labeled;
  std::vector<Edge> train_unlabeled;
  /// Hidden true signs of train_unlabeled, kept for diagnostics only.
  std::vector<int> unlabeled_truth;
  std::vector<SignedEdge> val;
  std::vector<SignedEdge> test;

  double flip_fraction = 0.0;
  std::uint64_t noise_seed = 0;
  /// Indices into train_labeled whose sign was negated by inject_noise.
  std::vector<std::size_t> flipped;
};

/// Partitions the labeled edges of `g` into val, test, unlabeled and labeled
/// training parts. Sizes are floored; the remainder stays labeled.
SplitDataset split_dataset(const SignedDigraph& g, std::uint64_t seed, SplitFractions fractions = {});

struct NoiseSpec {
  double flip_fraction = 0.0;
  std::uint64_t seed = 0;
};

/// Negates exactly round(p * |train_labeled|) training labels.
SplitDataset inject_noise(SplitDataset split, const NoiseSpec& spec);

/// Keeps a seeded random floor(fraction * |E^U|) subset of the unlabeled part.
SplitDataset subsample_unlabeled(SplitDataset split, double fraction, std::uint64_t seed);

/// Graph visible during training: (possibly noisy) labeled edges plus the
/// unlabeled edges. Validation and test edges are excluded.
SignedDigraph training_graph(const SplitDataset& split);

std::string flip_digest(const SplitDataset& split);
nlohmann::json split_manifest(const SplitDataset& split);
/// Inverse of split_manifest. Throws std::invalid_argument on malformed input.
SplitDataset split_from_manifest(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Unsigned projection

struct WeightedEdge {
  NodeId a = 0;
  NodeId b = 0;
  double weight = 1.0;
};

struct Neighbor {
  NodeId node = 0;
  double weight = 0.0;
};

/// Simple undirected graph with nonnegative weights and no self-loops.
class UndirectedGraph {
 public:
  UndirectedGraph() = default;
  /// Parallel entries for the same pair are summed. Throws
  /// std::invalid_argument on self-loops, bad endpoints or negative weights.
  UndirectedGraph(std::size_t num_nodes, std::vector<WeightedEdge> edges);

  std::size_t num_nodes() const { return num_nodes_; }
  /// Edges with a < b, sorted.
  std::span<const WeightedEdge> edges() const { return edges_; }
  std::span<const Neighbor> neighbors(NodeId u) const {
    return {adj_.data() + offsets_[u], adj_.data() + offsets_[u + 1]};
  }
  double degree(NodeId u) const { return degree_[u]; }
  double total_weight() const { return total_weight_; }

 private:
  std::size_t num_nodes_ = 0;
  std::vector<WeightedEdge> edges_;
  std::vector<std::size_t> offsets_{0};
  std::vector<Neighbor> adj_;
  std::vector<double> degree_;
  double total_weight_ = 0.0;
};

/// {u, v} weighted by the number of directed edges between u and v, over all
/// three edge sets.
UndirectedGraph unsigned_projection(const SignedDigraph& g);

}  // namespace msb
