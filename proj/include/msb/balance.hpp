#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "msb/community.hpp"
#include "msb/graph.hpp"

namespace msb {

/// Ordered triple (u, v, w) with edges (u,v), (v,w) and the closing chord (u,w).
struct TransitiveTriad {
  NodeId u = 0, v = 0, w = 0;
  /// Labels of (u,v), (v,w), (u,w) in that order.
  std::array<EdgeSign, 3> signs{};

  int num_unlabeled() const;
};

/// Calls `visit` once per transitive triad. Wedges u->v->w are expanded at
/// each pivot v and closed by a hash lookup of (u,w).
void for_each_transitive_triad(const SignedDigraph& g, const std::function<void(const TransitiveTriad&)>& visit);
std::vector<TransitiveTriad> enumerate_transitive_triads(const SignedDigraph& g);

enum class Provenance : std::uint8_t { Clean, MicroSB, MesoSB };

const char* to_string(Provenance p);

/// A training unit for the sign loss.
struct EdgeSample {
  Edge edge;
  int sign = 1;
  Provenance provenance = Provenance::Clean;
  double weight = 1.0;
};

/// Per unlabeled edge, majority vote of the signs implied by balance over the
/// triads where it is the only unlabeled edge. Ties are dropped. Output is
/// sorted by edge.
std::vector<EdgeSample> micro_sb_label(const SignedDigraph& g);

/// +1 for every unlabeled edge inside a community, -1 across communities.
std::vector<EdgeSample> meso_sb_label(std::span<const Edge> unlabeled, const Partition& p);

enum class SbMode { Both, MicroOnly, MesoOnly };

std::vector<EdgeSample> build_sb_set(const std::vector<EdgeSample>& micro, const std::vector<EdgeSample>& meso,
                                     SbMode mode);

// ---------------------------------------------------------------------------
// Census and null model

/// Index of a sign triple: bit i set when the i-th edge is negative, so
/// pattern 0 is "+++" and pattern 7 is "---".
inline int pattern_index(int s_uv, int s_vw, int s_uw) {
  return (s_uv < 0 ? 1 : 0) | (s_vw < 0 ? 2 : 0) | (s_uw < 0 ? 4 : 0);
}
std::string pattern_name(int index);
inline bool pattern_balanced(int index) { return std::popcount(static_cast<unsigned>(index)) % 2 == 0; }

struct CensusReport {
  std::array<std::uint64_t, 8> counts{};
  std::uint64_t signed_triads = 0;
  /// Transitive triads with at least one unlabeled edge; not in `counts`.
  std::uint64_t skipped_triads = 0;
  std::uint64_t balanced = 0;
  double balanced_fraction = 0.0;
  /// Present when a partition was supplied.
  std::optional<std::uint64_t> meso_consistent;
};

CensusReport triad_census(const SignedDigraph& g, const Partition* partition = nullptr);

/// Labeled edges that are (+, intra-community) or (-, inter-community).
std::uint64_t meso_consistency_count(const SignedDigraph& g, const Partition& p);

struct NullModelSample {
  SignedDigraph graph;
  std::uint64_t attempted = 0;
  std::uint64_t accepted = 0;
};

/// ceil(|E| ln |E|) over labeled edges, 0 when there are fewer than 2.
std::uint64_t default_swap_budget(const SignedDigraph& g);

/// Same-sign double-edge swaps: (a,b),(c,d) -> (a,d),(c,b). Proposals with a
/// repeated endpoint, or whose new pairs already exist in any edge set, are
/// rejected but still count against `n_swaps`. Unlabeled edges stay fixed.
NullModelSample null_model_sample(const SignedDigraph& g, std::uint64_t seed, std::optional<std::uint64_t> n_swaps = {});

/// Per node (out+, out-, in+, in-).
std::vector<std::array<std::uint32_t, 4>> signed_degrees(const SignedDigraph& g);

struct ZScoreEntry {
  std::string name;
  bool balanced = false;
  double empirical = 0.0;
  double null_mean = 0.0;
  double null_std = 0.0;
  /// Undefined when the null standard deviation is zero.
  std::optional<double> z;
};

struct ZScoreOptions {
  std::size_t samples = 50;
  std::optional<std::uint64_t> swaps_per_sample;
  /// Communities for the mesoscale statistic are re-detected on each null
  /// sample; otherwise the empirical partition is reused.
  bool redetect_communities = true;
  std::size_t threads = 0;  ///< 0 = hardware concurrency
};

struct ZScoreReport {
  std::array<ZScoreEntry, 8> patterns;
  ZScoreEntry meso;
  std::size_t samples = 0;
  std::uint64_t swaps_attempted = 0;
  std::uint64_t swaps_accepted = 0;
  /// Every sample kept the signed in/out degree vectors and edge counts.
  bool degrees_preserved = true;

  double acceptance_rate() const {
    return swaps_attempted ? static_cast<double>(swaps_accepted) / static_cast<double>(swaps_attempted) : 0.0;
  }
};

/// z = (empirical - mean_null) / std_null over independent null samples
/// (sample standard deviation). `partition` is the empirical community
/// structure used for the mesoscale statistic.
ZScoreReport zscore_report(const SignedDigraph& g, const Partition& partition, std::uint64_t seed,
                           const ZScoreOptions& options = {});

nlohmann::json to_json(const CensusReport& report);
nlohmann::json to_json(const ZScoreReport& report);

}  // namespace msb
