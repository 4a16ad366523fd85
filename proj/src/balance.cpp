#include "msb/balance.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <thread>
#include <unordered_set>

#include "msb/rng.hpp"

namespace msb {

int TransitiveTriad::num_unlabeled() const {
  return static_cast<int>(std::count(signs.begin(), signs.end(), EdgeSign::Unlabeled));
}

void for_each_transitive_triad(const SignedDigraph& g, const std::function<void(const TransitiveTriad&)>& visit) {
  TransitiveTriad t;
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    for (NodeId u : g.in_neighbors(v)) {
      const EdgeSign s_uv = *g.label(u, v);
      for (NodeId w : g.out_neighbors(v)) {
        if (w == u) continue;
        const auto s_uw = g.label(u, w);
        if (!s_uw) continue;
        t.u = u;
        t.v = v;
        t.w = w;
        t.signs = {s_uv, *g.label(v, w), *s_uw};
        visit(t);
      }
    }
  }
}

std::vector<TransitiveTriad> enumerate_transitive_triads(const SignedDigraph& g) {
  std::vector<TransitiveTriad> out;
  for_each_transitive_triad(g, [&](const TransitiveTriad& t) { out.push_back(t); });
  return out;
}

const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::Clean:
      return "clean";
    case Provenance::MicroSB:
      return "micro";
    case Provenance::MesoSB:
      return "meso";
  }
  return "?";
}

std::vector<EdgeSample> micro_sb_label(const SignedDigraph& g) {
  std::map<Edge, int> votes;
  for_each_transitive_triad(g, [&](const TransitiveTriad& t) {
    if (t.num_unlabeled() != 1) return;
    const Edge edges[3] = {{t.u, t.v}, {t.v, t.w}, {t.u, t.w}};
    int product = 1;
    int open = 0;
    for (int i = 0; i < 3; ++i) {
      if (t.signs[i] == EdgeSign::Unlabeled) {
        open = i;
      } else {
        product *= static_cast<int>(t.signs[i]);
      }
    }
    votes[edges[open]] += product;
  });
  std::vector<EdgeSample> out;
  for (const auto& [edge, vote] : votes) {
    if (vote == 0) continue;
    out.push_back({edge, vote > 0 ? 1 : -1, Provenance::MicroSB, 1.0});
  }
  return out;
}

std::vector<EdgeSample> meso_sb_label(std::span<const Edge> unlabeled, const Partition& p) {
  std::vector<EdgeSample> out;
  out.reserve(unlabeled.size());
  for (const Edge& e : unlabeled) {
    out.push_back({e, p.same(e.src, e.dst) ? 1 : -1, Provenance::MesoSB, 1.0});
  }
  return out;
}

std::vector<EdgeSample> build_sb_set(const std::vector<EdgeSample>& micro, const std::vector<EdgeSample>& meso,
                                     SbMode mode) {
  std::vector<EdgeSample> out;
  if (mode != SbMode::MesoOnly) out.insert(out.end(), micro.begin(), micro.end());
  if (mode != SbMode::MicroOnly) out.insert(out.end(), meso.begin(), meso.end());
  return out;
}

// ---------------------------------------------------------------------------

std::string pattern_name(int index) {
  std::string s(3, '+');
  for (int i = 0; i < 3; ++i) {
    if (index & (1 << i)) s[static_cast<std::size_t>(i)] = '-';
  }
  return s;
}

CensusReport triad_census(const SignedDigraph& g, const Partition* partition) {
  CensusReport r;
  for_each_transitive_triad(g, [&](const TransitiveTriad& t) {
    if (t.num_unlabeled() > 0) {
      ++r.skipped_triads;
      return;
    }
    ++r.counts[static_cast<std::size_t>(pattern_index(static_cast<int>(t.signs[0]), static_cast<int>(t.signs[1]),
                                                      static_cast<int>(t.signs[2])))];
  });
  for (int i = 0; i < 8; ++i) {
    r.signed_triads += r.counts[static_cast<std::size_t>(i)];
    if (pattern_balanced(i)) r.balanced += r.counts[static_cast<std::size_t>(i)];
  }
  r.balanced_fraction = r.signed_triads ? static_cast<double>(r.balanced) / static_cast<double>(r.signed_triads) : 0.0;
  if (partition) r.meso_consistent = meso_consistency_count(g, *partition);
  return r;
}

std::uint64_t meso_consistency_count(const SignedDigraph& g, const Partition& p) {
  std::uint64_t count = 0;
  for (const Edge& e : g.positive_edges()) count += p.same(e.src, e.dst) ? 1 : 0;
  for (const Edge& e : g.negative_edges()) count += p.same(e.src, e.dst) ? 0 : 1;
  return count;
}

std::uint64_t default_swap_budget(const SignedDigraph& g) {
  const double m = static_cast<double>(g.num_labeled());
  if (m < 2.0) return 0;
  return static_cast<std::uint64_t>(std::ceil(m * std::log(m)));
}

NullModelSample null_model_sample(const SignedDigraph& g, std::uint64_t seed, std::optional<std::uint64_t> n_swaps) {
  std::vector<Edge> pos(g.positive_edges().begin(), g.positive_edges().end());
  std::vector<Edge> neg(g.negative_edges().begin(), g.negative_edges().end());
  std::unordered_set<std::uint64_t> present;
  present.reserve(2 * g.num_edges());
  for (auto set : {g.positive_edges(), g.negative_edges(), g.unlabeled_edges()}) {
    for (const Edge& e : set) present.insert(edge_key(e));
  }

  const std::uint64_t budget = n_swaps.value_or(default_swap_budget(g));
  const std::size_t total = pos.size() + neg.size();
  NullModelSample out;
  Rng rng(seed);
  for (std::uint64_t t = 0; t < budget && total > 0; ++t) {
    ++out.attempted;
    const auto i = static_cast<std::size_t>(rng.index(total));
    const bool positive = i < pos.size();
    std::vector<Edge>& set = positive ? pos : neg;
    if (set.size() < 2) continue;
    const std::size_t first = positive ? i : i - pos.size();
    auto second = static_cast<std::size_t>(rng.index(set.size() - 1));
    if (second >= first) ++second;

    const auto [a, b] = set[first];
    const auto [c, d] = set[second];
    if (a == c || a == d || b == c || b == d) continue;
    const Edge ad{a, d}, cb{c, b};
    if (present.contains(edge_key(ad)) || present.contains(edge_key(cb))) continue;
    present.erase(edge_key(set[first]));
    present.erase(edge_key(set[second]));
    present.insert(edge_key(ad));
    present.insert(edge_key(cb));
    set[first] = ad;
    set[second] = cb;
    ++out.accepted;
  }
  out.graph = SignedDigraph(g.num_nodes(), std::move(pos), std::move(neg),
                            {g.unlabeled_edges().begin(), g.unlabeled_edges().end()});
  return out;
}

std::vector<std::array<std::uint32_t, 4>> signed_degrees(const SignedDigraph& g) {
  std::vector<std::array<std::uint32_t, 4>> deg(g.num_nodes(), {0, 0, 0, 0});
  for (const Edge& e : g.positive_edges()) {
    ++deg[e.src][0];
    ++deg[e.dst][2];
  }
  for (const Edge& e : g.negative_edges()) {
    ++deg[e.src][1];
    ++deg[e.dst][3];
  }
  return deg;
}

namespace {

ZScoreEntry summarize(std::string name, bool balanced, double empirical, const std::vector<double>& null_values) {
  ZScoreEntry e;
  e.name = std::move(name);
  e.balanced = balanced;
  e.empirical = empirical;
  const double n = static_cast<double>(null_values.size());
  if (null_values.empty()) return e;
  double mean = 0.0;
  for (double x : null_values) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : null_values) ss += (x - mean) * (x - mean);
  e.null_mean = mean;
  e.null_std = null_values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  if (e.null_std > 0.0) e.z = (empirical - mean) / e.null_std;
  return e;
}

}  // namespace

ZScoreReport zscore_report(const SignedDigraph& g, const Partition& partition, std::uint64_t seed,
                           const ZScoreOptions& options) {
  const CensusReport empirical = triad_census(g);
  const double empirical_meso = static_cast<double>(meso_consistency_count(g, partition));
  const auto reference_degrees = signed_degrees(g);

  struct SampleResult {
    std::array<std::uint64_t, 8> counts{};
    std::uint64_t meso = 0;
    std::uint64_t attempted = 0, accepted = 0;
    bool degrees_ok = true;
  };
  const std::size_t n_samples = options.samples;
  std::vector<SampleResult> results(n_samples);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t s = next++; s < n_samples; s = next++) {
      NullModelSample sample = null_model_sample(g, derive_seed(seed, s), options.swaps_per_sample);
      SampleResult& r = results[s];
      r.counts = triad_census(sample.graph).counts;
      if (options.redetect_communities) {
        const Partition p = louvain(unsigned_projection(sample.graph), derive_seed(seed, n_samples + s));
        r.meso = meso_consistency_count(sample.graph, p);
      } else {
        r.meso = meso_consistency_count(sample.graph, partition);
      }
      r.attempted = sample.attempted;
      r.accepted = sample.accepted;
      r.degrees_ok = signed_degrees(sample.graph) == reference_degrees &&
                     sample.graph.positive_edges().size() == g.positive_edges().size() &&
                     sample.graph.negative_edges().size() == g.negative_edges().size();
    }
  };
  std::size_t threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(n_samples, 1));
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  ZScoreReport report;
  report.samples = n_samples;
  for (int i = 0; i < 8; ++i) {
    std::vector<double> values;
    for (const SampleResult& r : results) values.push_back(static_cast<double>(r.counts[static_cast<std::size_t>(i)]));
    report.patterns[static_cast<std::size_t>(i)] =
        summarize(pattern_name(i), pattern_balanced(i),
                  static_cast<double>(empirical.counts[static_cast<std::size_t>(i)]), values);
  }
  std::vector<double> meso_values;
  for (const SampleResult& r : results) {
    meso_values.push_back(static_cast<double>(r.meso));
    report.swaps_attempted += r.attempted;
    report.swaps_accepted += r.accepted;
    report.degrees_preserved = report.degrees_preserved && r.degrees_ok;
  }
  report.meso = summarize("meso", true, empirical_meso, meso_values);
  return report;
}

// ---------------------------------------------------------------------------

nlohmann::json to_json(const CensusReport& r) {
  nlohmann::json patterns = nlohmann::json::object();
  for (int i = 0; i < 8; ++i) patterns[pattern_name(i)] = r.counts[static_cast<std::size_t>(i)];
  nlohmann::json j = {
      {"patterns", patterns},
      {"signed_triads", r.signed_triads},
      {"skipped_triads", r.skipped_triads},
      {"balanced", r.balanced},
      {"balanced_fraction", r.balanced_fraction},
  };
  if (r.meso_consistent) j["meso_consistent"] = *r.meso_consistent;
  return j;
}

namespace {

nlohmann::json entry_json(const ZScoreEntry& e) {
  nlohmann::json j = {{"name", e.name},           {"balanced", e.balanced}, {"empirical", e.empirical},
                      {"null_mean", e.null_mean}, {"null_std", e.null_std}};
  j["z"] = e.z ? nlohmann::json(*e.z) : nlohmann::json("undefined");
  return j;
}

}  // namespace

nlohmann::json to_json(const ZScoreReport& r) {
  nlohmann::json patterns = nlohmann::json::array();
  for (const ZScoreEntry& e : r.patterns) patterns.push_back(entry_json(e));
  return {
      {"samples", r.samples},
      {"patterns", patterns},
      {"meso", entry_json(r.meso)},
      {"swaps_attempted", r.swaps_attempted},
      {"swaps_accepted", r.swaps_accepted},
      {"acceptance_rate", r.acceptance_rate()},
      {"degrees_preserved", r.degrees_preserved},
  };
}

}  // namespace msb
