#include "msb/graph.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "msb/rng.hpp"

namespace msb {

namespace {

void build_csr(std::size_t n, const std::vector<Edge>& edges, bool by_src, std::vector<std::size_t>& offsets,
               std::vector<NodeId>& targets) {
  offsets.assign(n + 1, 0);
  for (const Edge& e : edges) ++offsets[(by_src ? e.src : e.dst) + 1];
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  targets.resize(edges.size());
  std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
  for (const Edge& e : edges) {
    const NodeId from = by_src ? e.src : e.dst;
    targets[cursor[from]++] = by_src ? e.dst : e.src;
  }
  for (std::size_t u = 0; u < n; ++u) {
    std::sort(targets.begin() + static_cast<std::ptrdiff_t>(offsets[u]),
              targets.begin() + static_cast<std::ptrdiff_t>(offsets[u + 1]));
  }
}

// Floor of frac * n, robust to products that land a hair below an integer.
std::size_t floor_fraction(double frac, std::size_t n) {
  return static_cast<std::size_t>(std::floor(frac * static_cast<double>(n) + 1e-9));
}

}  // namespace

SignedDigraph::SignedDigraph(std::size_t num_nodes, std::vector<Edge> positive, std::vector<Edge> negative,
                             std::vector<Edge> unlabeled)
    : num_nodes_(num_nodes), pos_(std::move(positive)), neg_(std::move(negative)), unl_(std::move(unlabeled)) {
  std::sort(pos_.begin(), pos_.end());
  std::sort(neg_.begin(), neg_.end());
  std::sort(unl_.begin(), unl_.end());
  labels_.reserve(num_edges());
  auto add = [&](const std::vector<Edge>& edges, EdgeSign s) {
    for (const Edge& e : edges) {
      if (e.src >= num_nodes_ || e.dst >= num_nodes_) {
        throw std::invalid_argument("edge endpoint out of range");
      }
      if (e.src == e.dst) throw std::invalid_argument("self-loop");
      if (!labels_.emplace(edge_key(e), s).second) {
        throw std::invalid_argument("ordered pair (" + std::to_string(e.src) + "," + std::to_string(e.dst) +
                                    ") appears more than once");
      }
    }
  };
  add(pos_, EdgeSign::Positive);
  add(neg_, EdgeSign::Negative);
  add(unl_, EdgeSign::Unlabeled);

  std::vector<Edge> all;
  all.reserve(num_edges());
  all.insert(all.end(), pos_.begin(), pos_.end());
  all.insert(all.end(), neg_.begin(), neg_.end());
  all.insert(all.end(), unl_.begin(), unl_.end());
  build_csr(num_nodes_, all, true, out_offsets_, out_targets_);
  build_csr(num_nodes_, all, false, in_offsets_, in_sources_);
}

SignedDigraph SignedDigraph::from_signed(std::size_t num_nodes, std::span<const SignedEdge> labeled,
                                         std::span<const Edge> unlabeled) {
  std::vector<Edge> pos, neg;
  for (const SignedEdge& se : labeled) {
    if (se.sign > 0) {
      pos.push_back(se.edge);
    } else {
      neg.push_back(se.edge);
    }
  }
  return SignedDigraph(num_nodes, std::move(pos), std::move(neg), {unlabeled.begin(), unlabeled.end()});
}

std::vector<SignedEdge> SignedDigraph::labeled_edges() const {
  std::vector<SignedEdge> out;
  out.reserve(num_labeled());
  for (const Edge& e : pos_) out.push_back({e, 1});
  for (const Edge& e : neg_) out.push_back({e, -1});
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<EdgeSign> SignedDigraph::label(NodeId u, NodeId v) const {
  auto it = labels_.find(edge_key({u, v}));
  if (it == labels_.end()) return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------------------------

int binarize_rating(int rating) {
  if (rating == 0) throw std::invalid_argument("zero rating has no sign");
  return rating > 0 ? 1 : -1;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  const bool csv = line.find(',') != std::string_view::npos;
  std::size_t i = 0;
  while (i <= line.size()) {
    if (csv) {
      const std::size_t j = std::min(line.find(',', i), line.size());
      std::string_view f = line.substr(i, j - i);
      while (!f.empty() && std::isspace(static_cast<unsigned char>(f.front()))) f.remove_prefix(1);
      while (!f.empty() && std::isspace(static_cast<unsigned char>(f.back()))) f.remove_suffix(1);
      fields.push_back(f);
      i = j + 1;
    } else {
      while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      if (i >= line.size()) break;
      std::size_t j = i;
      while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
      fields.push_back(line.substr(i, j - i));
      i = j;
    }
  }
  return fields;
}

std::optional<long long> parse_integer(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace

ParsedGraph parse_edge_list(std::istream& in, ValueKind kind) {
  struct Record {
    std::string src, dst;
    EdgeSign sign;
  };
  ParsedGraph result;
  std::vector<Record> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    if (view.find_first_not_of(" \t\r\n") == std::string_view::npos) continue;
    const auto fields = split_fields(view);
    if (fields.size() < 3) throw ParseError(line_no, "expected at least 3 fields (src, dst, value)");
    if (fields[0].empty() || fields[1].empty()) throw ParseError(line_no, "empty node id");
    const auto value = parse_integer(fields[2]);
    if (!value) throw ParseError(line_no, "value '" + std::string(fields[2]) + "' is not an integer");
    ++result.stats.records;

    EdgeSign sign;
    if (kind == ValueKind::Sign) {
      if (*value < -1 || *value > 1) throw ParseError(line_no, "sign must be one of -1, 0, +1");
      sign = static_cast<EdgeSign>(*value);
    } else {
      if (*value == 0) {
        ++result.stats.zero_ratings_dropped;
        continue;
      }
      sign = binarize_rating(static_cast<int>(*value)) > 0 ? EdgeSign::Positive : EdgeSign::Negative;
    }
    if (fields[0] == fields[1]) {
      ++result.stats.self_loops_dropped;
      continue;
    }
    records.push_back({std::string(fields[0]), std::string(fields[1]), sign});
  }

  // Node compaction.
  std::vector<std::string> first_seen;
  std::unordered_map<std::string, NodeId> ids;
  for (const Record& r : records) {
    for (const std::string* tok : {&r.src, &r.dst}) {
      if (ids.emplace(*tok, 0).second) first_seen.push_back(*tok);
    }
  }
  const bool numeric =
      std::all_of(first_seen.begin(), first_seen.end(), [](const std::string& s) { return parse_integer(s).has_value(); });
  if (numeric) {
    std::stable_sort(first_seen.begin(), first_seen.end(), [](const std::string& a, const std::string& b) {
      return *parse_integer(a) < *parse_integer(b);
    });
  }
  for (std::size_t i = 0; i < first_seen.size(); ++i) ids[first_seen[i]] = static_cast<NodeId>(i);

  std::unordered_map<std::uint64_t, EdgeSign> last;
  for (const Record& r : records) {
    const Edge e{ids[r.src], ids[r.dst]};
    auto [it, inserted] = last.insert_or_assign(edge_key(e), r.sign);
    if (!inserted) ++result.stats.duplicates_replaced;
  }
  std::vector<Edge> pos, neg, unl;
  for (const auto& [key, sign] : last) {
    const Edge e{static_cast<NodeId>(key >> 32), static_cast<NodeId>(key & 0xffffffffu)};
    (sign == EdgeSign::Positive ? pos : sign == EdgeSign::Negative ? neg : unl).push_back(e);
  }
  result.graph = SignedDigraph(first_seen.size(), std::move(pos), std::move(neg), std::move(unl));
  result.node_names = std::move(first_seen);
  return result;
}

ParsedGraph read_edge_list(const std::filesystem::path& path, ValueKind kind) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return parse_edge_list(in, kind);
}

void write_canonical(std::ostream& out, const SignedDigraph& g) {
  struct Row {
    Edge e;
    int s;
  };
  std::vector<Row> rows;
  rows.reserve(g.num_edges());
  for (const Edge& e : g.positive_edges()) rows.push_back({e, 1});
  for (const Edge& e : g.negative_edges()) rows.push_back({e, -1});
  for (const Edge& e : g.unlabeled_edges()) rows.push_back({e, 0});
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.e < b.e; });
  out << "# signed digraph: nodes=" << g.num_nodes() << " edges=" << g.num_edges() << '\n';
  for (const Row& r : rows) out << r.e.src << ' ' << r.e.dst << ' ' << r.s << '\n';
}

nlohmann::json graph_sidecar(const ParsedGraph& parsed) {
  const SignedDigraph& g = parsed.graph;
  return {
      {"num_nodes", g.num_nodes()},
      {"num_positive", g.positive_edges().size()},
      {"num_negative", g.negative_edges().size()},
      {"num_unlabeled", g.unlabeled_edges().size()},
      {"records", parsed.stats.records},
      {"self_loops_dropped", parsed.stats.self_loops_dropped},
      {"zero_ratings_dropped", parsed.stats.zero_ratings_dropped},
      {"duplicates_replaced", parsed.stats.duplicates_replaced},
      {"id_map", parsed.node_names},
  };
}

// ---------------------------------------------------------------------------

SplitDataset split_dataset(const SignedDigraph& g, std::uint64_t seed, SplitFractions fractions) {
  if (!g.unlabeled_edges().empty()) {
    throw std::invalid_argument("split_dataset expects a fully labeled graph");
  }
  const auto in_unit = [](double f) { return f >= 0.0 && f < 1.0; };
  if (!in_unit(fractions.val) || !in_unit(fractions.test) || !in_unit(fractions.unlabeled) ||
      fractions.val + fractions.test >= 1.0) {
    throw std::invalid_argument("split fractions must lie in [0,1) with val + test < 1");
  }
  std::vector<SignedEdge> edges = g.labeled_edges();
  if (edges.size() < 4) throw std::invalid_argument("need at least 4 labeled edges to split");

  Rng rng(seed);
  rng.shuffle(std::span(edges));

  const std::size_t n = edges.size();
  const std::size_t n_val = floor_fraction(fractions.val, n);
  const std::size_t n_test = floor_fraction(fractions.test, n);
  const std::size_t rest = n - n_val - n_test;
  const std::size_t n_unl = floor_fraction(fractions.unlabeled, rest);

  SplitDataset s;
  s.num_nodes = g.num_nodes();
  s.seed = seed;
  s.fractions = fractions;
  auto it = edges.begin();
  auto take = [&](std::size_t k) {
    std::vector<SignedEdge> part(it, it + static_cast<std::ptrdiff_t>(k));
    it += static_cast<std::ptrdiff_t>(k);
    std::sort(part.begin(), part.end());
    return part;
  };
  s.val = take(n_val);
  s.test = take(n_test);
  std::vector<SignedEdge> unl = take(n_unl);
  s.train_labeled = take(rest - n_unl);
  for (const SignedEdge& se : unl) {
    s.train_unlabeled.push_back(se.edge);
    s.unlabeled_truth.push_back(se.sign);
  }
  return s;
}

SplitDataset inject_noise(SplitDataset split, const NoiseSpec& spec) {
  if (!(spec.flip_fraction >= 0.0 && spec.flip_fraction <= 1.0)) {
    throw std::invalid_argument("flip fraction must lie in [0,1]");
  }
  const std::size_t n = split.train_labeled.size();
  const auto k = static_cast<std::size_t>(std::llround(spec.flip_fraction * static_cast<double>(n)));
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(spec.seed);
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.index(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  for (std::size_t i : idx) split.train_labeled[i].sign = -split.train_labeled[i].sign;
  split.flip_fraction = spec.flip_fraction;
  split.noise_seed = spec.seed;
  split.flipped = std::move(idx);
  return split;
}

SplitDataset subsample_unlabeled(SplitDataset split, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw std::invalid_argument("fraction must lie in [0,1]");
  const std::size_t n = split.train_unlabeled.size();
  const std::size_t keep = floor_fraction(fraction, n);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  rng.shuffle(std::span(idx));
  idx.resize(keep);
  std::sort(idx.begin(), idx.end());
  std::vector<Edge> edges;
  std::vector<int> truth;
  for (std::size_t i : idx) {
    edges.push_back(split.train_unlabeled[i]);
    truth.push_back(split.unlabeled_truth[i]);
  }
  split.train_unlabeled = std::move(edges);
  split.unlabeled_truth = std::move(truth);
  return split;
}

SignedDigraph training_graph(const SplitDataset& split) {
  return SignedDigraph::from_signed(split.num_nodes, split.train_labeled, split.train_unlabeled);
}

std::string flip_digest(const SplitDataset& split) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (std::size_t i : split.flipped) {
    const std::uint64_t k = edge_key(split.train_labeled[i].edge);
    for (int b = 0; b < 8; ++b) {
      h ^= (k >> (8 * b)) & 0xffu;
      h *= 0x100000001b3ULL;
    }
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

nlohmann::json split_manifest(const SplitDataset& split) {
  auto signed_list = [](const std::vector<SignedEdge>& edges) {
    nlohmann::json arr = nlohmann::json::array();
    for (const SignedEdge& se : edges) arr.push_back({se.edge.src, se.edge.dst, se.sign});
    return arr;
  };
  nlohmann::json unl = nlohmann::json::array();
  for (std::size_t i = 0; i < split.train_unlabeled.size(); ++i) {
    const Edge& e = split.train_unlabeled[i];
    unl.push_back({e.src, e.dst, split.unlabeled_truth[i]});
  }
  return {
      {"num_nodes", split.num_nodes},
      {"seed", split.seed},
      {"fractions", {{"val", split.fractions.val}, {"test", split.fractions.test}, {"unlabeled", split.fractions.unlabeled}}},
      {"noise", {{"flip_fraction", split.flip_fraction}, {"seed", split.noise_seed}, {"flips", split.flipped.size()},
                 {"digest", flip_digest(split)}}},
      {"counts",
       {{"train_labeled", split.train_labeled.size()},
        {"train_unlabeled", split.train_unlabeled.size()},
        {"val", split.val.size()},
        {"test", split.test.size()}}},
      {"train_labeled", signed_list(split.train_labeled)},
      {"train_unlabeled", unl},
      {"val", signed_list(split.val)},
      {"test", signed_list(split.test)},
      {"flipped", split.flipped},
  };
}

SplitDataset split_from_manifest(const nlohmann::json& j) {
  try {
    SplitDataset s;
    s.num_nodes = j.at("num_nodes").get<std::size_t>();
    s.seed = j.at("seed").get<std::uint64_t>();
    const auto& f = j.at("fractions");
    s.fractions = {f.at("val").get<double>(), f.at("test").get<double>(), f.at("unlabeled").get<double>()};
    s.flip_fraction = j.at("noise").at("flip_fraction").get<double>();
    s.noise_seed = j.at("noise").at("seed").get<std::uint64_t>();
    auto read_signed = [&](const char* key) {
      std::vector<SignedEdge> out;
      for (const auto& t : j.at(key)) {
        const SignedEdge se{{t.at(0).get<NodeId>(), t.at(1).get<NodeId>()}, t.at(2).get<int>()};
        if (se.edge.src >= s.num_nodes || se.edge.dst >= s.num_nodes || (se.sign != 1 && se.sign != -1)) {
          throw std::invalid_argument(std::string("bad edge in ") + key);
        }
        out.push_back(se);
      }
      return out;
    };
    s.train_labeled = read_signed("train_labeled");
    s.val = read_signed("val");
    s.test = read_signed("test");
    for (const SignedEdge& se : read_signed("train_unlabeled")) {
      s.train_unlabeled.push_back(se.edge);
      s.unlabeled_truth.push_back(se.sign);
    }
    s.flipped = j.at("flipped").get<std::vector<std::size_t>>();
    for (std::size_t i : s.flipped) {
      if (i >= s.train_labeled.size()) throw std::invalid_argument("flipped index out of range");
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed split manifest: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

UndirectedGraph::UndirectedGraph(std::size_t num_nodes, std::vector<WeightedEdge> edges) : num_nodes_(num_nodes) {
  std::map<std::pair<NodeId, NodeId>, double> merged;
  for (const WeightedEdge& e : edges) {
    if (e.a >= num_nodes || e.b >= num_nodes) throw std::invalid_argument("edge endpoint out of range");
    if (e.a == e.b) throw std::invalid_argument("self-loop in undirected graph");
    if (!(e.weight >= 0.0)) throw std::invalid_argument("negative edge weight");
    merged[{std::min(e.a, e.b), std::max(e.a, e.b)}] += e.weight;
  }
  edges_.reserve(merged.size());
  for (const auto& [key, w] : merged) edges_.push_back({key.first, key.second, w});

  offsets_.assign(num_nodes + 1, 0);
  for (const WeightedEdge& e : edges_) {
    ++offsets_[e.a + 1];
    ++offsets_[e.b + 1];
  }
  std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
  adj_.resize(2 * edges_.size());
  degree_.assign(num_nodes, 0.0);
  std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
  for (const WeightedEdge& e : edges_) {
    adj_[cursor[e.a]++] = {e.b, e.weight};
    adj_[cursor[e.b]++] = {e.a, e.weight};
    degree_[e.a] += e.weight;
    degree_[e.b] += e.weight;
    total_weight_ += e.weight;
  }
}

UndirectedGraph unsigned_projection(const SignedDigraph& g) {
  std::vector<WeightedEdge> edges;
  edges.reserve(g.num_edges());
  for (auto set : {g.positive_edges(), g.negative_edges(), g.unlabeled_edges()}) {
    for (const Edge& e : set) edges.push_back({e.src, e.dst, 1.0});
  }
  return UndirectedGraph(g.num_nodes(), std::move(edges));
}

}  // namespace msb
